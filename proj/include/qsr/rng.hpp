// Copyright 2026 The QSRKit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSR_RNG_HPP_
#define QSR_RNG_HPP_

#include <cstdint>
#include <random>

namespace qsr {

// Seeded RNG with fixed sampling routines. Distribution code is written out
// here (not taken from <random>) so a toolchain switch cannot silently change
// trained results or golden test values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float uniform_float(float lo, float hi) {
    return static_cast<float>(uniform(lo, hi));
  }

  // Uniform integer in [0, n). n must be >= 1.
  std::int64_t uniform_int(std::int64_t n) {
    // Modulo bias is below 2^-40 for the ranges used here.
    return static_cast<std::int64_t>(gen_() % static_cast<std::uint64_t>(n));
  }

  bool coin() { return (gen_() & 1u) != 0; }

  // Independent child stream, e.g. one per worker or per epoch.
  Rng fork(std::uint64_t salt) {
    return Rng(gen_() ^ (salt * 0x9e3779b97f4a7c15ull));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qsr

#endif  // QSR_RNG_HPP_
