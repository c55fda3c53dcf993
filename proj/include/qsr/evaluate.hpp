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

#ifndef QSR_EVALUATE_HPP_
#define QSR_EVALUATE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "qsr/dataset.hpp"
#include "qsr/metrics.hpp"

namespace qsr {

struct EvalReport {
  double psnr_db = 0.0;  // +infinity is reported as the 99.0 sentinel
  double ssim = 0.0;
  double runtime_ms = 0.0;
  double delta_psnr_db = 0.0;
  double delta_ssim = 0.0;
  double score = 0.0;
  std::int64_t model_size_bytes = 0;

  std::string to_json() const;
  std::string to_table() const;
};

using ForwardFn = std::function<Tensor(const Tensor&)>;

struct EvalOptions {
  int runs = 20;             // timed passes after one warm-up
  int input_multiple = 1;    // crop pairs for nets with divisibility needs
  int bench_width = 640;     // runtime measured upscaling this input
  int bench_height = 360;
  std::uint64_t bench_seed = 0;
};

// Fidelity first (per-image metrics, then the mean over images, in stem
// order), then the runtime median, then the challenge score under the
// winner-calibrated constant.
EvalReport evaluate(const ForwardFn& forward,
                    const std::vector<ImagePair>& pairs,
                    const EvalOptions& options = {});

// Median wall time (and p90) of forward passes on a random
// bench_width x bench_height input, excluding one warm-up pass.
struct BenchResult {
  double median_ms = 0.0;
  double p90_ms = 0.0;
  int runs = 0;
};
BenchResult benchmark_forward(const ForwardFn& forward,
                              const EvalOptions& options = {});

}  // namespace qsr

#endif  // QSR_EVALUATE_HPP_
