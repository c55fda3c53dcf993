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

#ifndef QSR_QUANT_PARAMS_HPP_
#define QSR_QUANT_PARAMS_HPP_

#include <cstdint>
#include <vector>

namespace qsr {

// Affine 8-bit quantization parameters: real = (q - zero_point) * scale.
// Per-channel granularity (weights only) stores one scale per output channel
// and keeps every zero point at 0 (symmetric).
struct QuantParams {
  enum class Granularity : std::uint8_t { kPerTensor = 0, kPerChannel = 1 };

  float scale = 1.0f;
  std::int32_t zero_point = 0;
  int bits = 8;
  bool is_signed = false;
  Granularity granularity = Granularity::kPerTensor;
  std::vector<float> channel_scales;

  std::int32_t qmin() const { return is_signed ? -128 : 0; }
  std::int32_t qmax() const { return is_signed ? 127 : 255; }

  bool per_channel() const {
    return granularity == Granularity::kPerChannel;
  }
};

}  // namespace qsr

#endif  // QSR_QUANT_PARAMS_HPP_
