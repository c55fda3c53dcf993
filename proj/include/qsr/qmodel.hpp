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

#ifndef QSR_QMODEL_HPP_
#define QSR_QMODEL_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "qsr/dataset.hpp"
#include "qsr/graph.hpp"
#include "qsr/quant.hpp"

namespace qsr {

// Fixed-point factor: value = multiplier / 2^shift with
// multiplier in [2^30, 2^31).
struct RequantMult {
  std::int32_t multiplier = 1 << 30;
  int shift = 30;  // multiplier/2^30 == 1
};

RequantMult requant_multiplier(double value);
// round(acc * value), round half away from zero, exact in 64-bit.
std::int32_t apply_requant(std::int64_t acc, const RequantMult& rm);

// Integer-only convolution parameters. Weights are per-output-channel
// symmetric signed 8-bit; biases are 32-bit at scale s_in * s_weight[c];
// requantization multipliers map the accumulator to the output grid.
struct QuantizedConv {
  int in_channels = 0, out_channels = 0;
  int kh = 0, kw = 0, pad = 0, groups = 1;
  std::vector<std::int8_t> weights;  // (oc, ic/groups, kh, kw)
  std::vector<float> weight_scales;  // per output channel
  std::vector<std::int32_t> bias;
  std::vector<RequantMult> requant;  // per output channel
};

// A fully-quantized model: the float graph structure plus integer
// parameters and per-node activation grids. The input and output grids are
// pinned to scale 1 / zero point 0, so 8-bit payloads are raw pixels.
struct QuantizedModel {
  ModelGraph graph;                 // conv float payloads are zeroed
  std::vector<QuantParams> act_qp;  // per node output
  std::map<int, QuantizedConv> convs;

  // Integer-only inference; the returned floats are the dequantized-identity
  // pixel values in [0, 255].
  Tensor forward(const Tensor& input) const;

  // Double-precision simulation of the same quantized arithmetic (the
  // fake-quant reference path for the integer engine).
  Tensor simulate(const Tensor& input) const;

  std::int64_t parameter_count() const;
};

// Post-training quantization from calibration statistics: per-channel
// symmetric weights, per-tensor asymmetric activations, 32-bit biases,
// precomputed requantization multipliers, pinned input/output grids.
QuantizedModel quantize_model_ptq(const ModelGraph& g,
                                  const CalibrationStats& stats);

// Fidelity drop (float metric - quantized metric) over a paired dataset.
struct AccuracyDrop {
  double delta_psnr = 0.0;
  double delta_ssim = 0.0;
};
AccuracyDrop accuracy_drop(const ModelGraph& fp, const QuantizedModel& q,
                           const std::vector<ImagePair>& pairs);

}  // namespace qsr

#endif  // QSR_QMODEL_HPP_
