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

#ifndef QSR_QUANT_HPP_
#define QSR_QUANT_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "qsr/graph.hpp"
#include "qsr/quant_params.hpp"
#include "qsr/tensor.hpp"

namespace qsr {

// Integer tensor with its quantization parameters. Storage is int32 for
// uniformity (weights are in [-127,127], activations in [0,255], biases use
// the full width); the integer inference engine repacks to 8 bits.
struct QTensor {
  TensorShape shape;
  std::vector<std::int32_t> data;
  QuantParams qp;
};

// Affine parameters for a [min, max] range (expanded to contain zero).
// scale = (max-min)/255, zero_point = round(qmin - min/scale), clamped.
// A degenerate [0, 0] range falls back to scale 1, zero_point qmin.
QuantParams compute_qparams(float min_value, float max_value, bool is_signed);

// Per-output-channel symmetric signed parameters for a weight tensor
// (scale_c = absmax_c / 127, zero points all 0).
QuantParams weight_qparams_per_channel(const Tensor& weights);

QTensor quantize(const Tensor& t, const QuantParams& qp);
Tensor dequantize(const QTensor& q);

// Quantize-then-dequantize in float: forward of the QAT simulation.
Tensor fake_quant(const Tensor& t, const QuantParams& qp);
// Straight-through gradient: upstream grad inside the representable range,
// zero where the quantizer clamps.
Tensor fake_quant_backward(const Tensor& input, const QuantParams& qp,
                           const Tensor& grad_out);
// Weight simulation used during QAT: per-channel symmetric parameters are
// recomputed from the current weights on every call.
Tensor fake_quant_weights(const Tensor& weights);

// --- calibration -------------------------------------------------------------

struct CalibrationStats {
  enum class Mode { kMinMax, kEma };

  Mode mode = Mode::kMinMax;
  double ema_decay = 0.99;
  // node id -> observed output range
  std::map<int, std::pair<double, double>> ranges;

  void observe(int node, const Tensor& t);
  bool covers(int node) const { return ranges.count(node) != 0; }
};

// Runs the float model over the calibration images and records per-node
// output ranges. Throws QuantError on an empty calibration set.
CalibrationStats calibrate(const ModelGraph& g,
                           const std::vector<Tensor>& images,
                           CalibrationStats::Mode mode =
                               CalibrationStats::Mode::kMinMax);

// Walks back from the graph output through pure data-movement nodes
// (depth/space reshapes, stacking, nearest upsampling) to the node whose
// values the network actually emits. That node's quantization is pinned to
// scale 1, zero point 0, unsigned, so dequantizing the output is the
// identity map on [0, 255].
int output_value_node(const ModelGraph& g);

// --- QAT graph transforms ----------------------------------------------------

// Copy of the graph with fake-quant nodes inserted after every value-producing
// node (activation ranges frozen from the calibration stats) and weight
// simulation enabled on all convolutions.
ModelGraph prepare_qat(const ModelGraph& g, const CalibrationStats& stats);

// Removes fake-quant nodes. When stats_out is non-null it receives the ranges
// the fake-quant nodes carried, keyed by node id of the stripped graph.
ModelGraph strip_fake_quant(const ModelGraph& g,
                            CalibrationStats* stats_out = nullptr);

}  // namespace qsr

#endif  // QSR_QUANT_HPP_
