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

#include "qsr/quant.hpp"

#include <algorithm>
#include <cmath>

namespace qsr {

namespace {

std::int32_t clamp_q(std::int64_t q, const QuantParams& qp) {
  return static_cast<std::int32_t>(
      std::clamp<std::int64_t>(q, qp.qmin(), qp.qmax()));
}

}  // namespace

QuantParams compute_qparams(float min_value, float max_value, bool is_signed) {
  if (min_value > max_value)
    throw QuantError("compute_qparams: min " + std::to_string(min_value) +
                     " > max " + std::to_string(max_value));
  // The range must contain zero so that zero is exactly representable.
  min_value = std::min(min_value, 0.0f);
  max_value = std::max(max_value, 0.0f);

  QuantParams qp;
  qp.is_signed = is_signed;
  if (min_value == 0.0f && max_value == 0.0f) {
    qp.scale = 1.0f;
    qp.zero_point = 0;
    return qp;
  }
  qp.scale = (max_value - min_value) / 255.0f;
  const double zp = std::round(qp.qmin() - min_value / qp.scale);
  qp.zero_point = clamp_q(static_cast<std::int64_t>(zp), qp);
  return qp;
}

QuantParams weight_qparams_per_channel(const Tensor& weights) {
  const TensorShape& s = weights.shape();
  QuantParams qp;
  qp.is_signed = true;
  qp.granularity = QuantParams::Granularity::kPerChannel;
  qp.zero_point = 0;
  qp.channel_scales.resize(s.b);
  const std::int64_t per_channel = s.c * s.h * s.w;
  for (std::int64_t oc = 0; oc < s.b; ++oc) {
    const float* w = weights.data() + oc * per_channel;
    float absmax = 0.0f;
    for (std::int64_t i = 0; i < per_channel; ++i)
      absmax = std::max(absmax, std::abs(w[i]));
    qp.channel_scales[oc] = absmax > 0.0f ? absmax / 127.0f : 1.0f;
  }
  qp.scale = qp.channel_scales.empty() ? 1.0f : qp.channel_scales[0];
  return qp;
}

QTensor quantize(const Tensor& t, const QuantParams& qp) {
  QTensor q;
  q.shape = t.shape();
  q.qp = qp;
  q.data.resize(t.numel());
  if (qp.per_channel()) {
    const TensorShape& s = t.shape();
    const std::int64_t per_channel = s.c * s.h * s.w;
    for (std::int64_t oc = 0; oc < s.b; ++oc) {
      const float scale = qp.channel_scales[oc];
      const float* src = t.data() + oc * per_channel;
      std::int32_t* dst = q.data.data() + oc * per_channel;
      for (std::int64_t i = 0; i < per_channel; ++i)
        dst[i] = clamp_q(std::llround(src[i] / scale), qp);
    }
  } else {
    const float* src = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i)
      q.data[i] =
          clamp_q(std::llround(src[i] / qp.scale) + qp.zero_point, qp);
  }
  return q;
}

Tensor dequantize(const QTensor& q) {
  Tensor t(q.shape);
  if (q.qp.per_channel()) {
    const TensorShape& s = q.shape;
    const std::int64_t per_channel = s.c * s.h * s.w;
    for (std::int64_t oc = 0; oc < s.b; ++oc) {
      const float scale = q.qp.channel_scales[oc];
      const std::int32_t* src = q.data.data() + oc * per_channel;
      float* dst = t.data() + oc * per_channel;
      for (std::int64_t i = 0; i < per_channel; ++i)
        dst[i] = static_cast<float>(src[i]) * scale;
    }
  } else {
    float* dst = t.data();
    for (std::size_t i = 0; i < q.data.size(); ++i)
      dst[i] = static_cast<float>(q.data[i] - q.qp.zero_point) * q.qp.scale;
  }
  return t;
}

Tensor fake_quant(const Tensor& t, const QuantParams& qp) {
  Tensor out(t.shape());
  const float* src = t.data();
  float* dst = out.data();
  const float scale = qp.scale;
  const std::int32_t zp = qp.zero_point;
  for (std::int64_t i = 0, n = t.numel(); i < n; ++i) {
    const std::int32_t q =
        clamp_q(std::llround(src[i] / scale) + zp, qp);
    dst[i] = static_cast<float>(q - zp) * scale;
  }
  return out;
}

Tensor fake_quant_backward(const Tensor& input, const QuantParams& qp,
                           const Tensor& grad_out) {
  Tensor out(input.shape());
  const float* x = input.data();
  const float* g = grad_out.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = input.numel(); i < n; ++i) {
    const std::int64_t q = std::llround(x[i] / qp.scale) + qp.zero_point;
    dst[i] = (q >= qp.qmin() && q <= qp.qmax()) ? g[i] : 0.0f;
  }
  return out;
}

Tensor fake_quant_weights(const Tensor& weights) {
  const QuantParams qp = weight_qparams_per_channel(weights);
  Tensor out(weights.shape());
  const TensorShape& s = weights.shape();
  const std::int64_t per_channel = s.c * s.h * s.w;
  for (std::int64_t oc = 0; oc < s.b; ++oc) {
    const float scale = qp.channel_scales[oc];
    const float* src = weights.data() + oc * per_channel;
    float* dst = out.data() + oc * per_channel;
    for (std::int64_t i = 0; i < per_channel; ++i) {
      const std::int64_t q =
          std::clamp<std::int64_t>(std::llround(src[i] / scale), -127, 127);
      dst[i] = static_cast<float>(q) * scale;
    }
  }
  return out;
}

void CalibrationStats::observe(int node, const Tensor& t) {
  float lo = 0.0f, hi = 0.0f;
  const float* p = t.data();
  for (std::int64_t i = 0, n = t.numel(); i < n; ++i) {
    lo = std::min(lo, p[i]);
    hi = std::max(hi, p[i]);
  }
  auto it = ranges.find(node);
  if (it == ranges.end()) {
    ranges[node] = {lo, hi};
  } else if (mode == Mode::kMinMax) {
    it->second.first = std::min<double>(it->second.first, lo);
    it->second.second = std::max<double>(it->second.second, hi);
  } else {
    it->second.first = ema_decay * it->second.first + (1 - ema_decay) * lo;
    it->second.second = ema_decay * it->second.second + (1 - ema_decay) * hi;
  }
}

CalibrationStats calibrate(const ModelGraph& g,
                           const std::vector<Tensor>& images,
                           CalibrationStats::Mode mode) {
  if (images.empty())
    throw QuantError("calibrate: empty calibration set");
  CalibrationStats stats;
  stats.mode = mode;
  for (const Tensor& img : images) {
    const std::vector<Tensor> trace = g.forward_trace(img);
    for (int id = 0; id < static_cast<int>(trace.size()); ++id)
      stats.observe(id, trace[id]);
  }
  return stats;
}

int output_value_node(const ModelGraph& g) {
  int id = g.output_node;
  for (;;) {
    const GraphNode& n = g.nodes[id];
    switch (n.kind) {
      case OpKind::kDepthToSpace:
      case OpKind::kSpaceToDepth:
      case OpKind::kStackRepeat:
      case OpKind::kNearestUpsample:
      case OpKind::kFakeQuant:
        id = n.inputs[0];
        break;
      default:
        return id;
    }
  }
}

ModelGraph prepare_qat(const ModelGraph& g, const CalibrationStats& stats) {
  g.validate();
  const int pinned = output_value_node(g);
  ModelGraph out;
  out.name = g.name;
  out.scale = g.scale;
  out.input_multiple = g.input_multiple;

  // Fake-quant goes after nodes that compute new values; pure data-movement
  // nodes keep their producer's grid.
  auto needs_fq = [](OpKind k) {
    switch (k) {
      case OpKind::kConv:
      case OpKind::kRelu:
      case OpKind::kClippedRelu:
      case OpKind::kAdd:
      case OpKind::kMul:
      case OpKind::kConcat:
        return true;
      default:
        return false;
    }
  };
  // A value node whose only consumer is an activation is fused with it for
  // quantization purposes, so it carries no fake-quant of its own.
  std::vector<int> consumers(g.nodes.size(), 0);
  std::vector<bool> feeds_activation(g.nodes.size(), false);
  for (const GraphNode& n : g.nodes)
    for (int in : n.inputs) {
      ++consumers[in];
      if (n.kind == OpKind::kRelu || n.kind == OpKind::kClippedRelu)
        feeds_activation[in] = true;
    }

  std::vector<int> remap(g.nodes.size(), -1);
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    GraphNode n = g.nodes[id];
    if (n.kind == OpKind::kFakeQuant)
      throw QuantError("prepare_qat: graph already contains fake-quant nodes");
    for (int& in : n.inputs) in = remap[in];
    if (n.kind == OpKind::kConv) n.fq_weights = true;
    const int new_id = out.add_node(std::move(n));
    remap[id] = new_id;

    const bool fused_away = feeds_activation[id] && consumers[id] == 1;
    if (needs_fq(g.nodes[id].kind) && !fused_away) {
      GraphNode fq;
      fq.kind = OpKind::kFakeQuant;
      fq.inputs = {new_id};
      if (id == pinned) {
        fq.fq = QuantParams{};  // scale 1, zero point 0: raw 8-bit pixels
      } else {
        if (!stats.covers(id))
          throw QuantError("prepare_qat: no calibration range for node " +
                           std::to_string(id) + " (" +
                           op_kind_name(g.nodes[id].kind) + ")");
        const auto [lo, hi] = stats.ranges.at(id);
        fq.fq = compute_qparams(static_cast<float>(lo),
                                static_cast<float>(hi), /*is_signed=*/false);
      }
      remap[id] = out.add_node(std::move(fq));
    }
  }
  out.output_node = remap[g.output_node];
  out.validate();
  return out;
}

ModelGraph strip_fake_quant(const ModelGraph& g, CalibrationStats* stats_out) {
  ModelGraph out;
  out.name = g.name;
  out.scale = g.scale;
  out.input_multiple = g.input_multiple;
  std::vector<int> remap(g.nodes.size(), -1);
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const GraphNode& n = g.nodes[id];
    if (n.kind == OpKind::kFakeQuant) {
      remap[id] = remap[n.inputs[0]];
      if (stats_out) {
        const QuantParams& qp = n.fq;
        const double lo = (qp.qmin() - qp.zero_point) * double(qp.scale);
        const double hi = (qp.qmax() - qp.zero_point) * double(qp.scale);
        stats_out->ranges[remap[id]] = {lo, hi};
      }
      continue;
    }
    GraphNode copy = n;
    copy.fq_weights = false;
    for (int& in : copy.inputs) in = remap[in];
    remap[id] = out.add_node(std::move(copy));
  }
  out.output_node = remap[g.output_node];
  out.validate();
  return out;
}

}  // namespace qsr
