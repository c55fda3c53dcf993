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

#include "qsr/qmodel.hpp"

#include <algorithm>
#include <cmath>

#include "qsr/metrics.hpp"
#include "qsr/parallel.hpp"

namespace qsr {

namespace {

constexpr std::int64_t kMaxAccumTerms = 1 << 15;  // see requant notes below

// With unsigned activations and symmetric signed weights each product is
// bounded by 255*127 < 2^15; at most 2^15 accumulation terms plus a bias
// bounded by 2^30 keep the int32 accumulator overflow-free.
void check_accumulator_bound(const ConvSpec& conv) {
  const std::int64_t terms =
      std::int64_t(conv.kh) * conv.kw * (conv.in_channels / conv.groups);
  if (terms > kMaxAccumTerms)
    throw QuantError(
        "conv with " + std::to_string(terms) +
        " accumulation terms exceeds the int32 overflow bound of " +
        std::to_string(kMaxAccumTerms));
}

bool is_permutation(OpKind k) {
  switch (k) {
    case OpKind::kDepthToSpace:
    case OpKind::kSpaceToDepth:
    case OpKind::kStackRepeat:
    case OpKind::kNearestUpsample:
      return true;
    default:
      return false;
  }
}

bool is_activation(OpKind k) {
  return k == OpKind::kRelu || k == OpKind::kClippedRelu;
}

std::int32_t round_half_away(double v) {
  return static_cast<std::int32_t>(std::llround(v));
}

// Quantized buffer per node: 8-bit payload plus its shape.
struct QBuf {
  TensorShape shape;
  std::vector<std::uint8_t> data;

  QBuf() = default;
  explicit QBuf(TensorShape s)
      : shape(s), data(static_cast<std::size_t>(s.numel())) {}
};

// Element index movement shared by both the integer path and the double
// simulation; T is uint8_t or double.
template <typename T>
void move_depth_to_space(const std::vector<T>& src, const TensorShape& s,
                         int block, std::vector<T>& dst, TensorShape& out_s) {
  const std::int64_t bb = std::int64_t(block) * block;
  out_s = {s.b, s.c / bb, s.h * block, s.w * block};
  dst.resize(out_s.numel());
  const std::int64_t in_plane = s.h * s.w;
  const std::int64_t out_plane = out_s.h * out_s.w;
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < out_s.c; ++c)
      for (int dy = 0; dy < block; ++dy)
        for (int dx = 0; dx < block; ++dx) {
          const T* sp = src.data() +
                        ((n * s.c + c * bb + dy * block + dx)) * in_plane;
          T* dp = dst.data() + (n * out_s.c + c) * out_plane;
          for (std::int64_t y = 0; y < s.h; ++y)
            for (std::int64_t x = 0; x < s.w; ++x)
              dp[(y * block + dy) * out_s.w + x * block + dx] =
                  sp[y * s.w + x];
        }
}

template <typename T>
void move_space_to_depth(const std::vector<T>& src, const TensorShape& s,
                         int block, std::vector<T>& dst, TensorShape& out_s) {
  if (s.h % block != 0 || s.w % block != 0)
    throw ShapeError("space_to_depth: spatial axes not divisible by block");
  const std::int64_t bb = std::int64_t(block) * block;
  out_s = {s.b, s.c * bb, s.h / block, s.w / block};
  dst.resize(out_s.numel());
  const std::int64_t in_plane = s.h * s.w;
  const std::int64_t out_plane = out_s.h * out_s.w;
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (int dy = 0; dy < block; ++dy)
        for (int dx = 0; dx < block; ++dx) {
          T* dp = dst.data() +
                  (n * out_s.c + c * bb + dy * block + dx) * out_plane;
          const T* sp = src.data() + (n * s.c + c) * in_plane;
          for (std::int64_t y = 0; y < out_s.h; ++y)
            for (std::int64_t x = 0; x < out_s.w; ++x)
              dp[y * out_s.w + x] =
                  sp[(y * block + dy) * s.w + x * block + dx];
        }
}

template <typename T>
void move_stack_repeat(const std::vector<T>& src, const TensorShape& s, int n,
                       std::vector<T>& dst, TensorShape& out_s) {
  out_s = {s.b, s.c * n, s.h, s.w};
  dst.resize(out_s.numel());
  const std::int64_t plane = s.h * s.w;
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (int r = 0; r < n; ++r)
        std::copy(src.data() + (b * s.c + c) * plane,
                  src.data() + (b * s.c + c + 1) * plane,
                  dst.data() + (b * out_s.c + c * n + r) * plane);
}

template <typename T>
void move_nearest(const std::vector<T>& src, const TensorShape& s, int f,
                  std::vector<T>& dst, TensorShape& out_s) {
  out_s = {s.b, s.c, s.h * f, s.w * f};
  dst.resize(out_s.numel());
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* sp = src.data() + (b * s.c + c) * s.h * s.w;
      T* dp = dst.data() + (b * s.c + c) * out_s.h * out_s.w;
      for (std::int64_t y = 0; y < out_s.h; ++y)
        for (std::int64_t x = 0; x < out_s.w; ++x)
          dp[y * out_s.w + x] = sp[(y / f) * s.w + x / f];
    }
}

// Fixed-point operand factors for add: 2^36 granularity keeps the combined
// sum one single rounding away from the real result.
constexpr int kAddShift = 36;

std::int64_t add_factor(double ratio) {
  if (ratio > 512.0)
    throw QuantError("add: operand/output scale ratio too large");
  return std::llround(ratio * std::exp2(kAddShift));
}

std::int32_t rounding_shift(std::int64_t acc, int shift) {
  if (shift <= 0) return static_cast<std::int32_t>(acc << -shift);
  if (shift >= 63) return 0;
  const std::int64_t half = std::int64_t(1) << (shift - 1);
  if (acc >= 0) return static_cast<std::int32_t>((acc + half) >> shift);
  return static_cast<std::int32_t>(-((-acc + half) >> shift));
}

}  // namespace

RequantMult requant_multiplier(double value) {
  if (!(value > 0.0))
    throw QuantError("requant_multiplier: factor must be positive");
  int exp = 0;
  const double frac = std::frexp(value, &exp);  // value = frac * 2^exp
  auto m = static_cast<std::int64_t>(std::llround(frac * std::exp2(31)));
  if (m == (std::int64_t(1) << 31)) {
    m /= 2;
    ++exp;
  }
  RequantMult rm;
  rm.multiplier = static_cast<std::int32_t>(m);
  rm.shift = 31 - exp;
  return rm;
}

std::int32_t apply_requant(std::int64_t acc, const RequantMult& rm) {
  return rounding_shift(acc * rm.multiplier, rm.shift);
}

QuantizedModel quantize_model_ptq(const ModelGraph& g,
                                  const CalibrationStats& stats) {
  g.validate();
  for (const GraphNode& n : g.nodes)
    if (n.kind == OpKind::kFakeQuant)
      throw QuantError(
          "quantize_model_ptq: strip fake-quant nodes before quantizing");

  QuantizedModel qm;
  qm.graph = g;
  const int n_nodes = static_cast<int>(g.nodes.size());
  qm.act_qp.resize(n_nodes);

  // Value nodes get their calibrated grid; the input and the node feeding
  // the output (through permutations) are pinned to raw pixels.
  const int pinned = output_value_node(g);
  for (int id = 0; id < n_nodes; ++id) {
    const GraphNode& n = g.nodes[id];
    if (n.kind == OpKind::kInput || id == pinned) {
      qm.act_qp[id] = QuantParams{};  // scale 1, zero point 0, unsigned
      continue;
    }
    if (is_permutation(n.kind)) continue;  // resolved below
    if (!stats.covers(id))
      throw QuantError("quantize_model_ptq: no calibration range for node " +
                       std::to_string(id) + " (" + op_kind_name(n.kind) + ")");
    const auto [lo, hi] = stats.ranges.at(id);
    qm.act_qp[id] = compute_qparams(static_cast<float>(lo),
                                    static_cast<float>(hi), false);
  }
  // A value node consumed only by an activation shares the activation's grid
  // (the conv clamps into it for free and the activation becomes a clamp).
  std::vector<int> consumers(n_nodes, 0);
  std::vector<int> act_consumer(n_nodes, -1);
  for (int id = 0; id < n_nodes; ++id)
    for (int in : g.nodes[id].inputs) {
      ++consumers[in];
      if (is_activation(g.nodes[id].kind)) act_consumer[in] = id;
    }
  for (int id = 0; id < n_nodes; ++id)
    if (id != pinned && act_consumer[id] >= 0 && consumers[id] == 1 &&
        !is_permutation(g.nodes[id].kind) &&
        g.nodes[id].kind != OpKind::kInput)
      qm.act_qp[id] = qm.act_qp[act_consumer[id]];
  for (int id = 0; id < n_nodes; ++id)
    if (is_permutation(g.nodes[id].kind))
      qm.act_qp[id] = qm.act_qp[g.nodes[id].inputs[0]];

  // Integer parameters per convolution.
  for (int id : g.conv_node_ids()) {
    const GraphNode& n = g.nodes[id];
    check_accumulator_bound(n.conv);
    const float s_in = qm.act_qp[n.inputs[0]].scale;
    const float s_out = qm.act_qp[id].scale;

    QuantizedConv qc;
    qc.in_channels = n.conv.in_channels;
    qc.out_channels = n.conv.out_channels;
    qc.kh = n.conv.kh;
    qc.kw = n.conv.kw;
    qc.pad = n.conv.pad_h();
    qc.groups = n.conv.groups;

    const QuantParams wq = weight_qparams_per_channel(n.conv.weights);
    qc.weight_scales = wq.channel_scales;
    const std::int64_t per_channel = n.conv.weights.shape().c *
                                     n.conv.weights.shape().h *
                                     n.conv.weights.shape().w;
    qc.weights.resize(n.conv.weights.numel());
    for (int oc = 0; oc < qc.out_channels; ++oc) {
      const float ws = qc.weight_scales[oc];
      const float* src = n.conv.weights.data() + oc * per_channel;
      for (std::int64_t i = 0; i < per_channel; ++i)
        qc.weights[oc * per_channel + i] = static_cast<std::int8_t>(
            std::clamp<long>(std::lround(src[i] / ws), -127, 127));
    }
    qc.bias.resize(qc.out_channels);
    qc.requant.resize(qc.out_channels);
    for (int oc = 0; oc < qc.out_channels; ++oc) {
      const double bias_scale = double(s_in) * qc.weight_scales[oc];
      const double bq = std::round(n.conv.bias[oc] / bias_scale);
      if (std::abs(bq) > double(std::int64_t(1) << 30))
        throw QuantError("quantized bias exceeds the accumulator headroom");
      qc.bias[oc] = static_cast<std::int32_t>(bq);
      qc.requant[oc] = requant_multiplier(bias_scale / s_out);
    }
    qm.convs.emplace(id, std::move(qc));
  }

  // The fully-quantized artifact carries no float weight payloads.
  for (int id : qm.graph.conv_node_ids()) {
    auto& w = qm.graph.nodes[id].conv.weights.vec();
    std::fill(w.begin(), w.end(), 0.0f);
    auto& b = qm.graph.nodes[id].conv.bias;
    std::fill(b.begin(), b.end(), 0.0f);
  }
  return qm;
}

Tensor QuantizedModel::forward(const Tensor& input) const {
  graph.validate();
  const int n_nodes = static_cast<int>(graph.nodes.size());
  std::vector<QBuf> bufs(n_nodes);

  for (int id = 0; id < n_nodes; ++id) {
    const GraphNode& n = graph.nodes[id];
    const QuantParams& out_qp = act_qp[id];
    switch (n.kind) {
      case OpKind::kInput: {
        QBuf q(input.shape());
        const float* src = input.data();
        for (std::int64_t i = 0; i < input.numel(); ++i)
          q.data[i] = static_cast<std::uint8_t>(std::clamp<long>(
              std::lround(src[i] / out_qp.scale) + out_qp.zero_point, 0, 255));
        bufs[id] = std::move(q);
        break;
      }
      case OpKind::kConv: {
        const QBuf& in = bufs[n.inputs[0]];
        const QuantizedConv& qc = convs.at(id);
        const QuantParams& in_qp = act_qp[n.inputs[0]];
        const TensorShape& s = in.shape;
        QBuf out(TensorShape{s.b, qc.out_channels, s.h, s.w});

        // Hoist the zero-point subtraction; products then fit int16 x int8.
        std::vector<std::int16_t> centered(in.data.size());
        const std::int32_t zi = in_qp.zero_point;
        for (std::size_t i = 0; i < in.data.size(); ++i)
          centered[i] = static_cast<std::int16_t>(in.data[i] - zi);

        const std::int32_t zo = out_qp.zero_point;
        const int icg = qc.in_channels / qc.groups;
        const int ocg = qc.out_channels / qc.groups;
        const std::int64_t kk = std::int64_t(icg) * qc.kh * qc.kw;
        const std::int64_t plane = s.h * s.w;
        parallel_for(s.b * qc.out_channels, [&](std::int64_t task) {
          const std::int64_t b = task / qc.out_channels;
          const int oc = static_cast<int>(task % qc.out_channels);
          const int gr = oc / ocg;
          const std::int8_t* w = qc.weights.data() + oc * kk;
          std::uint8_t* dst = out.data.data() + (b * qc.out_channels + oc) * plane;
          const RequantMult rm = qc.requant[oc];
          for (std::int64_t oy = 0; oy < s.h; ++oy)
            for (std::int64_t ox = 0; ox < s.w; ++ox) {
              std::int32_t acc = qc.bias[oc];
              const std::int8_t* wp = w;
              for (int ic = 0; ic < icg; ++ic) {
                const std::int16_t* in_plane =
                    centered.data() + (b * s.c + gr * icg + ic) * plane;
                for (int ky = 0; ky < qc.kh; ++ky) {
                  const std::int64_t sy = oy + ky - qc.pad;
                  if (sy < 0 || sy >= s.h) {
                    wp += qc.kw;
                    continue;
                  }
                  const std::int16_t* row = in_plane + sy * s.w;
                  for (int kx = 0; kx < qc.kw; ++kx, ++wp) {
                    const std::int64_t sx = ox + kx - qc.pad;
                    if (sx < 0 || sx >= s.w) continue;
                    acc += std::int32_t(row[sx]) * *wp;
                  }
                }
              }
              const std::int32_t q = apply_requant(acc, rm) + zo;
              dst[oy * s.w + ox] =
                  static_cast<std::uint8_t>(std::clamp(q, 0, 255));
            }
        });
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kRelu:
      case OpKind::kClippedRelu: {
        const QBuf& in = bufs[n.inputs[0]];
        const QuantParams& in_qp = act_qp[n.inputs[0]];
        QBuf out(in.shape);
        const std::int32_t zo = out_qp.zero_point;
        std::int32_t hi = 255;
        if (n.kind == OpKind::kClippedRelu)
          hi = std::min<std::int32_t>(
              255, zo + round_half_away(n.clip_max / out_qp.scale));
        const bool same_grid = in_qp.scale == out_qp.scale &&
                               in_qp.zero_point == out_qp.zero_point;
        if (same_grid) {
          for (std::size_t i = 0; i < in.data.size(); ++i)
            out.data[i] = static_cast<std::uint8_t>(
                std::clamp<std::int32_t>(in.data[i], zo, hi));
        } else {
          const RequantMult rm =
              requant_multiplier(double(in_qp.scale) / out_qp.scale);
          for (std::size_t i = 0; i < in.data.size(); ++i) {
            const std::int32_t q =
                apply_requant(in.data[i] - in_qp.zero_point, rm) + zo;
            out.data[i] =
                static_cast<std::uint8_t>(std::clamp(q, zo, hi));
          }
        }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kAdd: {
        const QBuf& a = bufs[n.inputs[0]];
        const QBuf& b = bufs[n.inputs[1]];
        const QuantParams& qa = act_qp[n.inputs[0]];
        const QuantParams& qb = act_qp[n.inputs[1]];
        QBuf out(a.shape);
        const std::int64_t fa = add_factor(double(qa.scale) / out_qp.scale);
        const std::int64_t fb = add_factor(double(qb.scale) / out_qp.scale);
        const std::int32_t za = qa.zero_point, zb = qb.zero_point,
                           zo = out_qp.zero_point;
        for (std::size_t i = 0; i < a.data.size(); ++i) {
          const std::int64_t acc = (a.data[i] - za) * fa + (b.data[i] - zb) * fb;
          const std::int32_t q = rounding_shift(acc, kAddShift) + zo;
          out.data[i] = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
        }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kMul: {
        const QBuf& a = bufs[n.inputs[0]];
        const QBuf& b = bufs[n.inputs[1]];
        const QuantParams& qa = act_qp[n.inputs[0]];
        const QuantParams& qb = act_qp[n.inputs[1]];
        QBuf out(a.shape);
        const RequantMult rm = requant_multiplier(
            double(qa.scale) * qb.scale / out_qp.scale);
        const std::int32_t za = qa.zero_point, zb = qb.zero_point,
                           zo = out_qp.zero_point;
        const bool broadcast = b.shape.h == 1 && b.shape.w == 1 &&
                               !(a.shape.h == 1 && a.shape.w == 1);
        const std::int64_t plane = a.shape.h * a.shape.w;
        for (std::int64_t bi = 0; bi < a.shape.b; ++bi)
          for (std::int64_t c = 0; c < a.shape.c; ++c)
            for (std::int64_t i = 0; i < plane; ++i) {
              const std::size_t ia = (bi * a.shape.c + c) * plane + i;
              const std::size_t ib =
                  broadcast ? (bi * a.shape.c + c) : ia;
              const std::int64_t prod = std::int64_t(a.data[ia] - za) *
                                        (b.data[ib] - zb);
              const std::int32_t q = apply_requant(prod, rm) + zo;
              out.data[ia] =
                  static_cast<std::uint8_t>(std::clamp(q, 0, 255));
            }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kConcat: {
        std::int64_t c_total = 0;
        for (int src : n.inputs) c_total += bufs[src].shape.c;
        const TensorShape& s0 = bufs[n.inputs[0]].shape;
        QBuf out(TensorShape{s0.b, c_total, s0.h, s0.w});
        const std::int64_t plane = s0.h * s0.w;
        for (std::int64_t b = 0; b < s0.b; ++b) {
          std::int64_t c_off = 0;
          for (int src : n.inputs) {
            const QBuf& part = bufs[src];
            const QuantParams& qp = act_qp[src];
            const std::int64_t pc = part.shape.c;
            std::uint8_t* dst = out.data.data() + (b * c_total + c_off) * plane;
            const std::uint8_t* sp =
                part.data.data() + b * pc * plane;
            if (qp.scale == out_qp.scale &&
                qp.zero_point == out_qp.zero_point) {
              std::copy(sp, sp + pc * plane, dst);
            } else {
              const RequantMult rm =
                  requant_multiplier(double(qp.scale) / out_qp.scale);
              for (std::int64_t i = 0; i < pc * plane; ++i) {
                const std::int32_t q =
                    apply_requant(sp[i] - qp.zero_point, rm) +
                    out_qp.zero_point;
                dst[i] = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
              }
            }
            c_off += pc;
          }
        }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kDepthToSpace: {
        const QBuf& in = bufs[n.inputs[0]];
        QBuf out;
        move_depth_to_space(in.data, in.shape, n.block, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kSpaceToDepth: {
        const QBuf& in = bufs[n.inputs[0]];
        QBuf out;
        move_space_to_depth(in.data, in.shape, n.block, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kStackRepeat: {
        const QBuf& in = bufs[n.inputs[0]];
        QBuf out;
        move_stack_repeat(in.data, in.shape, n.repeat, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kNearestUpsample: {
        const QBuf& in = bufs[n.inputs[0]];
        QBuf out;
        move_nearest(in.data, in.shape, n.factor, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kFakeQuant:
        throw QuantError("quantized model contains a fake-quant node");
    }
  }

  // The output grid is pinned to identity, so dequantization is a cast.
  const QBuf& out = bufs[graph.output_node];
  const QuantParams& qp = act_qp[graph.output_node];
  Tensor result(out.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    result.vec()[i] =
        static_cast<float>(std::int32_t(out.data[i]) - qp.zero_point) *
        qp.scale;
  return result;
}

Tensor QuantizedModel::simulate(const Tensor& input) const {
  graph.validate();
  const int n_nodes = static_cast<int>(graph.nodes.size());
  struct DBuf {
    TensorShape shape;
    std::vector<double> data;
  };
  std::vector<DBuf> bufs(n_nodes);

  auto quantize_to_grid = [](double v, const QuantParams& qp) {
    const double q =
        std::round(v / qp.scale) + qp.zero_point;  // ties away handled below
    const double qc = std::clamp<double>(q, 0, 255);
    return (qc - qp.zero_point) * qp.scale;
  };

  for (int id = 0; id < n_nodes; ++id) {
    const GraphNode& n = graph.nodes[id];
    const QuantParams& out_qp = act_qp[id];
    switch (n.kind) {
      case OpKind::kInput: {
        DBuf b{input.shape(), {}};
        b.data.resize(input.numel());
        for (std::int64_t i = 0; i < input.numel(); ++i)
          b.data[i] = quantize_to_grid(input.data()[i], out_qp);
        bufs[id] = std::move(b);
        break;
      }
      case OpKind::kConv: {
        const DBuf& in = bufs[n.inputs[0]];
        const QuantizedConv& qc = convs.at(id);
        const QuantParams& in_qp = act_qp[n.inputs[0]];
        const TensorShape& s = in.shape;
        DBuf out{{s.b, qc.out_channels, s.h, s.w}, {}};
        out.data.resize(out.shape.numel());
        const int icg = qc.in_channels / qc.groups;
        const int ocg = qc.out_channels / qc.groups;
        const std::int64_t kk = std::int64_t(icg) * qc.kh * qc.kw;
        const std::int64_t plane = s.h * s.w;
        parallel_for(s.b * qc.out_channels, [&](std::int64_t task) {
          const std::int64_t b = task / qc.out_channels;
          const int oc = static_cast<int>(task % qc.out_channels);
          const int gr = oc / ocg;
          const double ws = qc.weight_scales[oc];
          const double bias =
              double(qc.bias[oc]) * double(in_qp.scale) * ws;
          const std::int8_t* w = qc.weights.data() + oc * kk;
          double* dst = out.data.data() + (b * qc.out_channels + oc) * plane;
          for (std::int64_t oy = 0; oy < s.h; ++oy)
            for (std::int64_t ox = 0; ox < s.w; ++ox) {
              double acc = bias;
              const std::int8_t* wp = w;
              for (int ic = 0; ic < icg; ++ic) {
                const double* in_plane =
                    in.data.data() + (b * s.c + gr * icg + ic) * plane;
                for (int ky = 0; ky < qc.kh; ++ky) {
                  const std::int64_t sy = oy + ky - qc.pad;
                  if (sy < 0 || sy >= s.h) {
                    wp += qc.kw;
                    continue;
                  }
                  for (int kx = 0; kx < qc.kw; ++kx, ++wp) {
                    const std::int64_t sx = ox + kx - qc.pad;
                    if (sx < 0 || sx >= s.w) continue;
                    // Buffer values are dequantized reals; weights dequantize
                    // to q_w * channel scale.
                    acc += in_plane[sy * s.w + sx] * (double(*wp) * ws);
                  }
                }
              }
              dst[oy * s.w + ox] = acc;
            }
        });
        for (auto& v : out.data) v = quantize_to_grid(v, out_qp);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kRelu:
      case OpKind::kClippedRelu: {
        const DBuf& in = bufs[n.inputs[0]];
        DBuf out{in.shape, {}};
        out.data.resize(in.data.size());
        const double hi =
            n.kind == OpKind::kClippedRelu ? double(n.clip_max) : 1e300;
        for (std::size_t i = 0; i < in.data.size(); ++i)
          out.data[i] = quantize_to_grid(
              std::min(std::max(in.data[i], 0.0), hi), out_qp);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kAdd: {
        const DBuf& a = bufs[n.inputs[0]];
        const DBuf& b = bufs[n.inputs[1]];
        DBuf out{a.shape, {}};
        out.data.resize(a.data.size());
        for (std::size_t i = 0; i < a.data.size(); ++i)
          out.data[i] = quantize_to_grid(a.data[i] + b.data[i], out_qp);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kMul: {
        const DBuf& a = bufs[n.inputs[0]];
        const DBuf& b = bufs[n.inputs[1]];
        DBuf out{a.shape, {}};
        out.data.resize(a.data.size());
        const bool broadcast = b.shape.h == 1 && b.shape.w == 1 &&
                               !(a.shape.h == 1 && a.shape.w == 1);
        const std::int64_t plane = a.shape.h * a.shape.w;
        for (std::int64_t bi = 0; bi < a.shape.b; ++bi)
          for (std::int64_t c = 0; c < a.shape.c; ++c)
            for (std::int64_t i = 0; i < plane; ++i) {
              const std::size_t ia = (bi * a.shape.c + c) * plane + i;
              const std::size_t ib = broadcast ? (bi * a.shape.c + c) : ia;
              out.data[ia] =
                  quantize_to_grid(a.data[ia] * b.data[ib], out_qp);
            }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kConcat: {
        std::int64_t c_total = 0;
        for (int src : n.inputs) c_total += bufs[src].shape.c;
        const TensorShape& s0 = bufs[n.inputs[0]].shape;
        DBuf out{{s0.b, c_total, s0.h, s0.w}, {}};
        out.data.resize(out.shape.numel());
        const std::int64_t plane = s0.h * s0.w;
        for (std::int64_t b = 0; b < s0.b; ++b) {
          std::int64_t c_off = 0;
          for (int src : n.inputs) {
            const DBuf& part = bufs[src];
            for (std::int64_t i = 0; i < part.shape.c * plane; ++i)
              out.data[(b * c_total + c_off) * plane + i] = quantize_to_grid(
                  part.data[b * part.shape.c * plane + i], out_qp);
            c_off += part.shape.c;
          }
        }
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kDepthToSpace: {
        DBuf out;
        move_depth_to_space(bufs[n.inputs[0]].data, bufs[n.inputs[0]].shape,
                            n.block, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kSpaceToDepth: {
        DBuf out;
        move_space_to_depth(bufs[n.inputs[0]].data, bufs[n.inputs[0]].shape,
                            n.block, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kStackRepeat: {
        DBuf out;
        move_stack_repeat(bufs[n.inputs[0]].data, bufs[n.inputs[0]].shape,
                          n.repeat, out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kNearestUpsample: {
        DBuf out;
        move_nearest(bufs[n.inputs[0]].data, bufs[n.inputs[0]].shape, n.factor,
                     out.data, out.shape);
        bufs[id] = std::move(out);
        break;
      }
      case OpKind::kFakeQuant:
        throw QuantError("quantized model contains a fake-quant node");
    }
  }

  const DBuf& out = bufs[graph.output_node];
  Tensor result(out.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    result.vec()[i] = static_cast<float>(out.data[i]);
  return result;
}

std::int64_t QuantizedModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [id, qc] : convs)
    n += static_cast<std::int64_t>(qc.weights.size()) + qc.bias.size();
  return n;
}

AccuracyDrop accuracy_drop(const ModelGraph& fp, const QuantizedModel& q,
                           const std::vector<ImagePair>& pairs) {
  if (pairs.empty()) throw QuantError("accuracy_drop: empty dataset");
  double psnr_fp = 0.0, psnr_q = 0.0, ssim_fp = 0.0, ssim_q = 0.0;
  for (const ImagePair& pair : pairs) {
    const ImagePair aligned =
        fp.input_multiple > 1 ? crop_pair_to_multiple(pair, fp.input_multiple)
                              : pair;
    const Tensor out_fp = fp.forward(aligned.lr);
    const Tensor out_q = q.forward(aligned.lr);
    psnr_fp += std::min(psnr(out_fp, aligned.hr), 99.0);
    psnr_q += std::min(psnr(out_q, aligned.hr), 99.0);
    ssim_fp += ssim(out_fp, aligned.hr);
    ssim_q += ssim(out_q, aligned.hr);
  }
  const double n = double(pairs.size());
  return {psnr_fp / n - psnr_q / n, ssim_fp / n - ssim_q / n};
}

}  // namespace qsr
