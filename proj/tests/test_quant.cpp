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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qsr/qmodel.hpp"
#include "qsr/quant.hpp"
#include "qsr/metrics.hpp"
#include "qsr/zoo.hpp"

using namespace qsr;

TEST_CASE("compute_qparams: exact [0,255] mapping and degenerate fallback") {
  const QuantParams full = compute_qparams(0.0f, 255.0f, false);
  CHECK(full.scale == 1.0f);
  CHECK(full.zero_point == 0);

  const QuantParams degenerate = compute_qparams(0.0f, 0.0f, false);
  CHECK(degenerate.scale == 1.0f);
  CHECK(degenerate.zero_point == 0);

  CHECK_THROWS_AS(compute_qparams(1.0f, -1.0f, false), QuantError);
}

TEST_CASE("compute_qparams: round-trip bound over a dense grid") {
  for (bool is_signed : {false, true}) {
    const QuantParams qp = compute_qparams(-1.0f, 1.0f, is_signed);
    CHECK(qp.scale > 0.0f);
    for (int i = 0; i <= 2000; ++i) {
      const float x = -1.0f + 2.0f * float(i) / 2000.0f;
      Tensor t = Tensor::full({1, 1, 1, 1}, x);
      const float back = dequantize(quantize(t, qp)).vec()[0];
      CHECK(std::abs(back - x) <= qp.scale / 2 + 1e-7);
    }
  }
}

TEST_CASE("quantize: zero is exact, out-of-range values clamp") {
  const QuantParams qp = compute_qparams(-3.0f, 5.0f, false);
  Tensor zero = Tensor::full({1, 1, 1, 1}, 0.0f);
  QTensor q = quantize(zero, qp);
  CHECK(q.data[0] == qp.zero_point);
  CHECK(dequantize(q).vec()[0] == 0.0f);

  Tensor big = Tensor::full({1, 1, 1, 1}, 1e6f);
  CHECK(quantize(big, qp).data[0] == qp.qmax());
  Tensor small = Tensor::full({1, 1, 1, 1}, -1e6f);
  CHECK(quantize(small, qp).data[0] == qp.qmin());
}

TEST_CASE("quantize: per-channel symmetric weights never clamp") {
  Rng rng(3);
  Tensor w = Tensor::random_uniform({6, 4, 3, 3}, -2.5f, 2.5f, rng);
  const QuantParams qp = weight_qparams_per_channel(w);
  REQUIRE(qp.channel_scales.size() == 6);
  const QTensor q = quantize(w, qp);
  for (std::int32_t v : q.data) {
    CHECK(v >= -127);
    CHECK(v <= 127);
  }
  const Tensor back = dequantize(q);
  for (std::int64_t i = 0; i < w.numel(); ++i)
    CHECK(std::abs(back.vec()[i] - w.vec()[i]) <= 2.5f / 127.0f + 1e-6f);
}

TEST_CASE("calibrate: recording modes and lattice property") {
  ModelGraph g = build_abpn(8, 1);
  Rng rng(5);
  Tensor img1 = Tensor::full({1, 3, 8, 8}, 128.0f);
  Tensor img2 = Tensor::random_uniform({1, 3, 8, 8}, 0.0f, 255.0f, rng);

  const CalibrationStats s1 = calibrate(g, {img1});
  const CalibrationStats s2 = calibrate(g, {img2});
  const CalibrationStats both = calibrate(g, {img1, img2});
  for (const auto& [node, range] : both.ranges) {
    CHECK(range.first ==
          doctest::Approx(std::min(s1.ranges.at(node).first,
                                   s2.ranges.at(node).first)));
    CHECK(range.second ==
          doctest::Approx(std::max(s1.ranges.at(node).second,
                                   s2.ranges.at(node).second)));
    // adding images never shrinks a range
    CHECK(range.first <= s1.ranges.at(node).first + 1e-9);
    CHECK(range.second >= s1.ranges.at(node).second - 1e-9);
  }
  CHECK_THROWS_AS(calibrate(g, {}), QuantError);
}

TEST_CASE("requant multiplier: representation and exact rational rounding") {
  const RequantMult half = requant_multiplier(0.5);
  CHECK(half.multiplier == (1 << 30));
  CHECK(half.shift == 31);

  // Half-away-from-zero ties
  CHECK(apply_requant(3, half) == 2);    // 1.5 -> 2
  CHECK(apply_requant(-3, half) == -2);  // -1.5 -> -2
  CHECK(apply_requant(5, half) == 3);    // 2.5 -> 3
  CHECK(apply_requant(4, half) == 2);

  // Against an exact rational oracle: value = m/2^s, so
  // round(acc * value) = round_half_away(acc * m / 2^s) computed in
  // 80-bit precision (exact for these operand sizes).
  Rng rng(7);
  for (double value : {0.3, 1.0, 1.7, 0.004, 123.456, 1.0 / 127.0}) {
    const RequantMult rm = requant_multiplier(value);
    CHECK(rm.multiplier >= (1 << 30));
    const long double represented =
        static_cast<long double>(rm.multiplier) / std::exp2(static_cast<long double>(rm.shift));
    CHECK(std::abs(double(represented / value - 1.0L)) < 1e-9);
    for (int i = 0; i < 200; ++i) {
      const auto acc =
          static_cast<std::int32_t>(rng.uniform_int(2'000'001) - 1'000'000);
      const long double exact =
          static_cast<long double>(acc) * rm.multiplier / std::exp2(static_cast<long double>(rm.shift));
      const long double expect =
          exact >= 0 ? std::floor(exact + 0.5L) : std::ceil(exact - 0.5L);
      CHECK(apply_requant(acc, rm) == static_cast<std::int32_t>(expect));
    }
  }
}

TEST_CASE("fake_quant: scale-1 grid is the identity on integer input") {
  QuantParams qp;  // scale 1, zp 0, unsigned
  Tensor x(1, 1, 2, 2);
  x.vec() = {0.0f, 17.0f, 254.0f, 255.0f};
  CHECK(oracle::bit_identical(fake_quant(x, qp), x));
}

TEST_CASE("ptq: identity-kernel conv model is exact end to end") {
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode conv;
  conv.kind = OpKind::kConv;
  conv.inputs = {0};
  conv.conv = make_conv(3, 3, 3);
  for (int c = 0; c < 3; ++c) conv.conv.weights.at(c, c, 1, 1) = 1.0f;
  g.add_node(std::move(conv));
  GraphNode clip;
  clip.kind = OpKind::kClippedRelu;
  clip.inputs = {1};
  clip.clip_max = 255.0f;
  g.add_node(std::move(clip));
  g.output_node = 2;

  Rng rng(11);
  Tensor img = Tensor::random_uniform({1, 3, 10, 10}, 0.0f, 255.0f, rng);
  for (auto& v : img.vec()) v = std::round(v);

  const CalibrationStats stats = calibrate(g, {img});
  const QuantizedModel qm = quantize_model_ptq(g, stats);
  CHECK(oracle::bit_identical(qm.forward(img), img));
}

TEST_CASE("ptq: missing calibration stats name the node") {
  ModelGraph g = build_abpn(8, 1);
  CalibrationStats empty;
  CHECK_THROWS_WITH_AS(quantize_model_ptq(g, empty),
                       doctest::Contains("node"), QuantError);
}

TEST_CASE("ptq: output and input grids are pinned to identity") {
  ModelGraph g = build_fastsr(8, 3);
  Rng rng(13);
  const CalibrationStats stats = calibrate(
      g, {Tensor::random_uniform({1, 3, 12, 12}, 0.0f, 255.0f, rng)});
  const QuantizedModel qm = quantize_model_ptq(g, stats);
  CHECK(qm.act_qp[0].scale == 1.0f);
  CHECK(qm.act_qp[0].zero_point == 0);
  const QuantParams& out = qm.act_qp[qm.graph.output_node];
  CHECK(out.scale == 1.0f);
  CHECK(out.zero_point == 0);
  CHECK_FALSE(out.is_signed);
  // All float payloads are zeroed in the stored graph.
  for (int id : qm.graph.conv_node_ids())
    for (float v : qm.graph.nodes[id].conv.weights.vec()) CHECK(v == 0.0f);
}

TEST_CASE("integer path matches the double-precision simulation per pixel") {
  // Random weights come from the seeded builders; two seeds here, the
  // acceptance suite covers all architectures with ten.
  Rng rng(17);
  for (const std::string& name : {std::string("abpn"), std::string("xlsr"),
                                  std::string("tinysrnet"),
                                  std::string("edsr_attn")}) {
    for (std::uint64_t seed : {1ull, 2ull}) {
      ModelGraph g = build_arch(name, seed);
      const std::int64_t h = g.input_multiple * 6, w = g.input_multiple * 5;
      std::vector<Tensor> calib;
      for (int i = 0; i < 2; ++i)
        calib.push_back(
            Tensor::random_uniform({1, 3, h, w}, 0.0f, 255.0f, rng));
      const QuantizedModel qm = quantize_model_ptq(g, calibrate(g, calib));
      Tensor probe = Tensor::random_uniform({1, 3, h, w}, 0.0f, 255.0f, rng);
      const double diff =
          oracle::max_abs_diff(qm.forward(probe), qm.simulate(probe));
      INFO(name, " seed ", seed);
      CHECK(diff <= 1.0);
    }
  }
}

TEST_CASE("quantized inference is deterministic") {
  ModelGraph g = build_xlsr(16, 2, 3);
  Rng rng(19);
  Tensor img = Tensor::random_uniform({1, 3, 8, 8}, 0.0f, 255.0f, rng);
  const QuantizedModel qm = quantize_model_ptq(g, calibrate(g, {img}));
  CHECK(oracle::bit_identical(qm.forward(img), qm.forward(img)));
}

TEST_CASE("prepare_qat inserts frozen-range fake-quant; strip removes them") {
  ModelGraph g = build_abpn(8, 5);
  Rng rng(23);
  Tensor img = Tensor::random_uniform({1, 3, 12, 12}, 0.0f, 255.0f, rng);
  const CalibrationStats stats = calibrate(g, {img});

  ModelGraph qat = prepare_qat(g, stats);
  int fq_nodes = 0;
  for (const GraphNode& n : qat.nodes)
    if (n.kind == OpKind::kFakeQuant) ++fq_nodes;
  CHECK(fq_nodes > 0);
  for (int id : qat.conv_node_ids()) CHECK(qat.nodes[id].fq_weights);

  CalibrationStats recovered;
  ModelGraph back = strip_fake_quant(qat, &recovered);
  CHECK(back.nodes.size() == g.nodes.size());
  for (std::size_t i = 0; i < back.nodes.size(); ++i)
    CHECK(back.nodes[i].kind == g.nodes[i].kind);
  CHECK_FALSE(recovered.ranges.empty());

  // The float32 QAT forward models the same arithmetic the quantized
  // simulation performs; they agree closely (exactness is only required of
  // the integer path).
  const QuantizedModel qm = quantize_model_ptq(g, stats);
  const Tensor sim = qm.simulate(img);
  const Tensor qat_out = qat.forward(img);
  CHECK(psnr(qat_out, sim) > 45.0);
}

TEST_CASE("accuracy_drop: scale-1 identity path gives zero drop") {
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode conv;
  conv.kind = OpKind::kConv;
  conv.inputs = {0};
  conv.conv = make_conv(3, 3, 3);
  for (int c = 0; c < 3; ++c) conv.conv.weights.at(c, c, 1, 1) = 1.0f;
  g.add_node(std::move(conv));
  GraphNode clip;
  clip.kind = OpKind::kClippedRelu;
  clip.inputs = {1};
  g.add_node(std::move(clip));
  GraphNode stack;
  stack.kind = OpKind::kStackRepeat;
  stack.inputs = {2};
  stack.repeat = 9;
  g.add_node(std::move(stack));
  GraphNode d2s;
  d2s.kind = OpKind::kDepthToSpace;
  d2s.inputs = {3};
  d2s.block = 3;
  g.add_node(std::move(d2s));
  g.output_node = 4;

  std::vector<ImagePair> pairs = synthetic_dataset(2, 48, 48, 3);
  // 8-bit inputs: with fractional pixels even an identity path would
  // legitimately differ by the input rounding.
  for (ImagePair& pair : pairs)
    for (auto& v : pair.lr.vec()) v = std::round(v);
  const CalibrationStats stats = calibrate(g, {pairs[0].lr, pairs[1].lr});
  const QuantizedModel qm = quantize_model_ptq(g, stats);
  const AccuracyDrop drop = accuracy_drop(g, qm, pairs);
  CHECK(std::abs(drop.delta_psnr) < 1e-9);
  CHECK(std::abs(drop.delta_ssim) < 1e-12);
  CHECK_THROWS_AS(accuracy_drop(g, qm, {}), QuantError);
}

TEST_CASE("accumulator bound is enforced at quantization time") {
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode conv;
  conv.kind = OpKind::kConv;
  conv.inputs = {0};
  conv.conv = make_conv(4096, 4, 3);  // 36864 accumulation terms
  g.add_node(std::move(conv));
  g.output_node = 1;
  CalibrationStats stats;
  stats.ranges[0] = {0.0, 255.0};
  stats.ranges[1] = {0.0, 1.0};
  CHECK_THROWS_WITH_AS(quantize_model_ptq(g, stats),
                       doctest::Contains("accumulation terms"), QuantError);
}
