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

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "qsr/loss.hpp"
#include "qsr/metrics.hpp"
#include "qsr/optim.hpp"
#include "qsr/quant.hpp"
#include "qsr/train.hpp"
#include "qsr/zoo.hpp"

using namespace qsr;

TEST_CASE("loss examples") {
  Rng rng(1);
  Tensor t = Tensor::random_uniform({1, 3, 4, 4}, 0.0f, 1.0f, rng);

  LossSpec charb;
  charb.kind = LossSpec::Kind::kCharbonnier;
  charb.eps = 1e-3f;
  CHECK(loss_forward(t, t, charb) == doctest::Approx(1e-3).epsilon(1e-6));

  Tensor shifted(t.shape());
  for (std::int64_t i = 0; i < t.numel(); ++i)
    shifted.vec()[i] = t.vec()[i] + 2.0f;
  CHECK(loss_forward(shifted, t, LossSpec::parse("l1")) ==
        doctest::Approx(2.0));
  CHECK(loss_forward(shifted, t, LossSpec::parse("l2")) ==
        doctest::Approx(4.0));
}

TEST_CASE("Charbonnier matches an element-wise scalar-loop oracle") {
  Rng rng(7);
  Tensor pred = Tensor::random_uniform({2, 3, 5, 5}, -2.0f, 2.0f, rng);
  Tensor target = Tensor::random_uniform({2, 3, 5, 5}, -2.0f, 2.0f, rng);
  LossSpec charb;
  charb.kind = LossSpec::Kind::kCharbonnier;
  charb.eps = 1e-3f;

  double expect = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const double d = double(pred.vec()[i]) - target.vec()[i];
    expect += std::sqrt(d * d + double(charb.eps) * charb.eps);
  }
  expect /= double(pred.numel());
  CHECK(loss_forward(pred, target, charb) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("losses: non-negative, minimized at pred == target") {
  Rng rng(13);
  Tensor t = Tensor::random_uniform({1, 3, 4, 4}, -1.0f, 1.0f, rng);
  Tensor other = Tensor::random_uniform({1, 3, 4, 4}, -1.0f, 1.0f, rng);
  for (const char* name : {"l1", "l2", "charbonnier"}) {
    const LossSpec spec = LossSpec::parse(name);
    const double at_min = loss_forward(t, t, spec);
    CHECK(loss_forward(other, t, spec) >= at_min);
    CHECK(at_min >= 0.0);
    if (spec.kind != LossSpec::Kind::kCharbonnier) CHECK(at_min == 0.0);
  }
  CHECK_THROWS_AS(loss_forward(t, Tensor(1, 3, 4, 5), LossSpec{}), ShapeError);
}

TEST_CASE("adam: hand-evaluated first step") {
  float param = 0.0f;
  float grad = 1.0f;
  AdamState state;
  state.lr = 1e-3;
  ParamSlot slot{&param, &grad, 1};
  adam_step(state, std::span<const ParamSlot>(&slot, 1));
  // Bias correction makes the first step exactly -lr * g/(|g| + eps).
  CHECK(std::abs(double(param) + 1e-3) < 1e-8);
}

TEST_CASE("L2 loss of a single conv: analytic vs central differences, "
          "step 1e-3") {
  Rng rng(53);
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode n;
  n.kind = OpKind::kConv;
  n.inputs = {0};
  n.conv = make_conv(3, 4, 3);
  n.conv.weights =
      Tensor::random_uniform(n.conv.weights.shape(), -0.5f, 0.5f, rng);
  for (auto& b : n.conv.bias) b = rng.uniform_float(-0.2f, 0.2f);
  g.add_node(std::move(n));
  g.output_node = 1;

  Tensor x = Tensor::random_uniform({1, 3, 16, 16}, -1.0f, 1.0f, rng);
  Tensor target = Tensor::random_uniform({1, 4, 16, 16}, -1.0f, 1.0f, rng);
  const LossSpec l2 = LossSpec::parse("l2");

  auto loss = [&]() { return loss_forward(g.forward(x), target, l2); };
  const std::vector<Tensor> trace = g.forward_trace(x);
  const Tensor lgrad = loss_backward(trace[1], target, l2);
  GraphGrads grads = graph_backward(g, x, trace, lgrad);

  ConvSpec& conv = g.nodes[1].conv;
  const auto wrep =
      oracle::fd_check(loss, conv.weights, grads.weights.at(1), 60, rng, 1e-3);
  CHECK(wrep.max_rel < 1e-3);
  const auto xrep = oracle::fd_check(loss, x, grads.input, 60, rng, 1e-3);
  CHECK(xrep.max_rel < 1e-3);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<float> params = {0.5f, -2.0f, 3.25f};
  std::vector<float> grads = {0.0f, 0.0f, 0.0f};
  AdamState state;
  state.lr = 0.1;
  ParamSlot slot{params.data(), grads.data(), params.size()};
  for (int i = 0; i < 5; ++i)
    adam_step(state, std::span<const ParamSlot>(&slot, 1));
  CHECK(params[0] == 0.5f);
  CHECK(params[1] == -2.0f);
  CHECK(params[2] == 3.25f);
}

TEST_CASE("schedules: published recipe values") {
  // halved every 200K iterations
  const LrSchedule fastsr = LrSchedule::step_halving(2e-4, 200000);
  CHECK(schedule_rate(fastsr, 400000) == doctest::Approx(5e-5));
  CHECK(schedule_rate(fastsr, 0) == doctest::Approx(2e-4));

  // cyclic from 5e-4 to 1e-6 each 200K iterations; resets at the boundary
  const LrSchedule tiny = LrSchedule::cyclic(5e-4, 1e-6, 200000);
  CHECK(schedule_rate(tiny, 0) == doctest::Approx(5e-4));
  CHECK(schedule_rate(tiny, 200000) == doctest::Approx(5e-4));
  CHECK(schedule_rate(tiny, 199999) ==
        doctest::Approx(1e-6).epsilon(1e-2));

  // linear range decay between bounds
  const LrSchedule xlsr = LrSchedule::range_decay(25e-4, 1e-4, 1000);
  CHECK(schedule_rate(xlsr, 0) == doctest::Approx(25e-4));
  CHECK(schedule_rate(xlsr, 1000) == doctest::Approx(1e-4));
  CHECK(schedule_rate(xlsr, 500) == doctest::Approx((25e-4 + 1e-4) / 2));
}

TEST_CASE("augment: identities") {
  Rng rng(3);
  Tensor lr = Tensor::random_uniform({1, 3, 8, 8}, 0.0f, 255.0f, rng);
  Tensor hr = Tensor::random_uniform({1, 3, 24, 24}, 0.0f, 255.0f, rng);

  AugmentFlags off{false, false, false};
  Tensor lr2 = lr, hr2 = hr;
  augment(lr2, hr2, off, rng);
  CHECK(oracle::bit_identical(lr2, lr));
  CHECK(oracle::bit_identical(hr2, hr));

  Tensor bad_hr(1, 3, 23, 24);
  CHECK_THROWS_AS(augment(lr2, bad_hr, off, rng), ShapeError);
}

TEST_CASE("augment: paired transform preserves upscale-vs-target fidelity") {
  Rng rng(11);
  std::vector<ImagePair> data = synthetic_dataset(1, 72, 72, 5);
  Tensor lr = data[0].lr, hr = data[0].hr;
  const double before = psnr(nearest_upsample(lr, 3), hr);
  for (int trial = 0; trial < 8; ++trial) {
    Tensor lr2 = lr, hr2 = hr;
    augment(lr2, hr2, AugmentFlags{}, rng);
    CHECK(psnr(nearest_upsample(lr2, 3), hr2) ==
          doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("gradient check: every op against central differences") {
  for (const auto& check : oracle::gradcheck_all_ops(100, 42)) {
    INFO(check.op);
    CHECK(check.report.checked >= 100);
    CHECK(check.report.max_rel < 1e-3);
  }
  for (const auto& check : oracle::gradcheck_losses(100, 43)) {
    INFO(check.op);
    CHECK(check.report.max_rel < 1e-3);
  }
}

TEST_CASE("backward: grouped conv gradient equals split-and-concat oracle") {
  Rng rng(29);
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode n;
  n.kind = OpKind::kConv;
  n.inputs = {0};
  n.conv = make_conv(8, 8, 3, 4);
  n.conv.weights =
      Tensor::random_uniform(n.conv.weights.shape(), -0.5f, 0.5f, rng);
  g.add_node(std::move(n));
  g.output_node = 1;

  Tensor x = Tensor::random_uniform({1, 8, 6, 6}, -1.0f, 1.0f, rng);
  Tensor go = Tensor::random_uniform({1, 8, 6, 6}, -1.0f, 1.0f, rng);
  const std::vector<Tensor> trace = g.forward_trace(x);
  GraphGrads grads = graph_backward(g, x, trace, go);

  // Oracle: differentiate each group's plain conv independently.
  const ConvSpec& spec = g.nodes[1].conv;
  for (int gi = 0; gi < 4; ++gi) {
    ConvSpec part = make_conv(2, 2, 3);
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 2; ++i)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            part.weights.at(o, i, ky, kx) =
                spec.weights.at(gi * 2 + o, i, ky, kx);
    Tensor gx_part = conv2d_backward_input(
        oracle::channel_slice(go, gi * 2, gi * 2 + 2), part);
    for (int i = 0; i < 2; ++i)
      for (int y = 0; y < 6; ++y)
        for (int x2 = 0; x2 < 6; ++x2)
          CHECK(grads.input.at(0, gi * 2 + i, y, x2) ==
                doctest::Approx(gx_part.at(0, i, y, x2)).epsilon(1e-4));
  }
}

TEST_CASE("backward without a recorded forward errors out") {
  ModelGraph g = build_abpn(8, 1);
  Tensor x(1, 3, 6, 6);
  std::vector<Tensor> empty_trace;
  CHECK_THROWS_AS(
      graph_backward(g, x, empty_trace, Tensor(1, 3, 18, 18)), TrainError);
}

TEST_CASE("backward: constant output yields zero input gradient") {
  // A graph whose output ignores the input past a zeroed conv.
  ModelGraph g;
  g.add_node(GraphNode{});
  GraphNode n;
  n.kind = OpKind::kConv;
  n.inputs = {0};
  n.conv = make_conv(3, 3, 3);  // zero weights
  g.add_node(std::move(n));
  g.output_node = 1;
  Tensor x(1, 3, 5, 5);
  const std::vector<Tensor> trace = g.forward_trace(x);
  GraphGrads grads =
      graph_backward(g, x, trace, Tensor::full({1, 3, 5, 5}, 1.0f));
  for (std::int64_t i = 0; i < grads.input.numel(); ++i)
    CHECK(grads.input.vec()[i] == 0.0f);
}

TEST_CASE("fake_quant: straight-through gradient is exact inside the range") {
  Rng rng(31);
  QuantParams qp = compute_qparams(-1.0f, 1.0f, false);
  Tensor x = Tensor::random_uniform({1, 2, 4, 4}, -0.9f, 0.9f, rng);
  Tensor go = Tensor::random_uniform({1, 2, 4, 4}, -1.0f, 1.0f, rng);
  Tensor gi = fake_quant_backward(x, qp, go);
  CHECK(oracle::bit_identical(gi, go));

  Tensor beyond = Tensor::full({1, 1, 1, 1}, 50.0f);
  Tensor g1 = Tensor::full({1, 1, 1, 1}, 1.0f);
  CHECK(fake_quant_backward(beyond, qp, g1).vec()[0] == 0.0f);
}

TEST_CASE("fit: loss decreases on a tiny run and is seed-reproducible") {
  std::vector<ImagePair> data = synthetic_dataset(2, 96, 96, 11);
  TrainConfig cfg;
  cfg.patch_size = 16;
  cfg.batch_size = 4;
  cfg.iterations = 40;
  cfg.loss = LossSpec::parse("l1");
  cfg.schedule = LrSchedule::constant(1e-3);
  cfg.seed = 9;

  ModelGraph m1 = build_abpn(8, 5);
  const LossCurve c1 = fit(m1, data, cfg);
  CHECK(c1.size() == 40);
  CHECK(c1.back().loss < c1.front().loss);

  ModelGraph m2 = build_abpn(8, 5);
  const LossCurve c2 = fit(m2, data, cfg);
  for (std::size_t i = 0; i < c1.size(); ++i)
    CHECK(c1[i].loss == c2[i].loss);
  for (int id : m1.conv_node_ids())
    CHECK(oracle::bit_identical(m1.nodes[id].conv.weights,
                                m2.nodes[id].conv.weights));
}

TEST_CASE("fit: zero learning rate leaves the model unchanged") {
  std::vector<ImagePair> data = synthetic_dataset(1, 96, 96, 3);
  TrainConfig cfg;
  cfg.patch_size = 16;
  cfg.batch_size = 2;
  cfg.iterations = 5;
  cfg.schedule = LrSchedule::constant(0.0);
  ModelGraph model = build_abpn(8, 2);
  const ModelGraph reference = model;
  fit(model, data, cfg);
  for (int id : model.conv_node_ids())
    CHECK(oracle::bit_identical(model.nodes[id].conv.weights,
                                reference.nodes[id].conv.weights));
}

TEST_CASE("fit: empty dataset and oversized patches error out") {
  TrainConfig cfg;
  ModelGraph model = build_abpn(8, 2);
  CHECK_THROWS_AS(fit(model, {}, cfg), TrainError);

  std::vector<ImagePair> tiny = synthetic_dataset(1, 24, 24, 3);
  cfg.patch_size = 64;
  CHECK_THROWS_WITH_AS(fit(model, tiny, cfg),
                       doctest::Contains("smaller than patch"), TrainError);
}
