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

#include "qsr/train.hpp"

#include <cmath>
#include <cstdio>

namespace qsr {

namespace {

void check_aligned(const Tensor& lr, const Tensor& hr) {
  const TensorShape& a = lr.shape();
  const TensorShape& b = hr.shape();
  if (b.h != 3 * a.h || b.w != 3 * a.w || a.b != b.b || a.c != b.c)
    throw ShapeError("augment: HR patch " + b.str() +
                     " is not the 3x counterpart of LR patch " + a.str());
}

void copy_into_batch(Tensor& batch, std::int64_t slot, const Tensor& patch) {
  const std::int64_t n = patch.numel();
  std::copy(patch.data(), patch.data() + n, batch.data() + slot * n);
}

}  // namespace

void augment(Tensor& lr_patch, Tensor& hr_patch, const AugmentFlags& flags,
             Rng& rng) {
  check_aligned(lr_patch, hr_patch);
  if (flags.flip_h && rng.coin()) {
    lr_patch = flip_horizontal(lr_patch);
    hr_patch = flip_horizontal(hr_patch);
  }
  if (flags.flip_v && rng.coin()) {
    lr_patch = flip_vertical(lr_patch);
    hr_patch = flip_vertical(hr_patch);
  }
  if (flags.rot90) {
    const int k = static_cast<int>(rng.uniform_int(4));
    if (k != 0) {
      lr_patch = rotate90(lr_patch, k);
      hr_patch = rotate90(hr_patch, k);
    }
  }
}

LossCurve fit(ModelGraph& model, const std::vector<ImagePair>& dataset,
              const TrainConfig& config) {
  if (dataset.empty()) throw TrainError("fit: empty dataset");
  model.validate();
  for (const ImagePair& pair : dataset)
    if (pair.lr.shape().h < config.patch_size ||
        pair.lr.shape().w < config.patch_size)
      throw TrainError("fit: image '" + pair.id + "' smaller than patch size " +
                       std::to_string(config.patch_size));

  const std::vector<int> conv_ids = model.conv_node_ids();
  AdamState state;
  state.beta1 = config.beta1;
  state.beta2 = config.beta2;
  state.eps = config.adam_eps;

  Rng rng(config.seed);
  const int p = config.patch_size;
  LossCurve curve;
  curve.reserve(config.iterations);

  for (std::int64_t step = 0; step < config.iterations; ++step) {
    Tensor lr_batch(config.batch_size, 3, p, p);
    Tensor hr_batch(config.batch_size, 3, 3 * p, 3 * p);
    for (int i = 0; i < config.batch_size; ++i) {
      const std::int64_t idx = rng.uniform_int(dataset.size());
      auto [lr_patch, hr_patch] = extract_patch(dataset[idx], p, rng);
      augment(lr_patch, hr_patch, config.augment, rng);
      copy_into_batch(lr_batch, i, lr_patch);
      copy_into_batch(hr_batch, i, hr_patch);
    }

    const std::vector<Tensor> trace = model.forward_trace(lr_batch);
    const double loss =
        loss_forward(trace[model.output_node], hr_batch, config.loss);
    if (!std::isfinite(loss))
      throw TrainError("fit: diverged, non-finite loss at step " +
                       std::to_string(step));

    const Tensor loss_grad =
        loss_backward(trace[model.output_node], hr_batch, config.loss);
    GraphGrads grads = graph_backward(model, lr_batch, trace, loss_grad);

    std::vector<ParamSlot> slots;
    slots.reserve(conv_ids.size() * 2);
    for (int id : conv_ids) {
      ConvSpec& conv = model.nodes[id].conv;
      slots.push_back({conv.weights.data(), grads.weights.at(id).data(),
                       static_cast<std::size_t>(conv.weights.numel())});
      slots.push_back({conv.bias.data(), grads.biases.at(id).data(),
                       conv.bias.size()});
    }
    state.lr = schedule_rate(config.schedule, step);
    adam_step(state, slots);
    curve.push_back({step, state.lr, loss});
  }
  return curve;
}

void write_loss_csv(const LossCurve& curve,
                    const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write loss curve to " + path.string());
  std::fprintf(f, "step,lr,loss\n");
  for (const LossCurvePoint& pt : curve)
    std::fprintf(f, "%lld,%.10g,%.10g\n", static_cast<long long>(pt.step),
                 pt.lr, pt.loss);
  std::fclose(f);
}

}  // namespace qsr
