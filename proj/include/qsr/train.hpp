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

#ifndef QSR_TRAIN_HPP_
#define QSR_TRAIN_HPP_

#include <filesystem>
#include <vector>

#include "qsr/dataset.hpp"
#include "qsr/graph.hpp"
#include "qsr/loss.hpp"
#include "qsr/optim.hpp"

namespace qsr {

struct AugmentFlags {
  bool flip_h = true;
  bool flip_v = true;
  bool rot90 = true;
};

// Applies one random geometric transform set to both patches; the pair stays
// aligned because LR and HR receive the identical transform.
void augment(Tensor& lr_patch, Tensor& hr_patch, const AugmentFlags& flags,
             Rng& rng);

struct TrainConfig {
  int patch_size = 64;  // LR patch edge; HR patches are 3x
  int batch_size = 16;
  std::int64_t iterations = 2000;
  LossSpec loss;
  LrSchedule schedule = LrSchedule::step_halving(1e-3, 400);
  AugmentFlags augment;
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
};

struct LossCurvePoint {
  std::int64_t step;
  double lr;
  double loss;
};

using LossCurve = std::vector<LossCurvePoint>;

// Patch-based training loop. Updates the graph weights in place and returns
// the per-step loss curve. Aborts with TrainError naming the step when the
// loss turns non-finite. Fixed seeds reproduce bit-identical runs.
LossCurve fit(ModelGraph& model, const std::vector<ImagePair>& dataset,
              const TrainConfig& config);

// step,lr,loss rows.
void write_loss_csv(const LossCurve& curve, const std::filesystem::path& path);

}  // namespace qsr

#endif  // QSR_TRAIN_HPP_
