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

#ifndef QSR_OPTIM_HPP_
#define QSR_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace qsr {

// One trainable parameter array and its gradient.
struct ParamSlot {
  float* values = nullptr;
  const float* grads = nullptr;
  std::size_t size = 0;
};

// Bias-corrected Adam. Moment buffers are created lazily on the first step
// and are shaped like the parameter slots they track.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m, v;
};

// Applies one update in place; slot order must stay fixed across steps.
void adam_step(AdamState& state, std::span<const ParamSlot> slots);

// Learning-rate schedules.
//   StepHalving: initial * 2^-floor(step/period)
//   Cyclic:      linear initial -> floor within each period, reset at period
//   Range:       linear initial -> floor over total steps
struct LrSchedule {
  enum class Kind { kConstant, kStepHalving, kCyclic, kRange };
  Kind kind = Kind::kConstant;
  double initial = 1e-3;
  double floor_rate = 0.0;
  std::int64_t period = 1;

  static LrSchedule constant(double rate);
  static LrSchedule step_halving(double initial, std::int64_t period);
  static LrSchedule cyclic(double start, double floor, std::int64_t period);
  static LrSchedule range_decay(double high, double low,
                                std::int64_t total_steps);
};

double schedule_rate(const LrSchedule& schedule, std::int64_t step);

}  // namespace qsr

#endif  // QSR_OPTIM_HPP_
