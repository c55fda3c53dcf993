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

#include "qsr/optim.hpp"

#include <cmath>

#include "qsr/errors.hpp"

namespace qsr {

void adam_step(AdamState& state, std::span<const ParamSlot> slots) {
  if (state.m.empty()) {
    state.m.resize(slots.size());
    state.v.resize(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      state.m[i].assign(slots[i].size, 0.0f);
      state.v[i].assign(slots[i].size, 0.0f);
    }
  }
  if (state.m.size() != slots.size())
    throw TrainError("adam_step: slot count changed between steps");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& s = slots[i];
    if (state.m[i].size() != s.size)
      throw TrainError("adam_step: slot size changed between steps");
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    for (std::size_t j = 0; j < s.size; ++j) {
      const double g = s.grads[j];
      m[j] = static_cast<float>(state.beta1 * m[j] + (1.0 - state.beta1) * g);
      v[j] =
          static_cast<float>(state.beta2 * v[j] + (1.0 - state.beta2) * g * g);
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      s.values[j] -= static_cast<float>(state.lr * m_hat /
                                        (std::sqrt(v_hat) + state.eps));
    }
  }
}

LrSchedule LrSchedule::constant(double rate) {
  LrSchedule s;
  s.kind = Kind::kConstant;
  s.initial = rate;
  return s;
}

LrSchedule LrSchedule::step_halving(double initial, std::int64_t period) {
  LrSchedule s;
  s.kind = Kind::kStepHalving;
  s.initial = initial;
  s.period = period;
  return s;
}

LrSchedule LrSchedule::cyclic(double start, double floor, std::int64_t period) {
  LrSchedule s;
  s.kind = Kind::kCyclic;
  s.initial = start;
  s.floor_rate = floor;
  s.period = period;
  return s;
}

LrSchedule LrSchedule::range_decay(double high, double low,
                                   std::int64_t total_steps) {
  LrSchedule s;
  s.kind = Kind::kRange;
  s.initial = high;
  s.floor_rate = low;
  s.period = total_steps;
  return s;
}

double schedule_rate(const LrSchedule& s, std::int64_t step) {
  if (step < 0) throw TrainError("schedule_rate: negative step");
  switch (s.kind) {
    case LrSchedule::Kind::kConstant:
      return s.initial;
    case LrSchedule::Kind::kStepHalving:
      return s.initial * std::pow(2.0, -double(step / s.period));
    case LrSchedule::Kind::kCyclic: {
      const double t = double(step % s.period) / double(s.period);
      return s.initial - (s.initial - s.floor_rate) * t;
    }
    case LrSchedule::Kind::kRange: {
      if (step >= s.period) return s.floor_rate;
      const double t = double(step) / double(s.period);
      return s.initial - (s.initial - s.floor_rate) * t;
    }
  }
  return s.initial;
}

}  // namespace qsr
