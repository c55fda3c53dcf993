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

#ifndef QSR_LOSS_HPP_
#define QSR_LOSS_HPP_

#include <string>

#include "qsr/tensor.hpp"

namespace qsr {

// Mean element-wise training losses.
//   L1:          mean |d|
//   L2:          mean d^2
//   Charbonnier: mean sqrt(d^2 + eps^2)
struct LossSpec {
  enum class Kind { kL1, kL2, kCharbonnier };
  Kind kind = Kind::kL1;
  float eps = 1e-3f;  // Charbonnier only; must be > 0

  static LossSpec parse(const std::string& name);
  const char* name() const;
};

double loss_forward(const Tensor& pred, const Tensor& target,
                    const LossSpec& spec);
// dL/dpred.
Tensor loss_backward(const Tensor& pred, const Tensor& target,
                     const LossSpec& spec);

}  // namespace qsr

#endif  // QSR_LOSS_HPP_
