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

#include "qsr/loss.hpp"

#include <cmath>

namespace qsr {

namespace {

void check(const Tensor& pred, const Tensor& target, const LossSpec& spec) {
  if (!(pred.shape() == target.shape()))
    throw ShapeError("loss: prediction shape " + pred.shape().str() +
                     " vs target " + target.shape().str());
  if (spec.kind == LossSpec::Kind::kCharbonnier && !(spec.eps > 0.0f))
    throw Error("loss: Charbonnier eps must be > 0");
}

}  // namespace

LossSpec LossSpec::parse(const std::string& name) {
  LossSpec spec;
  if (name == "l1") spec.kind = Kind::kL1;
  else if (name == "l2") spec.kind = Kind::kL2;
  else if (name == "charbonnier") spec.kind = Kind::kCharbonnier;
  else throw ConfigError("unknown loss '" + name + "'");
  return spec;
}

const char* LossSpec::name() const {
  switch (kind) {
    case Kind::kL1: return "l1";
    case Kind::kL2: return "l2";
    default: return "charbonnier";
  }
}

double loss_forward(const Tensor& pred, const Tensor& target,
                    const LossSpec& spec) {
  check(pred, target, spec);
  const float* p = pred.data();
  const float* t = target.data();
  const std::int64_t n = pred.numel();
  double acc = 0.0;
  switch (spec.kind) {
    case LossSpec::Kind::kL1:
      for (std::int64_t i = 0; i < n; ++i) acc += std::abs(double(p[i]) - t[i]);
      break;
    case LossSpec::Kind::kL2:
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = double(p[i]) - t[i];
        acc += d * d;
      }
      break;
    case LossSpec::Kind::kCharbonnier: {
      const double e2 = double(spec.eps) * spec.eps;
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = double(p[i]) - t[i];
        acc += std::sqrt(d * d + e2);
      }
      break;
    }
  }
  return acc / static_cast<double>(n);
}

Tensor loss_backward(const Tensor& pred, const Tensor& target,
                     const LossSpec& spec) {
  check(pred, target, spec);
  Tensor grad(pred.shape());
  const float* p = pred.data();
  const float* t = target.data();
  float* g = grad.data();
  const std::int64_t n = pred.numel();
  const float inv_n = 1.0f / static_cast<float>(n);
  switch (spec.kind) {
    case LossSpec::Kind::kL1:
      for (std::int64_t i = 0; i < n; ++i) {
        const float d = p[i] - t[i];
        g[i] = (d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f)) * inv_n;
      }
      break;
    case LossSpec::Kind::kL2:
      for (std::int64_t i = 0; i < n; ++i) g[i] = 2.0f * (p[i] - t[i]) * inv_n;
      break;
    case LossSpec::Kind::kCharbonnier: {
      const float e2 = spec.eps * spec.eps;
      for (std::int64_t i = 0; i < n; ++i) {
        const float d = p[i] - t[i];
        g[i] = d / std::sqrt(d * d + e2) * inv_n;
      }
      break;
    }
  }
  return grad;
}

}  // namespace qsr
