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

#ifndef QSR_TENSOR_HPP_
#define QSR_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "qsr/errors.hpp"
#include "qsr/rng.hpp"

namespace qsr {

// Dense 4-D shape in (batch, channels, height, width) order.
struct TensorShape {
  std::int64_t b = 0, c = 0, h = 0, w = 0;

  std::int64_t numel() const { return b * c * h * w; }
  bool operator==(const TensorShape&) const = default;
  std::string str() const;
};

// Dense float tensor, row-major in (b, c, h, w). Operations treat tensors as
// immutable values and allocate their outputs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorShape s);
  Tensor(std::int64_t b, std::int64_t c, std::int64_t h, std::int64_t w);

  static Tensor full(TensorShape s, float value);
  static Tensor random_uniform(TensorShape s, float lo, float hi, Rng& rng);

  const TensorShape& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& at(std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x) {
    return data_[((b * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float at(std::int64_t b, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data_[((b * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  float* chan(std::int64_t b, std::int64_t c) {
    return data_.data() + (b * shape_.c + c) * shape_.h * shape_.w;
  }
  const float* chan(std::int64_t b, std::int64_t c) const {
    return data_.data() + (b * shape_.c + c) * shape_.h * shape_.w;
  }

  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

 private:
  TensorShape shape_;
  std::vector<float> data_;
};

// --- element-wise ops ------------------------------------------------------

Tensor relu(const Tensor& t);
Tensor clipped_relu(const Tensor& t, float max_value);
Tensor add(const Tensor& a, const Tensor& b);
// Element-wise product. b may be (batch, c, 1, 1) for a per-channel gate.
Tensor mul(const Tensor& a, const Tensor& b);

// --- layout ops ------------------------------------------------------------

// Channel blocks -> spatial blocks. Output pixel (y, x) of channel c reads
// input channel c*block^2 + (y%block)*block + (x%block) at (y/block, x/block).
Tensor depth_to_space(const Tensor& t, int block);
// Exact inverse of depth_to_space.
Tensor space_to_depth(const Tensor& t, int block);
// Repeats every channel n times consecutively, so that
// depth_to_space(stack_repeat(t, s*s), s) == nearest_upsample(t, s).
Tensor stack_repeat(const Tensor& t, int n);
// Replicates each pixel into a factor x factor block.
Tensor nearest_upsample(const Tensor& t, int factor);

// Geometric transforms used by training augmentation.
Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);
// Counter-clockwise quarter turns; k is taken mod 4.
Tensor rotate90(const Tensor& t, int k);

// --- gradients of the layout/element ops -----------------------------------

Tensor relu_backward(const Tensor& input, const Tensor& grad_out);
Tensor clipped_relu_backward(const Tensor& input, float max_value,
                             const Tensor& grad_out);
// Gradients of mul w.r.t. each operand (handles the (b,c,1,1) broadcast).
Tensor mul_backward_a(const Tensor& b, const Tensor& grad_out);
Tensor mul_backward_b(const Tensor& a, const Tensor& b_shape_like,
                      const Tensor& grad_out);
Tensor stack_repeat_backward(const Tensor& grad_out, int n);
Tensor nearest_upsample_backward(const Tensor& grad_out, int factor);

}  // namespace qsr

#endif  // QSR_TENSOR_HPP_
