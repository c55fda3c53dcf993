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

#include "qsr/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace qsr {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return;
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() +
                   " vs " + b.shape().str());
}

}  // namespace

std::string TensorShape::str() const {
  std::ostringstream os;
  os << "(" << b << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(TensorShape s) : shape_(s) {
  if (s.b < 0 || s.c < 0 || s.h < 0 || s.w < 0)
    throw ShapeError("tensor: negative dimension in " + s.str());
  data_.assign(static_cast<std::size_t>(s.numel()), 0.0f);
}

Tensor::Tensor(std::int64_t b, std::int64_t c, std::int64_t h, std::int64_t w)
    : Tensor(TensorShape{b, c, h, w}) {}

Tensor Tensor::full(TensorShape s, float value) {
  Tensor t(s);
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::random_uniform(TensorShape s, float lo, float hi, Rng& rng) {
  Tensor t(s);
  for (auto& v : t.data_) v = rng.uniform_float(lo, hi);
  return t;
}

Tensor relu(const Tensor& t) {
  Tensor out(t.shape());
  const float* src = t.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = t.numel(); i < n; ++i)
    dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
  return out;
}

Tensor clipped_relu(const Tensor& t, float max_value) {
  Tensor out(t.shape());
  const float* src = t.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = t.numel(); i < n; ++i)
    dst[i] = std::min(std::max(src[i], 0.0f), max_value);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = a.numel(); i < n; ++i) dst[i] = pa[i] + pb[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const TensorShape& sa = a.shape();
  const TensorShape& sb = b.shape();
  if (sb.b == sa.b && sb.c == sa.c && sb.h == 1 && sb.w == 1 &&
      (sa.h != 1 || sa.w != 1)) {
    Tensor out(sa);
    const std::int64_t plane = sa.h * sa.w;
    for (std::int64_t n = 0; n < sa.b; ++n)
      for (std::int64_t c = 0; c < sa.c; ++c) {
        const float g = b.at(n, c, 0, 0);
        const float* src = a.chan(n, c);
        float* dst = out.chan(n, c);
        for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] * g;
      }
    return out;
  }
  check_same_shape(a, b, "mul");
  Tensor out(sa);
  const float* pa = a.data();
  const float* pb = b.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = a.numel(); i < n; ++i) dst[i] = pa[i] * pb[i];
  return out;
}

Tensor depth_to_space(const Tensor& t, int block) {
  const TensorShape& s = t.shape();
  if (block < 1) throw ShapeError("depth_to_space: block must be >= 1");
  const std::int64_t bb = static_cast<std::int64_t>(block) * block;
  if (s.c % bb != 0)
    throw ShapeError("depth_to_space: channel axis " + std::to_string(s.c) +
                     " not divisible by block^2 = " + std::to_string(bb));
  Tensor out(s.b, s.c / bb, s.h * block, s.w * block);
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c / bb; ++c)
      for (int dy = 0; dy < block; ++dy)
        for (int dx = 0; dx < block; ++dx) {
          const float* src = t.chan(n, c * bb + dy * block + dx);
          float* dst = out.chan(n, c);
          for (std::int64_t y = 0; y < s.h; ++y) {
            const float* row = src + y * s.w;
            float* orow = dst + (y * block + dy) * (s.w * block) + dx;
            for (std::int64_t x = 0; x < s.w; ++x) orow[x * block] = row[x];
          }
        }
  return out;
}

Tensor space_to_depth(const Tensor& t, int block) {
  const TensorShape& s = t.shape();
  if (block < 1) throw ShapeError("space_to_depth: block must be >= 1");
  if (s.h % block != 0)
    throw ShapeError("space_to_depth: height axis " + std::to_string(s.h) +
                     " not divisible by block " + std::to_string(block));
  if (s.w % block != 0)
    throw ShapeError("space_to_depth: width axis " + std::to_string(s.w) +
                     " not divisible by block " + std::to_string(block));
  const std::int64_t bb = static_cast<std::int64_t>(block) * block;
  Tensor out(s.b, s.c * bb, s.h / block, s.w / block);
  const TensorShape& o = out.shape();
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (int dy = 0; dy < block; ++dy)
        for (int dx = 0; dx < block; ++dx) {
          float* dst = out.chan(n, c * bb + dy * block + dx);
          const float* src = t.chan(n, c);
          for (std::int64_t y = 0; y < o.h; ++y) {
            float* orow = dst + y * o.w;
            const float* row = src + (y * block + dy) * s.w + dx;
            for (std::int64_t x = 0; x < o.w; ++x) orow[x] = row[x * block];
          }
        }
  return out;
}

Tensor stack_repeat(const Tensor& t, int n) {
  if (n < 1) throw ShapeError("stack_repeat: n must be >= 1");
  const TensorShape& s = t.shape();
  Tensor out(s.b, s.c * n, s.h, s.w);
  const std::int64_t plane = s.h * s.w;
  for (std::int64_t bi = 0; bi < s.b; ++bi)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = t.chan(bi, c);
      for (int r = 0; r < n; ++r)
        std::copy(src, src + plane, out.chan(bi, c * n + r));
    }
  return out;
}

Tensor nearest_upsample(const Tensor& t, int factor) {
  if (factor < 1) throw ShapeError("nearest_upsample: factor must be >= 1");
  const TensorShape& s = t.shape();
  Tensor out(s.b, s.c, s.h * factor, s.w * factor);
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = t.chan(n, c);
      float* dst = out.chan(n, c);
      for (std::int64_t y = 0; y < s.h * factor; ++y) {
        const float* row = src + (y / factor) * s.w;
        float* orow = dst + y * s.w * factor;
        for (std::int64_t x = 0; x < s.w * factor; ++x)
          orow[x] = row[x / factor];
      }
    }
  return out;
}

Tensor flip_horizontal(const Tensor& t) {
  const TensorShape& s = t.shape();
  Tensor out(s);
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y) {
        const float* row = t.chan(n, c) + y * s.w;
        float* orow = out.chan(n, c) + y * s.w;
        for (std::int64_t x = 0; x < s.w; ++x) orow[x] = row[s.w - 1 - x];
      }
  return out;
}

Tensor flip_vertical(const Tensor& t) {
  const TensorShape& s = t.shape();
  Tensor out(s);
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y) {
        const float* row = t.chan(n, c) + (s.h - 1 - y) * s.w;
        float* orow = out.chan(n, c) + y * s.w;
        std::copy(row, row + s.w, orow);
      }
  return out;
}

Tensor rotate90(const Tensor& t, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return t;
  const TensorShape& s = t.shape();
  // One CCW quarter turn: out(y, x) = in(x, h_out - 1 - y) with swapped dims.
  Tensor out(k % 2 == 0 ? s : TensorShape{s.b, s.c, s.w, s.h});
  const TensorShape& o = out.shape();
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = t.chan(n, c);
      float* dst = out.chan(n, c);
      for (std::int64_t y = 0; y < o.h; ++y)
        for (std::int64_t x = 0; x < o.w; ++x) {
          std::int64_t sy, sx;
          switch (k) {
            case 1: sy = x; sx = o.h - 1 - y; break;
            case 2: sy = s.h - 1 - y; sx = s.w - 1 - x; break;
            default: sy = o.w - 1 - x; sx = y; break;
          }
          dst[y * o.w + x] = src[sy * s.w + sx];
        }
    }
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  check_same_shape(input, grad_out, "relu_backward");
  Tensor out(input.shape());
  const float* x = input.data();
  const float* g = grad_out.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = input.numel(); i < n; ++i)
    dst[i] = x[i] > 0.0f ? g[i] : 0.0f;
  return out;
}

Tensor clipped_relu_backward(const Tensor& input, float max_value,
                             const Tensor& grad_out) {
  check_same_shape(input, grad_out, "clipped_relu_backward");
  Tensor out(input.shape());
  const float* x = input.data();
  const float* g = grad_out.data();
  float* dst = out.data();
  for (std::int64_t i = 0, n = input.numel(); i < n; ++i)
    dst[i] = (x[i] > 0.0f && x[i] < max_value) ? g[i] : 0.0f;
  return out;
}

Tensor mul_backward_a(const Tensor& b, const Tensor& grad_out) {
  return mul(grad_out, b);
}

Tensor mul_backward_b(const Tensor& a, const Tensor& b_shape_like,
                      const Tensor& grad_out) {
  const TensorShape& sb = b_shape_like.shape();
  const TensorShape& sa = a.shape();
  if (sb == sa) return mul(grad_out, a);
  // Broadcast case: reduce grad*a over the spatial plane.
  Tensor out(sb);
  const std::int64_t plane = sa.h * sa.w;
  for (std::int64_t n = 0; n < sa.b; ++n)
    for (std::int64_t c = 0; c < sa.c; ++c) {
      const float* pa = a.chan(n, c);
      const float* pg = grad_out.chan(n, c);
      double acc = 0.0;
      for (std::int64_t i = 0; i < plane; ++i)
        acc += static_cast<double>(pa[i]) * pg[i];
      out.at(n, c, 0, 0) = static_cast<float>(acc);
    }
  return out;
}

Tensor stack_repeat_backward(const Tensor& grad_out, int n) {
  const TensorShape& s = grad_out.shape();
  if (s.c % n != 0)
    throw ShapeError("stack_repeat_backward: channel axis not divisible by n");
  Tensor out(s.b, s.c / n, s.h, s.w);
  const std::int64_t plane = s.h * s.w;
  for (std::int64_t bi = 0; bi < s.b; ++bi)
    for (std::int64_t c = 0; c < s.c / n; ++c) {
      float* dst = out.chan(bi, c);
      for (int r = 0; r < n; ++r) {
        const float* src = grad_out.chan(bi, c * n + r);
        for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
      }
    }
  return out;
}

Tensor nearest_upsample_backward(const Tensor& grad_out, int factor) {
  const TensorShape& s = grad_out.shape();
  if (s.h % factor != 0 || s.w % factor != 0)
    throw ShapeError("nearest_upsample_backward: spatial axes not divisible");
  Tensor out(s.b, s.c, s.h / factor, s.w / factor);
  for (std::int64_t n = 0; n < s.b; ++n)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = grad_out.chan(n, c);
      float* dst = out.chan(n, c);
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x)
          dst[(y / factor) * (s.w / factor) + x / factor] += src[y * s.w + x];
    }
  return out;
}

}  // namespace qsr
