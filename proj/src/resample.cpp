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

#include "qsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qsr {

namespace {

constexpr double kA = -0.5;

struct TapSet {
  int first = 0;                // first source index (unclamped)
  std::vector<double> weights;  // normalized
};

// Taps for one output coordinate on an axis of length n_in resampled by
// `ratio` source pixels per output pixel (1/f for upscale, f for downscale).
// Anti-aliasing stretches the kernel by max(ratio, 1).
TapSet make_taps(std::int64_t out_i, double ratio) {
  const double src = (out_i + 0.5) * ratio - 0.5;
  const double stretch = std::max(ratio, 1.0);
  const double support = 2.0 * stretch;
  TapSet taps;
  taps.first = static_cast<int>(std::ceil(src - support));
  const int last = static_cast<int>(std::floor(src + support));
  taps.weights.resize(last - taps.first + 1);
  double sum = 0.0;
  for (int t = taps.first; t <= last; ++t) {
    const double w = keys_cubic((src - t) / stretch) / stretch;
    taps.weights[t - taps.first] = w;
    sum += w;
  }
  for (double& w : taps.weights) w /= sum;
  return taps;
}

// One separable pass along the x axis; transposing between the two passes
// keeps the inner loops contiguous.
Tensor resample_rows(const Tensor& in, std::int64_t out_w, double ratio) {
  const TensorShape& s = in.shape();
  std::vector<TapSet> taps(out_w);
  for (std::int64_t x = 0; x < out_w; ++x) taps[x] = make_taps(x, ratio);

  Tensor out(s.b, s.c, s.h, out_w);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = in.chan(b, c);
      float* dst = out.chan(b, c);
      for (std::int64_t y = 0; y < s.h; ++y) {
        const float* row = src + y * s.w;
        float* orow = dst + y * out_w;
        for (std::int64_t x = 0; x < out_w; ++x) {
          const TapSet& t = taps[x];
          double acc = 0.0;
          for (std::size_t j = 0; j < t.weights.size(); ++j) {
            const std::int64_t sx = std::clamp<std::int64_t>(
                t.first + static_cast<std::int64_t>(j), 0, s.w - 1);
            acc += t.weights[j] * row[sx];
          }
          orow[x] = static_cast<float>(acc);
        }
      }
    }
  return out;
}

Tensor transpose_hw(const Tensor& in) {
  const TensorShape& s = in.shape();
  Tensor out(s.b, s.c, s.w, s.h);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c) {
      const float* src = in.chan(b, c);
      float* dst = out.chan(b, c);
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x)
          dst[x * s.h + y] = src[y * s.w + x];
    }
  return out;
}

Tensor resample_2d(const Tensor& in, std::int64_t out_h, std::int64_t out_w,
                   double ratio) {
  Tensor t = resample_rows(in, out_w, ratio);
  t = transpose_hw(t);
  t = resample_rows(t, out_h, ratio);
  return transpose_hw(t);
}

void clamp_pixels(Tensor& t) {
  for (auto& v : t.vec()) v = std::clamp(v, 0.0f, 255.0f);
}

}  // namespace

double keys_cubic(double s) {
  s = std::abs(s);
  if (s <= 1.0) return ((kA + 2.0) * s - (kA + 3.0)) * s * s + 1.0;
  if (s < 2.0) return ((kA * s - 5.0 * kA) * s + 8.0 * kA) * s - 4.0 * kA;
  return 0.0;
}

Tensor bicubic_upscale(const Tensor& image, int factor) {
  if (factor < 1) throw ShapeError("bicubic_upscale: factor must be >= 1");
  if (factor == 1) return image;
  const TensorShape& s = image.shape();
  Tensor out = resample_2d(image, s.h * factor, s.w * factor, 1.0 / factor);
  clamp_pixels(out);
  return out;
}

Tensor bicubic_downscale(const Tensor& image, int factor) {
  if (factor < 1) throw ShapeError("bicubic_downscale: factor must be >= 1");
  if (factor == 1) return image;
  const TensorShape& s = image.shape();
  if (s.h % factor != 0)
    throw ShapeError("bicubic_downscale: height axis " + std::to_string(s.h) +
                     " not divisible by " + std::to_string(factor) +
                     " (use crop_to_multiple)");
  if (s.w % factor != 0)
    throw ShapeError("bicubic_downscale: width axis " + std::to_string(s.w) +
                     " not divisible by " + std::to_string(factor));
  Tensor out =
      resample_2d(image, s.h / factor, s.w / factor, double(factor));
  clamp_pixels(out);
  return out;
}

Tensor crop_to_multiple(const Tensor& t, int m) {
  const TensorShape& s = t.shape();
  const std::int64_t h = s.h - s.h % m;
  const std::int64_t w = s.w - s.w % m;
  if (h == s.h && w == s.w) return t;
  if (h <= 0 || w <= 0)
    throw ShapeError("crop_to_multiple: image smaller than multiple " +
                     std::to_string(m));
  Tensor out(s.b, s.c, h, w);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        std::copy(t.chan(b, c) + y * s.w, t.chan(b, c) + y * s.w + w,
                  out.chan(b, c) + y * w);
  return out;
}

}  // namespace qsr
