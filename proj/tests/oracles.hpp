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
//
// Independent reference implementations used only by tests. These stay
// deliberately dumb (scalar loops, channel slicing) so they cannot share a
// bug with the optimized library paths they check.

#ifndef QSR_TESTS_ORACLES_HPP_
#define QSR_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "qsr/conv.hpp"
#include "qsr/tensor.hpp"

namespace qsr::oracle {

inline Tensor channel_slice(const Tensor& t, std::int64_t c0, std::int64_t c1) {
  const TensorShape& s = t.shape();
  Tensor out(s.b, c1 - c0, s.h, s.w);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = c0; c < c1; ++c)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x)
          out.at(b, c - c0, y, x) = t.at(b, c, y, x);
  return out;
}

inline Tensor concat_channels(const std::vector<Tensor>& parts) {
  std::int64_t c_total = 0;
  for (const auto& p : parts) c_total += p.shape().c;
  const TensorShape& s0 = parts.front().shape();
  Tensor out(s0.b, c_total, s0.h, s0.w);
  std::int64_t c_off = 0;
  for (const auto& p : parts) {
    const TensorShape& s = p.shape();
    for (std::int64_t b = 0; b < s.b; ++b)
      for (std::int64_t c = 0; c < s.c; ++c)
        for (std::int64_t y = 0; y < s.h; ++y)
          for (std::int64_t x = 0; x < s.w; ++x)
            out.at(b, c_off + c, y, x) = p.at(b, c, y, x);
    c_off += s.c;
  }
  return out;
}

// Grouped conv as g independent plain convs on channel slices, concatenated.
inline Tensor grouped_conv_split_oracle(const Tensor& input,
                                        const ConvSpec& spec) {
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  std::vector<Tensor> parts;
  for (int g = 0; g < spec.groups; ++g) {
    ConvSpec part = make_conv(icg, ocg, spec.kh, 1);
    part.pad = spec.pad;
    for (int o = 0; o < ocg; ++o) {
      part.bias[o] = spec.bias[g * ocg + o];
      for (int i = 0; i < icg; ++i)
        for (int ky = 0; ky < spec.kh; ++ky)
          for (int kx = 0; kx < spec.kw; ++kx)
            part.weights.at(o, i, ky, kx) =
                spec.weights.at(g * ocg + o, i, ky, kx);
    }
    parts.push_back(
        conv2d_reference(channel_slice(input, g * icg, (g + 1) * icg), part));
  }
  return concat_channels(parts);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return m;
}

inline double max_rel_diff(const Tensor& a, const Tensor& b,
                           double floor = 1e-6) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double da = a.data()[i], db = b.data()[i];
    const double denom = std::max({std::abs(da), std::abs(db), floor});
    m = std::max(m, std::abs(da - db) / denom);
  }
  return m;
}

// Relative difference with the denominator floored at the magnitude of the
// reference tensor, so reordered float accumulation near zero-crossings is
// judged against the scale of the data rather than against ~0.
inline double max_scaled_diff(const Tensor& a, const Tensor& b) {
  double scale = 0.0;
  for (std::int64_t i = 0; i < b.numel(); ++i)
    scale = std::max(scale, std::abs(static_cast<double>(b.data()[i])));
  return max_rel_diff(a, b, std::max(scale, 1e-12));
}

inline bool bit_identical(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

// Central finite difference of a scalar-valued computation with respect to
// one stored coordinate.
inline double central_diff(const std::function<double()>& loss, float& coord,
                           double h) {
  const float saved = coord;
  coord = static_cast<float>(saved + h);
  const double up = loss();
  coord = static_cast<float>(saved - h);
  const double down = loss();
  coord = saved;
  return (up - down) / (2.0 * h);
}

// Compares an analytic gradient tensor against central differences at
// n_coords randomly chosen coordinates. The relative error denominator is
// floored at a fraction of the gradient's RMS so near-zero entries are
// judged on the gradient's own scale.
struct FdReport {
  double max_rel = 0.0;
  int checked = 0;
};

inline FdReport fd_check(const std::function<double()>& loss, Tensor& values,
                         const Tensor& analytic, int n_coords, Rng& rng,
                         double h = 1e-3) {
  double rms = 0.0;
  for (std::int64_t i = 0; i < analytic.numel(); ++i)
    rms += double(analytic.data()[i]) * analytic.data()[i];
  rms = std::sqrt(rms / std::max<std::int64_t>(1, analytic.numel()));
  const double floor = std::max(0.05 * rms, 1e-7);

  FdReport report;
  for (int k = 0; k < n_coords; ++k) {
    const std::int64_t i = rng.uniform_int(values.numel());
    const double fd = central_diff(loss, values.vec()[i], h);
    const double an = analytic.data()[i];
    const double denom = std::max({std::abs(fd), std::abs(an), floor});
    report.max_rel = std::max(report.max_rel, std::abs(fd - an) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace qsr::oracle

#endif  // QSR_TESTS_ORACLES_HPP_
