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

#include "qsr/conv.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstring>

#include "qsr/parallel.hpp"

namespace qsr {

namespace {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using MapConstRowMat = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

// Pixels per im2col tile. Fixed by the problem, never by the thread budget,
// so results do not depend on how work is scheduled.
constexpr std::int64_t kTilePixels = 8192;

void check_input(const Tensor& input, const ConvSpec& spec) {
  spec.validate();
  const TensorShape& s = input.shape();
  if (s.c != spec.in_channels)
    throw ShapeError("conv2d: channel axis is " + std::to_string(s.c) +
                     ", spec expects " + std::to_string(spec.in_channels));
  if (s.h + 2 * spec.pad_h() < spec.kh)
    throw ShapeError("conv2d: height axis " + std::to_string(s.h) +
                     " smaller than kernel extent");
  if (s.w + 2 * spec.pad_w() < spec.kw)
    throw ShapeError("conv2d: width axis " + std::to_string(s.w) +
                     " smaller than kernel extent");
}

// Fills a row-major (icg*kh*kw) x n_pix patch matrix for the flat output
// pixel range [p0, p0+n_pix) of batch item b, channel group g.
void fill_im2col(const Tensor& input, const ConvSpec& spec, std::int64_t b,
                 int g, std::int64_t p0, std::int64_t n_pix, float* buf) {
  const TensorShape& s = input.shape();
  const int icg = spec.in_channels / spec.groups;
  const int ph = spec.pad_h(), pw = spec.pad_w();
  for (int ic = 0; ic < icg; ++ic) {
    const float* plane = input.chan(b, g * icg + ic);
    for (int ky = 0; ky < spec.kh; ++ky)
      for (int kx = 0; kx < spec.kw; ++kx) {
        float* row = buf + ((static_cast<std::int64_t>(ic) * spec.kh + ky) *
                            spec.kw + kx) * n_pix;
        std::int64_t j = 0;
        while (j < n_pix) {
          const std::int64_t p = p0 + j;
          const std::int64_t oy = p / s.w;
          const std::int64_t ox = p % s.w;
          const std::int64_t run = std::min(n_pix - j, s.w - ox);
          const std::int64_t sy = oy + ky - ph;
          if (sy < 0 || sy >= s.h) {
            std::fill(row + j, row + j + run, 0.0f);
          } else {
            const float* src = plane + sy * s.w;
            for (std::int64_t r = 0; r < run; ++r) {
              const std::int64_t sx = ox + r + kx - pw;
              row[j + r] = (sx >= 0 && sx < s.w) ? src[sx] : 0.0f;
            }
          }
          j += run;
        }
      }
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1)
    throw ShapeError("conv: channel axes must be >= 1");
  if (groups < 1 || in_channels % groups != 0)
    throw ShapeError("conv: in-channel axis " + std::to_string(in_channels) +
                     " not divisible by groups " + std::to_string(groups));
  if (out_channels % groups != 0)
    throw ShapeError("conv: out-channel axis " + std::to_string(out_channels) +
                     " not divisible by groups " + std::to_string(groups));
  if (kh < 1 || kw < 1) throw ShapeError("conv: kernel extent must be >= 1");
  if (stride < 1) throw ShapeError("conv: stride must be >= 1");
  const TensorShape want{out_channels, in_channels / groups, kh, kw};
  if (!(weights.shape() == want))
    throw ShapeError("conv: weight shape " + weights.shape().str() +
                     ", expected " + want.str());
  if (static_cast<int>(bias.size()) != out_channels)
    throw ShapeError("conv: bias length " + std::to_string(bias.size()) +
                     ", expected " + std::to_string(out_channels));
}

ConvSpec make_conv(int in_channels, int out_channels, int kernel, int groups) {
  ConvSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.kh = spec.kw = kernel;
  spec.groups = groups;
  spec.weights =
      Tensor(out_channels, in_channels / groups, kernel, kernel);
  spec.bias.assign(out_channels, 0.0f);
  spec.validate();
  return spec;
}

Tensor conv2d_reference(const Tensor& input, const ConvSpec& spec) {
  check_input(input, spec);
  const TensorShape& s = input.shape();
  const int ph = spec.pad_h(), pw = spec.pad_w();
  const std::int64_t oh = (s.h + 2 * ph - spec.kh) / spec.stride + 1;
  const std::int64_t ow = (s.w + 2 * pw - spec.kw) / spec.stride + 1;
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  Tensor out(s.b, spec.out_channels, oh, ow);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (int oc = 0; oc < spec.out_channels; ++oc) {
      const int g = oc / ocg;
      for (std::int64_t oy = 0; oy < oh; ++oy)
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          float acc = spec.bias[oc];
          for (int ic = 0; ic < icg; ++ic)
            for (int ky = 0; ky < spec.kh; ++ky)
              for (int kx = 0; kx < spec.kw; ++kx) {
                const std::int64_t sy = oy * spec.stride + ky - ph;
                const std::int64_t sx = ox * spec.stride + kx - pw;
                if (sy < 0 || sy >= s.h || sx < 0 || sx >= s.w) continue;
                acc += input.at(b, g * icg + ic, sy, sx) *
                       spec.weights.at(oc, ic, ky, kx);
              }
          out.at(b, oc, oy, ox) = acc;
        }
    }
  return out;
}

Tensor conv2d(const Tensor& input, const ConvSpec& spec) {
  check_input(input, spec);
  if (spec.stride != 1) return conv2d_reference(input, spec);

  const TensorShape& s = input.shape();
  const std::int64_t hw = s.h * s.w;
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  const std::int64_t k = static_cast<std::int64_t>(icg) * spec.kh * spec.kw;
  Tensor out(s.b, spec.out_channels, s.h, s.w);

  const bool pointwise = spec.kh == 1 && spec.kw == 1 && spec.pad_h() == 0 &&
                         spec.pad_w() == 0;
  const std::int64_t tiles = (hw + kTilePixels - 1) / kTilePixels;
  const std::int64_t tasks = s.b * spec.groups * tiles;

  parallel_for(tasks, [&](std::int64_t task) {
    const std::int64_t b = task / (spec.groups * tiles);
    const int g = static_cast<int>((task / tiles) % spec.groups);
    const std::int64_t t = task % tiles;
    const std::int64_t p0 = t * kTilePixels;
    const std::int64_t n_pix = std::min(kTilePixels, hw - p0);

    MapConstRowMat w_mat(spec.weights.chan(g * ocg, 0), ocg, k);
    StridedMap out_mat(out.chan(b, g * ocg) + p0, ocg, n_pix,
                       Eigen::OuterStride<>(hw));
    if (pointwise) {
      StridedMap in_mat(const_cast<float*>(input.chan(b, g * icg)) + p0, icg,
                        n_pix, Eigen::OuterStride<>(hw));
      out_mat.noalias() = w_mat * in_mat;
    } else {
      std::vector<float> buf(static_cast<std::size_t>(k) * n_pix);
      fill_im2col(input, spec, b, g, p0, n_pix, buf.data());
      MapConstRowMat col_mat(buf.data(), k, n_pix);
      out_mat.noalias() = w_mat * col_mat;
    }
    for (int o = 0; o < ocg; ++o)
      out_mat.row(o).array() += spec.bias[g * ocg + o];
  });
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const ConvSpec& spec) {
  spec.validate();
  if (spec.stride != 1)
    throw ShapeError("conv2d_backward_input: stride must be 1");
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;

  ConvSpec flipped;
  flipped.in_channels = spec.out_channels;
  flipped.out_channels = spec.in_channels;
  flipped.kh = spec.kh;
  flipped.kw = spec.kw;
  flipped.pad = spec.pad;
  flipped.groups = spec.groups;
  flipped.weights = Tensor(spec.in_channels, ocg, spec.kh, spec.kw);
  flipped.bias.assign(spec.in_channels, 0.0f);
  for (int g = 0; g < spec.groups; ++g)
    for (int i = 0; i < icg; ++i)
      for (int o = 0; o < ocg; ++o)
        for (int ky = 0; ky < spec.kh; ++ky)
          for (int kx = 0; kx < spec.kw; ++kx)
            flipped.weights.at(g * icg + i, o, ky, kx) = spec.weights.at(
                g * ocg + o, i, spec.kh - 1 - ky, spec.kw - 1 - kx);
  return conv2d(grad_out, flipped);
}

void conv2d_backward_params(const Tensor& input, const Tensor& grad_out,
                            const ConvSpec& spec, Tensor& grad_w,
                            std::vector<float>& grad_b) {
  check_input(input, spec);
  if (spec.stride != 1)
    throw ShapeError("conv2d_backward_params: stride must be 1");
  const TensorShape& s = input.shape();
  const std::int64_t hw = s.h * s.w;
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  const std::int64_t k = static_cast<std::int64_t>(icg) * spec.kh * spec.kw;

  // Per-(batch, group) partial accumulators, reduced in fixed order below so
  // the result does not depend on scheduling.
  std::vector<RowMat> partial_w(static_cast<std::size_t>(s.b) * spec.groups);
  std::vector<std::vector<double>> partial_b(
      static_cast<std::size_t>(s.b) * spec.groups);

  parallel_for(s.b * spec.groups, [&](std::int64_t task) {
    const std::int64_t b = task / spec.groups;
    const int g = static_cast<int>(task % spec.groups);
    RowMat acc = RowMat::Zero(ocg, k);
    std::vector<double> bacc(ocg, 0.0);
    std::vector<float> buf;
    for (std::int64_t p0 = 0; p0 < hw; p0 += kTilePixels) {
      const std::int64_t n_pix = std::min(kTilePixels, hw - p0);
      buf.resize(static_cast<std::size_t>(k) * n_pix);
      fill_im2col(input, spec, b, g, p0, n_pix, buf.data());
      MapConstRowMat col_mat(buf.data(), k, n_pix);
      StridedMap go_mat(const_cast<float*>(grad_out.chan(b, g * ocg)) + p0,
                        ocg, n_pix, Eigen::OuterStride<>(hw));
      acc.noalias() += go_mat * col_mat.transpose();
    }
    for (int o = 0; o < ocg; ++o) {
      const float* plane = grad_out.chan(b, g * ocg + o);
      double sum = 0.0;
      for (std::int64_t i = 0; i < hw; ++i) sum += plane[i];
      bacc[o] = sum;
    }
    partial_w[task] = std::move(acc);
    partial_b[task] = std::move(bacc);
  });

  for (std::int64_t b = 0; b < s.b; ++b)
    for (int g = 0; g < spec.groups; ++g) {
      const RowMat& acc = partial_w[b * spec.groups + g];
      const std::vector<double>& bacc = partial_b[b * spec.groups + g];
      MapRowMat gw(grad_w.chan(g * ocg, 0), ocg, k);
      gw += acc;
      for (int o = 0; o < ocg; ++o)
        grad_b[g * ocg + o] += static_cast<float>(bacc[o]);
    }
}

}  // namespace qsr
