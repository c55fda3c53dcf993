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

#ifndef QSR_CONV_HPP_
#define QSR_CONV_HPP_

#include <vector>

#include "qsr/tensor.hpp"

namespace qsr {

// A 2-D convolution: zero same-padding by default, stride 1 in practice.
// Weights are (out_channels, in_channels/groups, kh, kw); one bias per
// output channel.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kh = 0, kw = 0;
  int stride = 1;
  int pad = -1;  // -1 selects same-padding (kh-1)/2, (kw-1)/2
  int groups = 1;
  Tensor weights;
  std::vector<float> bias;

  int pad_h() const { return pad >= 0 ? pad : (kh - 1) / 2; }
  int pad_w() const { return pad >= 0 ? pad : (kw - 1) / 2; }

  void validate() const;
};

// Zero-initialized spec with same-padding and consistent weight shape.
ConvSpec make_conv(int in_channels, int out_channels, int kernel,
                   int groups = 1);

// Optimized kernel (im2col + GEMM, parallel over fixed tiles). Gated by an
// equivalence test against conv2d_reference.
Tensor conv2d(const Tensor& input, const ConvSpec& spec);

// Naive triple-loop kernel; the correctness reference.
Tensor conv2d_reference(const Tensor& input, const ConvSpec& spec);

// dL/dinput given dL/doutput: convolution with the spatially flipped,
// channel-transposed kernel. Stride-1 same-padding only.
Tensor conv2d_backward_input(const Tensor& grad_out, const ConvSpec& spec);

// dL/dweights and dL/dbias; gradients are accumulated into grad_w / grad_b
// which must be pre-sized (weights shape / out_channels).
void conv2d_backward_params(const Tensor& input, const Tensor& grad_out,
                            const ConvSpec& spec, Tensor& grad_w,
                            std::vector<float>& grad_b);

}  // namespace qsr

#endif  // QSR_CONV_HPP_
