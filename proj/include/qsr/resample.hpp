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

#ifndef QSR_RESAMPLE_HPP_
#define QSR_RESAMPLE_HPP_

#include "qsr/tensor.hpp"

namespace qsr {

// Keys bicubic kernel, a = -0.5.
double keys_cubic(double s);

// Separable bicubic upscaling by an integer factor, edge-replicate borders,
// channels independent, output clamped to [0, 255].
Tensor bicubic_upscale(const Tensor& image, int factor);

// Separable anti-aliased bicubic downscaling by an integer factor (the kernel
// is stretched by the factor), edge-replicate borders. Spatial dims must be
// divisible by the factor; see crop_to_multiple.
Tensor bicubic_downscale(const Tensor& image, int factor);

// Top-left crop so both spatial dims are divisible by m.
Tensor crop_to_multiple(const Tensor& t, int m);

}  // namespace qsr

#endif  // QSR_RESAMPLE_HPP_
