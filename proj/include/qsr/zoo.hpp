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

#ifndef QSR_ZOO_HPP_
#define QSR_ZOO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "qsr/graph.hpp"
#include "qsr/resample.hpp"

namespace qsr {

// Train-time vs deploy-time topology for re-parameterizable nets.
enum class ReparamMode { kTrain, kInference };

// Default channel widths. Chosen so that each net's serialized INT8 size
// lands on its published model-size budget.
struct ZooDefaults {
  static constexpr int kAbpnWidth = 35;
  static constexpr int kXlsrWidth = 64;
  static constexpr int kXlsrGblocks = 3;
  static constexpr int kTinySrWidth = 36;
  static constexpr int kFastSrWidth = 22;
  static constexpr int kPrpsrWidth = 40;
  static constexpr int kEdsrWidth = 64;
};

// Anchor-based plain net: conv trunk learning the residual against a
// pixel-repeat anchor, clipped to [0,255], then depth-to-space x3.
ModelGraph build_abpn(int width = ZooDefaults::kAbpnWidth,
                      std::uint64_t seed = 0);

// Grouped-convolution net: Gblocks (grouped 3x3 + 1x1 merge + ReLU) with a
// skip from the first feature map; width must be divisible by 4.
ModelGraph build_xlsr(int width = ZooDefaults::kXlsrWidth,
                      int n_gblocks = ZooDefaults::kXlsrGblocks,
                      std::uint64_t seed = 0);

// Residual trunk between space-to-depth(2) and depth-to-space(6), plus a
// convolutional bridge from the input. Needs even input dims.
ModelGraph build_tinysrnet(int width = ZooDefaults::kTinySrWidth,
                           std::uint64_t seed = 0);

// LR-scale residual trunk with a nearest-neighbor global residual.
ModelGraph build_fastsr(int width = ZooDefaults::kFastSrWidth,
                        std::uint64_t seed = 0);

// Plain sequential convs (5x5 head, five 3x3, 3x3 to 27ch, pixel shuffle).
// In train mode each width-preserving 3x3 becomes x + conv1x1(x) + conv3x3(x).
ModelGraph build_prpsr(int width = ZooDefaults::kPrpsrWidth,
                       ReparamMode mode = ReparamMode::kInference,
                       std::uint64_t seed = 0);

// EDSR-style body: six gated residual blocks, 384->64 reduction, global skip,
// three tail convs, depth-to-space.
ModelGraph build_edsr_attention(int width = ZooDefaults::kEdsrWidth,
                                std::uint64_t seed = 0);

// Architectures buildable by name: abpn, xlsr, tinysrnet, fastsr,
// prpsr (train form), prpsr_inference, edsr_attn.
const std::vector<std::string>& zoo_arch_names();
ModelGraph build_arch(const std::string& name, std::uint64_t seed = 0);

}  // namespace qsr

#endif  // QSR_ZOO_HPP_
