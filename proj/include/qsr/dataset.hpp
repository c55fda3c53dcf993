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

#ifndef QSR_DATASET_HPP_
#define QSR_DATASET_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qsr/rng.hpp"
#include "qsr/tensor.hpp"

namespace qsr {

// Loads an 8-bit PNG as a (1, 3, h, w) tensor with values 0..255.
// Grayscale expands to three identical channels; an alpha channel is
// dropped; 16-bit files are rejected.
Tensor load_image(const std::filesystem::path& path);

// Saves a (1, 3, h, w) tensor as 8-bit RGB PNG. Values are rounded half away
// from zero and clamped to [0, 255], so save(load(p)) keeps the pixel
// payload byte-identical.
void save_image(const Tensor& image, const std::filesystem::path& path);

// An aligned LR/HR pair; HR dims are exactly 3x the LR dims.
struct ImagePair {
  Tensor lr;  // (1, 3, h, w)
  Tensor hr;  // (1, 3, 3h, 3w)
  std::string id;
};

// DIV2K directory convention:
//   <root>/DIV2K_<split>_HR/NNNN.png
//   <root>/DIV2K_<split>_LR_bicubic/X3/NNNNx3.png
struct DatasetLayout {
  std::filesystem::path root;
  enum class Split { kTrain, kValid } split = Split::kTrain;

  std::filesystem::path hr_dir() const;
  std::filesystem::path lr_dir() const;
};

struct PairPaths {
  std::string id;
  std::filesystem::path hr;
  std::filesystem::path lr;  // empty when no LR track is present
};

// Scans the layout, sorted by stem. Every LR file must have an HR partner;
// HR files without an LR partner are paired with a generated LR at load
// time. Throws IoError listing the stem on a missing member.
std::vector<PairPaths> scan_dataset(const DatasetLayout& layout);

// Loads one pair. A missing LR is synthesized with the anti-aliased bicubic
// downscaler. Images are cropped (top-left) so that HR = 3 x LR holds
// exactly even for datasets whose LR was sized with ceil division.
ImagePair load_pair(const PairPaths& paths);

std::vector<ImagePair> load_pairs(const DatasetLayout& layout,
                                  int max_count = -1);

// Crops both members so the LR dims are divisible by `multiple` (used by
// architectures with an input-side space-to-depth).
ImagePair crop_pair_to_multiple(const ImagePair& pair, int multiple);

// Uniformly samples an aligned patch pair; the HR patch sits at 3x the LR
// offset with 3x the size.
std::pair<Tensor, Tensor> extract_patch(const ImagePair& pair, int lr_size,
                                        Rng& rng);

// Procedural HR image (gradients, hard-edged shapes, sinusoid textures)
// with 8-bit integer values. Stands in for photographic data in smoke runs.
Tensor synthesize_image(int h, int w, Rng& rng);

// Synthetic pair list; LR is the bicubic x3 downscale of each HR image.
std::vector<ImagePair> synthetic_dataset(int count, int hr_h, int hr_w,
                                         std::uint64_t seed);

}  // namespace qsr

#endif  // QSR_DATASET_HPP_
