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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "qsr/dataset.hpp"
#include "qsr/metrics.hpp"
#include "qsr/resample.hpp"

using namespace qsr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qsr_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Tensor integer_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::random_uniform({1, 3, h, w}, 0.0f, 255.0f, rng);
  for (auto& v : t.vec()) v = std::round(v);
  return t;
}

}  // namespace

TEST_CASE("png: random image round-trips bit-identically") {
  TempDir tmp;
  const Tensor img = integer_image(21, 17, 5);
  const fs::path file = tmp.path / "img.png";
  save_image(img, file);
  CHECK(oracle::bit_identical(load_image(file), img));
  // Re-saving the loaded image keeps the payload identical.
  const fs::path file2 = tmp.path / "img2.png";
  save_image(load_image(file), file2);
  CHECK(oracle::bit_identical(load_image(file2), img));
}

TEST_CASE("png: 16-bit input is rejected, grayscale expands to 3 channels") {
  TempDir tmp;
  // Pre-encoded 1x1 16-bit grayscale PNG.
  static const unsigned char png16[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01,
      0x10, 0x00, 0x00, 0x00, 0x00, 0x6a, 0xee, 0x47, 0x16, 0x00, 0x00, 0x00,
      0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x28, 0x35, 0x00, 0x00,
      0x01, 0x1d, 0x00, 0xa6, 0xd5, 0x8e, 0xfa, 0x7f, 0x00, 0x00, 0x00, 0x00,
      0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  const fs::path f16 = tmp.path / "deep.png";
  std::ofstream(f16, std::ios::binary)
      .write(reinterpret_cast<const char*>(png16), sizeof png16);
  CHECK_THROWS_WITH_AS(load_image(f16), doctest::Contains("16-bit"), IoError);

  // Pre-encoded 2x1 8-bit grayscale PNG with pixel values 42 and 200;
  // loading expands it to three identical channels.
  static const unsigned char gray8[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x01,
      0x08, 0x00, 0x00, 0x00, 0x00, 0xd1, 0x49, 0x20, 0x56, 0x00, 0x00, 0x00,
      0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xd0, 0x3a, 0x01, 0x00,
      0x01, 0x1f, 0x00, 0xf3, 0xdc, 0x91, 0x27, 0xd9, 0x00, 0x00, 0x00, 0x00,
      0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  const fs::path fg = tmp.path / "gray.png";
  std::ofstream(fg, std::ios::binary)
      .write(reinterpret_cast<const char*>(gray8), sizeof gray8);
  const Tensor g = load_image(fg);
  CHECK(g.shape() == TensorShape{1, 3, 1, 2});
  for (int x = 0; x < 2; ++x) {
    CHECK(g.at(0, 0, 0, x) == g.at(0, 1, 0, x));
    CHECK(g.at(0, 1, 0, x) == g.at(0, 2, 0, x));
  }
  CHECK(g.at(0, 0, 0, 0) == 42.0f);
  CHECK(g.at(0, 0, 0, 1) == 200.0f);
}

TEST_CASE("bicubic_downscale: constants, dims, and round-trip accuracy") {
  Tensor c = Tensor::full({1, 3, 9, 12}, 77.0f);
  Tensor down = bicubic_downscale(c, 3);
  CHECK(down.shape() == TensorShape{1, 3, 3, 4});
  for (float v : down.vec()) CHECK(v == doctest::Approx(77.0f).epsilon(1e-5));

  CHECK_THROWS_WITH_AS(bicubic_downscale(Tensor(1, 3, 10, 12), 3),
                       doctest::Contains("crop_to_multiple"), ShapeError);

  // Downscale of a nearest-upscaled image recovers it closely. The bound
  // applies to band-limited image content; the anti-aliasing filter rightly
  // attenuates pixel-level noise.
  Tensor x(1, 3, 20, 20);
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < 20; ++y)
      for (int xx = 0; xx < 20; ++xx)
        x.at(0, ch, y, xx) =
            std::round(60.0f + 4.1f * xx + 3.2f * y +
                       25.0f * std::sin(0.4f * xx) * std::cos(0.3f * y));
  const Tensor recovered = bicubic_downscale(nearest_upsample(x, 3), 3);
  double mean_abs = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i)
    mean_abs += std::abs(recovered.vec()[i] - x.vec()[i]);
  mean_abs /= double(x.numel());
  CHECK(mean_abs < 1.0);
}

TEST_CASE("crop_to_multiple: trims the ragged edge") {
  Tensor t(1, 3, 10, 11);
  const Tensor cropped = crop_to_multiple(t, 3);
  CHECK(cropped.shape() == TensorShape{1, 3, 9, 9});
  CHECK_THROWS_AS(crop_to_multiple(Tensor(1, 3, 2, 2), 3), ShapeError);
}

TEST_CASE("dataset scan: DIV2K layout, sorted, LR generated when absent") {
  TempDir tmp;
  const DatasetLayout layout{tmp.path, DatasetLayout::Split::kTrain};
  fs::create_directories(layout.hr_dir());
  fs::create_directories(layout.lr_dir());

  // Two pairs, one HR-only image (LR generated at load), names unsorted.
  save_image(integer_image(18, 24, 1), layout.hr_dir() / "0002.png");
  save_image(integer_image(18, 24, 2), layout.hr_dir() / "0001.png");
  save_image(integer_image(21, 27, 3), layout.hr_dir() / "0003.png");
  save_image(integer_image(6, 8, 4), layout.lr_dir() / "0001x3.png");
  save_image(integer_image(6, 8, 5), layout.lr_dir() / "0002x3.png");

  const std::vector<PairPaths> paths = scan_dataset(layout);
  REQUIRE(paths.size() == 3);
  CHECK(paths[0].id == "0001");
  CHECK(paths[1].id == "0002");
  CHECK(paths[2].id == "0003");
  CHECK(paths[0].lr != fs::path{});
  CHECK(paths[2].lr.empty());

  const ImagePair generated = load_pair(paths[2]);
  CHECK(generated.hr.shape() == TensorShape{1, 3, 21, 27});
  CHECK(generated.lr.shape() == TensorShape{1, 3, 7, 9});

  // LR without an HR partner must raise an error naming the stem.
  save_image(integer_image(6, 8, 6), layout.lr_dir() / "0009x3.png");
  CHECK_THROWS_WITH_AS(scan_dataset(layout), doctest::Contains("0009"),
                       IoError);
}

TEST_CASE("load_pair: ceil-sized LR tracks are cropped into 3x alignment") {
  TempDir tmp;
  const DatasetLayout layout{tmp.path, DatasetLayout::Split::kValid};
  fs::create_directories(layout.hr_dir());
  fs::create_directories(layout.lr_dir());
  // HR 20x22 is not divisible by 3; LR stored as ceil(20/3) x ceil(22/3).
  save_image(integer_image(20, 22, 7), layout.hr_dir() / "0101.png");
  save_image(integer_image(7, 8, 8), layout.lr_dir() / "0101x3.png");
  const ImagePair pair = load_pair(scan_dataset(layout)[0]);
  CHECK(pair.lr.shape() == TensorShape{1, 3, 6, 7});
  CHECK(pair.hr.shape() == TensorShape{1, 3, 18, 21});
}

TEST_CASE("extract_patch: 3x alignment and seeded determinism") {
  std::vector<ImagePair> data = synthetic_dataset(1, 96, 96, 3);
  Rng rng1(7), rng2(7);
  auto [lr1, hr1] = extract_patch(data[0], 32, rng1);
  auto [lr2, hr2] = extract_patch(data[0], 32, rng2);
  CHECK(lr1.shape() == TensorShape{1, 3, 32, 32});
  CHECK(hr1.shape() == TensorShape{1, 3, 96, 96});
  CHECK(oracle::bit_identical(lr1, lr2));
  CHECK(oracle::bit_identical(hr1, hr2));

  // Upscaled LR patch vs HR patch is a finite positive fidelity value.
  const double fidelity = psnr(bicubic_upscale(lr1, 3), hr1);
  CHECK(std::isfinite(fidelity));
  CHECK(fidelity > 0.0);

  Rng rng3(9);
  CHECK_THROWS_WITH_AS(extract_patch(data[0], 64, rng3),
                       doctest::Contains(data[0].id.c_str()), IoError);
}

TEST_CASE("self-consistency: generated LR matches downscaled HR patches") {
  // For pairs produced by this module, downscaling the HR patch lands near
  // the LR patch.
  std::vector<ImagePair> data = synthetic_dataset(2, 90, 90, 17);
  Rng rng(21);
  for (const ImagePair& pair : data) {
    auto [lr, hr] = extract_patch(pair, 24, rng);
    const Tensor down = bicubic_downscale(hr, 3);
    double mean_abs = 0.0;
    for (std::int64_t i = 0; i < lr.numel(); ++i)
      mean_abs += std::abs(down.vec()[i] - lr.vec()[i]);
    mean_abs /= double(lr.numel());
    CHECK(mean_abs < 2.0);
  }
}

TEST_CASE("synthetic dataset: aligned, 8-bit, reproducible") {
  const std::vector<ImagePair> a = synthetic_dataset(2, 48, 60, 5);
  const std::vector<ImagePair> b = synthetic_dataset(2, 48, 60, 5);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].hr.shape().h == 3 * a[i].lr.shape().h);
    CHECK(a[i].hr.shape().w == 3 * a[i].lr.shape().w);
    CHECK(oracle::bit_identical(a[i].hr, b[i].hr));
    for (float v : a[i].hr.vec()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 255.0f);
      CHECK(v == std::round(v));
    }
  }
}
