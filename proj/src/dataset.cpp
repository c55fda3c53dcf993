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

#include "qsr/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdio>
#include <memory>
#include <map>

#include "qsr/errors.hpp"
#include "qsr/resample.hpp"

namespace qsr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Tensor interleaved_to_tensor(const std::vector<png_byte>& rows,
                             std::int64_t h, std::int64_t w) {
  Tensor t(1, 3, h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const png_byte* px = rows.data() + (y * w + x) * 3;
      t.at(0, 0, y, x) = static_cast<float>(px[0]);
      t.at(0, 1, y, x) = static_cast<float>(px[1]);
      t.at(0, 2, y, x) = static_cast<float>(px[2]);
    }
  return t;
}

Tensor crop(const Tensor& t, std::int64_t h, std::int64_t w) {
  const TensorShape& s = t.shape();
  if (h == s.h && w == s.w) return t;
  Tensor out(s.b, s.c, h, w);
  for (std::int64_t b = 0; b < s.b; ++b)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        std::copy(t.chan(b, c) + y * s.w, t.chan(b, c) + y * s.w + w,
                  out.chan(b, c) + y * w);
  return out;
}

void paint_rect(Tensor& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
                std::int64_t w, const float rgb[3]) {
  const TensorShape& s = img.shape();
  for (int c = 0; c < 3; ++c)
    for (std::int64_t y = std::max<std::int64_t>(0, y0);
         y < std::min(s.h, y0 + h); ++y)
      for (std::int64_t x = std::max<std::int64_t>(0, x0);
           x < std::min(s.w, x0 + w); ++x)
        img.at(0, c, y, x) = rgb[c];
}

void paint_disk(Tensor& img, double cy, double cx, double r,
                const float rgb[3]) {
  const TensorShape& s = img.shape();
  const double r2 = r * r;
  for (int c = 0; c < 3; ++c)
    for (std::int64_t y = std::max<std::int64_t>(0, std::int64_t(cy - r));
         y < std::min(s.h, std::int64_t(cy + r + 1)); ++y)
      for (std::int64_t x = std::max<std::int64_t>(0, std::int64_t(cx - r));
           x < std::min(s.w, std::int64_t(cx + r + 1)); ++x)
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r2)
          img.at(0, c, y, x) = rgb[c];
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open image file " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> row_ptrs;
  std::int64_t h = 0, w = 0;
  bool failed = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth == 16) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw IoError("unsupported 16-bit PNG: " + path.string());
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
      png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    if (png_get_channels(png, info) != 3) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw IoError("unsupported PNG channel layout: " + path.string());
    }
    pixels.resize(static_cast<std::size_t>(h) * w * 3);
    row_ptrs.resize(h);
    for (std::int64_t y = 0; y < h; ++y)
      row_ptrs[y] = pixels.data() + y * w * 3;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (failed) throw IoError("failed to decode PNG " + path.string());
  return interleaved_to_tensor(pixels, h, w);
}

void save_image(const Tensor& image, const std::filesystem::path& path) {
  const TensorShape& s = image.shape();
  if (s.b != 1 || s.c != 3)
    throw ShapeError("save_image: expected shape (1, 3, h, w), got " +
                     s.str());
  std::vector<png_byte> pixels(static_cast<std::size_t>(s.h) * s.w * 3);
  for (std::int64_t y = 0; y < s.h; ++y)
    for (std::int64_t x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = image.at(0, c, y, x);
        const long q = std::lround(std::min(std::max(v, 0.0f), 255.0f));
        pixels[(y * s.w + x) * 3 + c] = static_cast<png_byte>(q);
      }

  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot create image file " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  bool failed = false;
  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(s.w),
                 static_cast<png_uint_32>(s.h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::int64_t y = 0; y < s.h; ++y)
      png_write_row(png, pixels.data() + y * s.w * 3);
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  if (failed) throw IoError("failed to encode PNG " + path.string());
}

std::filesystem::path DatasetLayout::hr_dir() const {
  return root / (split == Split::kTrain ? "DIV2K_train_HR" : "DIV2K_valid_HR");
}

std::filesystem::path DatasetLayout::lr_dir() const {
  return root /
         (split == Split::kTrain ? "DIV2K_train_LR_bicubic"
                                 : "DIV2K_valid_LR_bicubic") /
         "X3";
}

std::vector<PairPaths> scan_dataset(const DatasetLayout& layout) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(layout.hr_dir()))
    throw IoError("dataset HR directory not found: " +
                  layout.hr_dir().string());

  std::map<std::string, PairPaths> by_stem;
  for (const auto& entry : fs::directory_iterator(layout.hr_dir())) {
    if (entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    by_stem[stem].id = stem;
    by_stem[stem].hr = entry.path();
  }

  if (fs::is_directory(layout.lr_dir())) {
    for (const auto& entry : fs::directory_iterator(layout.lr_dir())) {
      if (entry.path().extension() != ".png") continue;
      std::string stem = entry.path().stem().string();
      // LR files carry the x3 suffix: 0001x3.png pairs with 0001.png.
      if (stem.size() > 2 && stem.compare(stem.size() - 2, 2, "x3") == 0)
        stem.resize(stem.size() - 2);
      auto it = by_stem.find(stem);
      if (it == by_stem.end())
        throw IoError("LR image '" + entry.path().filename().string() +
                      "' has no HR partner (stem " + stem + ")");
      it->second.lr = entry.path();
    }
  }

  std::vector<PairPaths> out;
  out.reserve(by_stem.size());
  for (auto& [stem, paths] : by_stem) out.push_back(std::move(paths));
  return out;  // std::map iteration is already sorted by stem
}

ImagePair load_pair(const PairPaths& paths) {
  ImagePair pair;
  pair.id = paths.id;
  pair.hr = load_image(paths.hr);
  if (!paths.lr.empty()) {
    pair.lr = load_image(paths.lr);
  } else {
    pair.lr = bicubic_downscale(crop_to_multiple(pair.hr, 3), 3);
  }
  // Align to HR = 3 x LR exactly (datasets sized with ceil division leave a
  // ragged edge).
  const std::int64_t lh = std::min(pair.lr.shape().h, pair.hr.shape().h / 3);
  const std::int64_t lw = std::min(pair.lr.shape().w, pair.hr.shape().w / 3);
  if (lh < 1 || lw < 1)
    throw IoError("pair " + pair.id + ": degenerate image dimensions");
  pair.lr = crop(pair.lr, lh, lw);
  pair.hr = crop(pair.hr, 3 * lh, 3 * lw);
  return pair;
}

std::vector<ImagePair> load_pairs(const DatasetLayout& layout, int max_count) {
  std::vector<PairPaths> paths = scan_dataset(layout);
  if (max_count >= 0 && static_cast<int>(paths.size()) > max_count)
    paths.resize(max_count);
  std::vector<ImagePair> pairs;
  pairs.reserve(paths.size());
  for (const PairPaths& p : paths) pairs.push_back(load_pair(p));
  return pairs;
}

ImagePair crop_pair_to_multiple(const ImagePair& pair, int multiple) {
  const std::int64_t lh = pair.lr.shape().h - pair.lr.shape().h % multiple;
  const std::int64_t lw = pair.lr.shape().w - pair.lr.shape().w % multiple;
  if (lh < 1 || lw < 1)
    throw IoError("pair " + pair.id + ": too small to crop to multiple of " +
                  std::to_string(multiple));
  ImagePair out;
  out.id = pair.id;
  out.lr = crop(pair.lr, lh, lw);
  out.hr = crop(pair.hr, 3 * lh, 3 * lw);
  return out;
}

std::pair<Tensor, Tensor> extract_patch(const ImagePair& pair, int lr_size,
                                        Rng& rng) {
  const TensorShape& s = pair.lr.shape();
  if (lr_size > s.h || lr_size > s.w)
    throw IoError("extract_patch: patch " + std::to_string(lr_size) +
                  " exceeds LR dims of pair " + pair.id);
  const std::int64_t oy = rng.uniform_int(s.h - lr_size + 1);
  const std::int64_t ox = rng.uniform_int(s.w - lr_size + 1);

  Tensor lr(1, 3, lr_size, lr_size);
  Tensor hr(1, 3, 3 * lr_size, 3 * lr_size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < lr_size; ++y)
      std::copy(pair.lr.chan(0, c) + (oy + y) * s.w + ox,
                pair.lr.chan(0, c) + (oy + y) * s.w + ox + lr_size,
                lr.chan(0, c) + y * std::int64_t(lr_size));
    const std::int64_t hw = pair.hr.shape().w;
    for (int y = 0; y < 3 * lr_size; ++y)
      std::copy(pair.hr.chan(0, c) + (3 * oy + y) * hw + 3 * ox,
                pair.hr.chan(0, c) + (3 * oy + y) * hw + 3 * ox + 3 * lr_size,
                hr.chan(0, c) + y * std::int64_t(3 * lr_size));
  }
  return {std::move(lr), std::move(hr)};
}

Tensor synthesize_image(int h, int w, Rng& rng) {
  Tensor img(1, 3, h, w);
  // Smooth base: a gradient plus a couple of low-frequency sinusoids.
  float base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform_float(60.0f, 200.0f);
    gx[c] = rng.uniform_float(-60.0f, 60.0f);
    gy[c] = rng.uniform_float(-60.0f, 60.0f);
  }
  const int n_waves = 2 + static_cast<int>(rng.uniform_int(3));
  std::vector<std::array<double, 4>> waves(n_waves);  // amp, fy, fx, phase
  for (auto& wv : waves)
    wv = {rng.uniform(6.0, 20.0), rng.uniform(-6.0, 6.0) * 2.0 * M_PI / h,
          rng.uniform(-6.0, 6.0) * 2.0 * M_PI / w, rng.uniform(0.0, 6.283)};
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double tex = 0.0;
      for (const auto& wv : waves)
        tex += wv[0] * std::sin(wv[1] * y + wv[2] * x + wv[3]);
      for (int c = 0; c < 3; ++c)
        img.at(0, c, y, x) = base[c] + gx[c] * (float(x) / w - 0.5f) * 2.0f +
                             gy[c] * (float(y) / h - 0.5f) * 2.0f +
                             static_cast<float>(tex);
    }
  // Hard-edged shapes carrying the high frequencies.
  const int n_shapes = 8 + static_cast<int>(rng.uniform_int(7));
  for (int i = 0; i < n_shapes; ++i) {
    float rgb[3];
    const float lum = rng.uniform_float(10.0f, 245.0f);
    for (int c = 0; c < 3; ++c)
      rgb[c] = std::clamp(lum + rng.uniform_float(-40.0f, 40.0f), 0.0f,
                          255.0f);
    if (rng.coin()) {
      const std::int64_t rh = 2 + rng.uniform_int(h / 3);
      const std::int64_t rw = 2 + rng.uniform_int(w / 3);
      paint_rect(img, rng.uniform_int(h) - rh / 2, rng.uniform_int(w) - rw / 2,
                 rh, rw, rgb);
    } else {
      paint_disk(img, rng.uniform(0.0, double(h)), rng.uniform(0.0, double(w)),
                 rng.uniform(2.0, h / 5.0), rgb);
    }
  }
  // Snap to 8-bit levels like decoded PNG data.
  for (auto& v : img.vec())
    v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 255.0f)));
  return img;
}

std::vector<ImagePair> synthetic_dataset(int count, int hr_h, int hr_w,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    ImagePair pair;
    char buf[16];
    std::snprintf(buf, sizeof buf, "synth%03d", i);
    pair.id = buf;
    pair.hr = synthesize_image(hr_h - hr_h % 3, hr_w - hr_w % 3, rng);
    pair.lr = bicubic_downscale(pair.hr, 3);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace qsr
