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

#include "qsr/metrics.hpp"

#include <cmath>
#include <limits>

#include "qsr/errors.hpp"

namespace qsr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filtering of a (h, w) plane down to
// (h-10, w-10); used for all five local-moment maps.
std::vector<double> filter_valid(const std::vector<double>& plane,
                                 std::int64_t h, std::int64_t w,
                                 const std::vector<double>& win) {
  const std::int64_t ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += win[k] * plane[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  const std::int64_t oh = h - kWindow + 1;
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += win[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("psnr: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  double sq = 0.0;
  for (std::int64_t i = 0, n = a.numel(); i < n; ++i) {
    const double d = double(a.data()[i]) - b.data()[i];
    sq += d * d;
  }
  const double mse = sq / double(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("ssim: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  const TensorShape& s = a.shape();
  if (s.h < kWindow || s.w < kWindow)
    throw ShapeError("ssim: spatial axes must be >= 11, got " + s.str());

  static const std::vector<double> win = gaussian_window();
  const std::int64_t plane = s.h * s.w;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);

  double total = 0.0;
  std::int64_t channels = 0;
  for (std::int64_t bi = 0; bi < s.b; ++bi)
    for (std::int64_t c = 0; c < s.c; ++c, ++channels) {
      const float* pa = a.chan(bi, c);
      const float* pb = b.chan(bi, c);
      for (std::int64_t i = 0; i < plane; ++i) {
        x[i] = pa[i];
        y[i] = pb[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mu_x = filter_valid(x, s.h, s.w, win);
      const auto mu_y = filter_valid(y, s.h, s.w, win);
      const auto m_xx = filter_valid(xx, s.h, s.w, win);
      const auto m_yy = filter_valid(yy, s.h, s.w, win);
      const auto m_xy = filter_valid(xy, s.h, s.w, win);

      double acc = 0.0;
      for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double var_x = m_xx[i] - mx * mx;
        const double var_y = m_yy[i] - my * my;
        const double cov = m_xy[i] - mx * my;
        acc += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
               ((mx * mx + my * my + kC1) * (var_x + var_y + kC2));
      }
      total += acc / double(mu_x.size());
    }
  return total / double(channels);
}

double challenge_score(double psnr_db, double runtime_ms,
                       const ScoreConstant& c) {
  if (!(runtime_ms > 0.0))
    throw Error("challenge_score: runtime must be positive");
  if (!(c.value > 0.0))
    throw Error("challenge_score: normalization constant must be positive");
  return std::exp2(2.0 * psnr_db - std::log2(c.value) - std::log2(runtime_ms));
}

const std::vector<LeaderboardRow>& mai2021_leaderboard() {
  static const std::vector<LeaderboardRow> rows = {
      {"Aselsan Research", 29.58, 0.86, 44.85, 51.02},
      {"Noah_TerminalVision", 29.41, 0.8537, 38.32, 47.18},
      {"ALONG", 29.52, 0.8607, 62.25, 33.82},
      {"EmbededAI", 28.82, 0.8428, 76.61, 10.41},
      {"mju_gogogo", 28.92, 0.8486, 718.0, 1.28},
      {"221B", 25.44, 0.729, 238.43, 0.03},
      {"svnit_ntnu", 19.30, 0.7061, 78.84, 0.00},
      {"CVML", 19.50, 0.7462, 90.20, 0.00},
      {"TieGuoDun Team", 16.19, 0.6654, 913.96, 0.00},
      {"MCG", 29.87, 0.8686, 36.89, 92.72},
  };
  return rows;
}

ScoreCalibration calibrate_score_constant(
    const std::vector<LeaderboardRow>& rows) {
  double log_sum = 0.0;
  int used = 0;
  for (const LeaderboardRow& r : rows) {
    if (r.final_score <= 0.0 || r.runtime_ms <= 0.0) continue;
    log_sum += 2.0 * r.psnr - std::log2(r.final_score * r.runtime_ms);
    ++used;
  }
  if (used == 0)
    throw Error("calibrate_score_constant: no rows with a positive score");

  ScoreCalibration cal;
  cal.constant.value = std::exp2(log_sum / used);
  for (const LeaderboardRow& r : rows) {
    if (r.final_score <= 0.0 || r.runtime_ms <= 0.0) continue;
    const double predicted =
        challenge_score(r.psnr, r.runtime_ms, cal.constant);
    cal.residuals.push_back(
        {r.team, predicted, r.final_score,
         std::abs(predicted - r.final_score) / r.final_score});
  }
  return cal;
}

ScoreConstant score_constant_from_winner() {
  for (const LeaderboardRow& r : mai2021_leaderboard())
    if (r.team == "Aselsan Research")
      return calibrate_score_constant({r}).constant;
  throw Error("leaderboard is missing the winner row");
}

}  // namespace qsr
