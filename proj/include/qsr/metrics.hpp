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

#ifndef QSR_METRICS_HPP_
#define QSR_METRICS_HPP_

#include <string>
#include <vector>

#include "qsr/tensor.hpp"

namespace qsr {

// 10*log10(peak^2 / MSE) over all channels; +infinity when the images are
// identical. Metrics run on full RGB — no luma conversion, no border crop.
double psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5),
// C1 = (0.01*255)^2, C2 = (0.03*255)^2, valid windows, mean over pixels,
// averaged over channels. Spatial dims must be >= 11.
double ssim(const Tensor& a, const Tensor& b);

// Normalization constant of the challenge score.
struct ScoreConstant {
  double value = 1.0;
};

// 2^(2*psnr) / (C * runtime), evaluated as exp2(2*psnr - log2 C - log2 t)
// because the numerator overflows naive arithmetic long before PSNR 30.
double challenge_score(double psnr_db, double runtime_ms,
                       const ScoreConstant& c);

// One leaderboard entry of the MAI 2021 image super-resolution track.
struct LeaderboardRow {
  std::string team;
  double psnr = 0.0;        // INT8 model, test split
  double ssim = 0.0;
  double runtime_ms = 0.0;  // target-NPU runtime; <= 0 when unavailable
  double final_score = 0.0; // published score; 0 for out-of-ranking rows
};

// Published MAI 2021 x3 super-resolution results (NPU runtimes).
const std::vector<LeaderboardRow>& mai2021_leaderboard();

struct ScoreCalibration {
  ScoreConstant constant;
  struct Residual {
    std::string team;
    double predicted;
    double published;
    double relative_error;  // |predicted - published| / published
  };
  std::vector<Residual> residuals;
};

// Solves C per usable row (positive score and runtime), returns the
// geometric mean and per-row residuals of the pooled constant.
ScoreCalibration calibrate_score_constant(
    const std::vector<LeaderboardRow>& rows);

// Constant solved from the challenge winner's row alone; this is the
// reference constant used by reports.
ScoreConstant score_constant_from_winner();

}  // namespace qsr

#endif  // QSR_METRICS_HPP_
