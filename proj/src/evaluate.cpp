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

#include "qsr/evaluate.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace qsr {

namespace {

constexpr double kPsnrSentinel = 99.0;

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["psnr_db"] = psnr_db;
  j["ssim"] = ssim;
  j["runtime_ms"] = runtime_ms;
  j["delta_psnr_db"] = delta_psnr_db;
  j["delta_ssim"] = delta_ssim;
  j["score"] = score;
  j["model_size_bytes"] = model_size_bytes;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "  PSNR          " << psnr_db << " dB\n"
     << "  SSIM          " << ssim << "\n"
     << "  runtime       " << runtime_ms << " ms (host CPU)\n"
     << "  dPSNR         " << delta_psnr_db << " dB\n"
     << "  dSSIM         " << delta_ssim << "\n"
     << "  score         " << score << "\n"
     << "  model size    " << model_size_bytes << " bytes\n";
  return os.str();
}

EvalReport evaluate(const ForwardFn& forward,
                    const std::vector<ImagePair>& pairs,
                    const EvalOptions& options) {
  if (pairs.empty()) throw Error("evaluate: empty dataset");

  EvalReport report;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const ImagePair& raw : pairs) {
    const ImagePair pair = options.input_multiple > 1
                               ? crop_pair_to_multiple(raw,
                                                       options.input_multiple)
                               : raw;
    const Tensor out = forward(pair.lr);
    psnr_sum += std::min(psnr(out, pair.hr), kPsnrSentinel);
    ssim_sum += ssim(out, pair.hr);
  }
  report.psnr_db = psnr_sum / double(pairs.size());
  report.ssim = ssim_sum / double(pairs.size());

  const BenchResult bench = benchmark_forward(forward, options);
  report.runtime_ms = bench.median_ms;
  report.score = challenge_score(report.psnr_db, report.runtime_ms,
                                 score_constant_from_winner());
  return report;
}

BenchResult benchmark_forward(const ForwardFn& forward,
                              const EvalOptions& options) {
  if (options.runs < 1) throw Error("benchmark: needs at least one run");
  Rng rng(options.bench_seed);
  Tensor input = Tensor::random_uniform(
      {1, 3, options.bench_height, options.bench_width}, 0.0f, 255.0f, rng);
  for (auto& v : input.vec()) v = std::round(v);

  forward(input);  // warm-up
  std::vector<double> times;
  times.reserve(options.runs);
  for (int i = 0; i < options.runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    forward(input);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  BenchResult result;
  result.runs = options.runs;
  result.median_ms = times[times.size() / 2];
  result.p90_ms =
      times[std::min(times.size() - 1, (times.size() * 9) / 10)];
  return result;
}

}  // namespace qsr
