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

#ifndef QSR_SERIALIZE_HPP_
#define QSR_SERIALIZE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "qsr/graph.hpp"
#include "qsr/qmodel.hpp"

namespace qsr {

// QSRKIT01 container: 8-byte magic, u16 version, u8 model kind, a
// length-prefixed UTF-8 JSON graph description, then per-parameter records
// (name, dtype tag in {f32,i8,i32,none}, 4-dim shape, little-endian payload,
// optional quantization-parameter record). All integers little-endian.
inline constexpr char kModelMagic[8] = {'Q', 'S', 'R', 'K', 'I', 'T', '0', '1'};
inline constexpr std::uint16_t kModelVersion = 1;

enum class ModelKind : std::uint8_t { kFloat = 0, kInt8 = 1 };

void save_model(const ModelGraph& g, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

void save_quantized_model(const QuantizedModel& qm,
                          const std::filesystem::path& path);
// Requantization multipliers are not stored; they are recomputed from the
// quantization parameters on load.
QuantizedModel load_quantized_model(const std::filesystem::path& path);

ModelKind peek_model_kind(const std::filesystem::path& path);

// Structural scan of the fully-quantized rule: an INT8 model file must not
// contain any float parameter payload (scales inside quantization-parameter
// records are the only floats allowed).
struct QuantScan {
  bool fully_quantized = false;
  std::vector<std::string> float_payload_records;
  bool output_identity_pinned = false;  // output grid is scale 1 / zp 0
};
QuantScan scan_quantized_file(const std::filesystem::path& path);

}  // namespace qsr

#endif  // QSR_SERIALIZE_HPP_
