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

#include "qsr/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <memory>

namespace qsr {

namespace {

using nlohmann::json;

enum class DType : std::uint8_t { kF32 = 0, kI8 = 1, kI32 = 2, kNone = 3 };

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : f_(std::fopen(path.string().c_str(), "wb")), path_(path.string()) {
    if (!f_) throw IoError("cannot create model file " + path_);
  }
  void bytes(const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f_.get()) != n)
      throw IoError("short write to " + path_);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v)); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    le(bits);
  }
  void str(const std::string& s) {
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  template <typename T>
  void le(T v) {
    std::uint8_t buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(buf, sizeof(T));
  }
  FilePtr f_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : f_(std::fopen(path.string().c_str(), "rb")), path_(path.string()) {
    if (!f_) throw IoError("cannot open model file " + path_);
  }
  void bytes(void* p, std::size_t n) {
    if (std::fread(p, 1, n, f_.get()) != n)
      throw IoError("truncated model file " + path_);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(le<std::uint32_t>()); }
  float f32() {
    const std::uint32_t bits = le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    std::string s(u16(), '\0');
    bytes(s.data(), s.size());
    return s;
  }

 private:
  template <typename T>
  T le() {
    std::uint8_t buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  FilePtr f_;
  std::string path_;
};

json graph_to_json(const ModelGraph& g) {
  json nodes = json::array();
  for (const GraphNode& n : g.nodes) {
    json jn;
    jn["kind"] = op_kind_name(n.kind);
    jn["inputs"] = n.inputs;
    switch (n.kind) {
      case OpKind::kConv:
        jn["in_ch"] = n.conv.in_channels;
        jn["out_ch"] = n.conv.out_channels;
        jn["kh"] = n.conv.kh;
        jn["kw"] = n.conv.kw;
        jn["stride"] = n.conv.stride;
        jn["pad"] = n.conv.pad;
        jn["groups"] = n.conv.groups;
        break;
      case OpKind::kDepthToSpace:
      case OpKind::kSpaceToDepth:
        jn["block"] = n.block;
        break;
      case OpKind::kStackRepeat:
        jn["n"] = n.repeat;
        break;
      case OpKind::kNearestUpsample:
        jn["factor"] = n.factor;
        break;
      case OpKind::kClippedRelu:
        jn["max"] = n.clip_max;
        break;
      default:
        break;
    }
    nodes.push_back(std::move(jn));
  }
  json j;
  j["name"] = g.name;
  j["scale"] = g.scale;
  j["input_multiple"] = g.input_multiple;
  j["output"] = g.output_node;
  j["nodes"] = std::move(nodes);
  return j;
}

ModelGraph graph_from_json(const json& j) {
  ModelGraph g;
  g.name = j.at("name").get<std::string>();
  g.scale = j.at("scale").get<int>();
  g.input_multiple = j.at("input_multiple").get<int>();
  for (const json& jn : j.at("nodes")) {
    GraphNode n;
    n.kind = op_kind_from_name(jn.at("kind").get<std::string>());
    n.inputs = jn.at("inputs").get<std::vector<int>>();
    switch (n.kind) {
      case OpKind::kConv:
        n.conv = make_conv(jn.at("in_ch").get<int>(), jn.at("out_ch").get<int>(),
                           jn.at("kh").get<int>(), jn.at("groups").get<int>());
        n.conv.stride = jn.at("stride").get<int>();
        n.conv.pad = jn.at("pad").get<int>();
        break;
      case OpKind::kDepthToSpace:
      case OpKind::kSpaceToDepth:
        n.block = jn.at("block").get<int>();
        break;
      case OpKind::kStackRepeat:
        n.repeat = jn.at("n").get<int>();
        break;
      case OpKind::kNearestUpsample:
        n.factor = jn.at("factor").get<int>();
        break;
      case OpKind::kClippedRelu:
        n.clip_max = jn.at("max").get<float>();
        break;
      default:
        break;
    }
    g.add_node(std::move(n));
  }
  g.output_node = j.at("output").get<int>();
  g.validate();
  return g;
}

void write_header(Writer& w, ModelKind kind, const ModelGraph& g) {
  w.bytes(kModelMagic, 8);
  w.u16(kModelVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  const std::string text = graph_to_json(g).dump();
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
}

struct Header {
  ModelKind kind;
  ModelGraph graph;
};

Header read_header(Reader& r, const std::string& path) {
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kModelMagic, 8) != 0)
    throw IoError("not a QSRKIT01 model file: " + path);
  const std::uint16_t version = r.u16();
  if (version != kModelVersion)
    throw IoError("unsupported model version " + std::to_string(version));
  const auto kind = static_cast<ModelKind>(r.u8());
  std::string text(r.u32(), '\0');
  r.bytes(text.data(), text.size());
  return {kind, graph_from_json(json::parse(text))};
}

void write_qp(Writer& w, const QuantParams& qp) {
  w.f32(qp.scale);
  w.i32(qp.zero_point);
  w.u8(static_cast<std::uint8_t>(qp.bits));
  w.u8(qp.is_signed ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(qp.granularity));
  if (qp.per_channel()) {
    w.u32(static_cast<std::uint32_t>(qp.channel_scales.size()));
    for (float s : qp.channel_scales) w.f32(s);
    for (std::size_t i = 0; i < qp.channel_scales.size(); ++i)
      w.i32(0);  // per-channel zero points are symmetric by construction
  }
}

QuantParams read_qp(Reader& r) {
  QuantParams qp;
  qp.scale = r.f32();
  qp.zero_point = r.i32();
  qp.bits = r.u8();
  qp.is_signed = r.u8() != 0;
  qp.granularity = static_cast<QuantParams::Granularity>(r.u8());
  if (qp.per_channel()) {
    const std::uint32_t n = r.u32();
    qp.channel_scales.resize(n);
    for (auto& s : qp.channel_scales) s = r.f32();
    for (std::uint32_t i = 0; i < n; ++i) {
      if (r.i32() != 0)
        throw IoError("per-channel zero points must be 0 (symmetric weights)");
    }
  }
  return qp;
}

struct RecordHead {
  std::string name;
  DType dtype;
  TensorShape shape;
  std::uint64_t payload_bytes;
};

void write_record_head(Writer& w, const std::string& name, DType dt,
                       const TensorShape& shape, std::uint64_t payload) {
  w.str(name);
  w.u8(static_cast<std::uint8_t>(dt));
  w.u32(static_cast<std::uint32_t>(shape.b));
  w.u32(static_cast<std::uint32_t>(shape.c));
  w.u32(static_cast<std::uint32_t>(shape.h));
  w.u32(static_cast<std::uint32_t>(shape.w));
  w.u64(payload);
}

RecordHead read_record_head(Reader& r) {
  RecordHead h;
  h.name = r.str();
  h.dtype = static_cast<DType>(r.u8());
  h.shape.b = r.u32();
  h.shape.c = r.u32();
  h.shape.h = r.u32();
  h.shape.w = r.u32();
  h.payload_bytes = r.u64();
  return h;
}

}  // namespace

void save_model(const ModelGraph& g, const std::filesystem::path& path) {
  g.validate();
  Writer w(path);
  write_header(w, ModelKind::kFloat, g);
  const std::vector<int> conv_ids = g.conv_node_ids();
  w.u32(static_cast<std::uint32_t>(conv_ids.size() * 2));
  for (int id : conv_ids) {
    const ConvSpec& conv = g.nodes[id].conv;
    const std::string base = "n" + std::to_string(id);
    write_record_head(w, base + ".weight", DType::kF32, conv.weights.shape(),
                      conv.weights.numel() * 4);
    for (float v : conv.weights.vec()) w.f32(v);
    w.u8(0);  // no quantization record
    write_record_head(w, base + ".bias", DType::kF32,
                      {static_cast<std::int64_t>(conv.bias.size()), 1, 1, 1},
                      conv.bias.size() * 4);
    for (float v : conv.bias) w.f32(v);
    w.u8(0);
  }
}

ModelGraph load_model(const std::filesystem::path& path) {
  Reader r(path);
  Header h = read_header(r, path.string());
  if (h.kind != ModelKind::kFloat)
    throw IoError("expected a float model file: " + path.string());
  const std::uint32_t n_records = r.u32();
  for (std::uint32_t i = 0; i < n_records; ++i) {
    const RecordHead rec = read_record_head(r);
    const auto dot = rec.name.find('.');
    if (dot == std::string::npos || rec.name[0] != 'n')
      throw IoError("malformed record name '" + rec.name + "'");
    const int id = std::stoi(rec.name.substr(1, dot - 1));
    if (id < 0 || id >= static_cast<int>(h.graph.nodes.size()) ||
        h.graph.nodes[id].kind != OpKind::kConv)
      throw IoError("record '" + rec.name + "' targets a non-conv node");
    ConvSpec& conv = h.graph.nodes[id].conv;
    const std::string field = rec.name.substr(dot + 1);
    if (field == "weight") {
      if (rec.dtype != DType::kF32 || !(rec.shape == conv.weights.shape()))
        throw IoError("record '" + rec.name + "' has unexpected layout");
      for (float& v : conv.weights.vec()) v = r.f32();
    } else if (field == "bias") {
      if (rec.dtype != DType::kF32 ||
          rec.shape.b != static_cast<std::int64_t>(conv.bias.size()))
        throw IoError("record '" + rec.name + "' has unexpected layout");
      for (float& v : conv.bias) v = r.f32();
    } else {
      throw IoError("unknown record field '" + rec.name + "'");
    }
    if (r.u8() != 0)
      throw IoError("unexpected quantization record in float model");
  }
  h.graph.validate();
  return h.graph;
}

void save_quantized_model(const QuantizedModel& qm,
                          const std::filesystem::path& path) {
  qm.graph.validate();
  Writer w(path);
  write_header(w, ModelKind::kInt8, qm.graph);

  const std::vector<int> conv_ids = qm.graph.conv_node_ids();
  w.u32(static_cast<std::uint32_t>(conv_ids.size() * 2 + qm.graph.nodes.size()));
  for (int id : conv_ids) {
    const QuantizedConv& qc = qm.convs.at(id);
    const std::string base = "n" + std::to_string(id);
    const TensorShape w_shape{qc.out_channels, qc.in_channels / qc.groups,
                              qc.kh, qc.kw};
    write_record_head(w, base + ".weight", DType::kI8, w_shape,
                      qc.weights.size());
    w.bytes(qc.weights.data(), qc.weights.size());
    w.u8(1);
    QuantParams wqp;
    wqp.is_signed = true;
    wqp.granularity = QuantParams::Granularity::kPerChannel;
    wqp.channel_scales = qc.weight_scales;
    wqp.scale = qc.weight_scales.empty() ? 1.0f : qc.weight_scales[0];
    write_qp(w, wqp);

    write_record_head(w, base + ".bias", DType::kI32,
                      {qc.out_channels, 1, 1, 1}, qc.bias.size() * 4);
    for (std::int32_t v : qc.bias) w.i32(v);
    w.u8(1);
    QuantParams bqp;
    bqp.is_signed = true;
    bqp.bits = 32;
    bqp.granularity = QuantParams::Granularity::kPerChannel;
    const float s_in = qm.act_qp[qm.graph.nodes[id].inputs[0]].scale;
    bqp.channel_scales.resize(qc.weight_scales.size());
    for (std::size_t c = 0; c < qc.weight_scales.size(); ++c)
      bqp.channel_scales[c] = s_in * qc.weight_scales[c];
    bqp.scale = bqp.channel_scales.empty() ? 1.0f : bqp.channel_scales[0];
    write_qp(w, bqp);
  }
  // One activation-grid record per node (payload-free).
  for (int id = 0; id < static_cast<int>(qm.graph.nodes.size()); ++id) {
    write_record_head(w, "n" + std::to_string(id) + ".act", DType::kNone,
                      {0, 0, 0, 0}, 0);
    w.u8(1);
    write_qp(w, qm.act_qp[id]);
  }
}

QuantizedModel load_quantized_model(const std::filesystem::path& path) {
  Reader r(path);
  Header h = read_header(r, path.string());
  if (h.kind != ModelKind::kInt8)
    throw IoError("expected an INT8 model file: " + path.string());

  QuantizedModel qm;
  qm.graph = std::move(h.graph);
  qm.act_qp.assign(qm.graph.nodes.size(), QuantParams{});
  std::vector<bool> act_seen(qm.graph.nodes.size(), false);

  const std::uint32_t n_records = r.u32();
  for (std::uint32_t i = 0; i < n_records; ++i) {
    const RecordHead rec = read_record_head(r);
    const auto dot = rec.name.find('.');
    if (dot == std::string::npos || rec.name[0] != 'n')
      throw IoError("malformed record name '" + rec.name + "'");
    const int id = std::stoi(rec.name.substr(1, dot - 1));
    if (id < 0 || id >= static_cast<int>(qm.graph.nodes.size()))
      throw IoError("record '" + rec.name + "' targets a missing node");
    const std::string field = rec.name.substr(dot + 1);

    if (field == "act") {
      if (r.u8() != 1)
        throw IoError("activation record without quantization parameters");
      qm.act_qp[id] = read_qp(r);
      act_seen[id] = true;
      continue;
    }
    if (qm.graph.nodes[id].kind != OpKind::kConv)
      throw IoError("record '" + rec.name + "' targets a non-conv node");
    QuantizedConv& qc = qm.convs[id];
    const ConvSpec& conv = qm.graph.nodes[id].conv;
    qc.in_channels = conv.in_channels;
    qc.out_channels = conv.out_channels;
    qc.kh = conv.kh;
    qc.kw = conv.kw;
    qc.pad = conv.pad_h();
    qc.groups = conv.groups;
    if (field == "weight") {
      if (rec.dtype != DType::kI8 || !(rec.shape == conv.weights.shape()))
        throw IoError("record '" + rec.name + "' has unexpected layout");
      qc.weights.resize(rec.payload_bytes);
      r.bytes(qc.weights.data(), qc.weights.size());
      if (r.u8() != 1)
        throw IoError("weight record without quantization parameters");
      qc.weight_scales = read_qp(r).channel_scales;
      if (static_cast<int>(qc.weight_scales.size()) != qc.out_channels)
        throw IoError("weight scales do not cover all output channels");
    } else if (field == "bias") {
      if (rec.dtype != DType::kI32 || rec.shape.b != conv.out_channels)
        throw IoError("record '" + rec.name + "' has unexpected layout");
      qc.bias.resize(qc.out_channels);
      for (auto& v : qc.bias) v = r.i32();
      if (r.u8() != 1)
        throw IoError("bias record without quantization parameters");
      read_qp(r);  // bias scales are implied by s_in * s_weight
    } else {
      throw IoError("unknown record field '" + rec.name + "'");
    }
  }
  for (std::size_t id = 0; id < act_seen.size(); ++id)
    if (!act_seen[id])
      throw IoError("model file missing activation grid for node " +
                    std::to_string(id));

  // Rebuild the requantization multipliers from the stored grids.
  for (auto& [id, qc] : qm.convs) {
    const float s_in = qm.act_qp[qm.graph.nodes[id].inputs[0]].scale;
    const float s_out = qm.act_qp[id].scale;
    qc.requant.resize(qc.out_channels);
    for (int oc = 0; oc < qc.out_channels; ++oc)
      qc.requant[oc] = requant_multiplier(double(s_in) *
                                          qc.weight_scales[oc] / s_out);
  }
  return qm;
}

ModelKind peek_model_kind(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kModelMagic, 8) != 0)
    throw IoError("not a QSRKIT01 model file: " + path.string());
  r.u16();
  return static_cast<ModelKind>(r.u8());
}

QuantScan scan_quantized_file(const std::filesystem::path& path) {
  Reader r(path);
  Header h = read_header(r, path.string());
  if (h.kind != ModelKind::kInt8)
    throw IoError("expected an INT8 model file: " + path.string());

  QuantScan scan;
  QuantParams out_qp;
  const std::uint32_t n_records = r.u32();
  for (std::uint32_t i = 0; i < n_records; ++i) {
    const RecordHead rec = read_record_head(r);
    if (rec.dtype == DType::kF32 && rec.payload_bytes > 0)
      scan.float_payload_records.push_back(rec.name);
    std::vector<char> skip(rec.payload_bytes);
    if (!skip.empty()) r.bytes(skip.data(), skip.size());
    if (r.u8() == 1) {
      const QuantParams qp = read_qp(r);
      if (rec.name == "n" + std::to_string(h.graph.output_node) + ".act")
        out_qp = qp;
    }
  }
  scan.fully_quantized = scan.float_payload_records.empty();
  scan.output_identity_pinned =
      out_qp.scale == 1.0f && out_qp.zero_point == 0 && !out_qp.is_signed;
  return scan;
}

}  // namespace qsr
