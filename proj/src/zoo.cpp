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

#include "qsr/zoo.hpp"

#include <algorithm>
#include <cmath>

#include "qsr/rng.hpp"

namespace qsr {

namespace {

// Uniform fan-in (He-style) initialization.
ConvSpec init_conv(Rng& rng, int cin, int cout, int kernel, int groups = 1) {
  ConvSpec spec = make_conv(cin, cout, kernel, groups);
  const double fan_in = double(cin / groups) * kernel * kernel;
  const float bound = static_cast<float>(std::sqrt(6.0 / fan_in));
  for (auto& w : spec.weights.vec()) w = rng.uniform_float(-bound, bound);
  return spec;
}

struct Builder {
  ModelGraph g;
  Rng rng;

  Builder(const std::string& name, std::uint64_t seed) : rng(seed) {
    g.name = name;
    g.scale = 3;
    g.add_node(GraphNode{});  // node 0: input
  }

  int conv(int from, int cin, int cout, int kernel, int groups = 1) {
    GraphNode n;
    n.kind = OpKind::kConv;
    n.inputs = {from};
    n.conv = init_conv(rng, cin, cout, kernel, groups);
    return g.add_node(std::move(n));
  }
  int relu(int from) {
    GraphNode n;
    n.kind = OpKind::kRelu;
    n.inputs = {from};
    return g.add_node(std::move(n));
  }
  int clip(int from, float max_value = 255.0f) {
    GraphNode n;
    n.kind = OpKind::kClippedRelu;
    n.inputs = {from};
    n.clip_max = max_value;
    return g.add_node(std::move(n));
  }
  int d2s(int from, int block) {
    GraphNode n;
    n.kind = OpKind::kDepthToSpace;
    n.inputs = {from};
    n.block = block;
    return g.add_node(std::move(n));
  }
  int s2d(int from, int block) {
    GraphNode n;
    n.kind = OpKind::kSpaceToDepth;
    n.inputs = {from};
    n.block = block;
    return g.add_node(std::move(n));
  }
  int stack(int from, int repeat) {
    GraphNode n;
    n.kind = OpKind::kStackRepeat;
    n.inputs = {from};
    n.repeat = repeat;
    return g.add_node(std::move(n));
  }
  int nearest(int from, int factor) {
    GraphNode n;
    n.kind = OpKind::kNearestUpsample;
    n.inputs = {from};
    n.factor = factor;
    return g.add_node(std::move(n));
  }
  int add2(int a, int b) {
    GraphNode n;
    n.kind = OpKind::kAdd;
    n.inputs = {a, b};
    return g.add_node(std::move(n));
  }
  int mul2(int a, int b) {
    GraphNode n;
    n.kind = OpKind::kMul;
    n.inputs = {a, b};
    return g.add_node(std::move(n));
  }
  int concat(std::vector<int> parts) {
    GraphNode n;
    n.kind = OpKind::kConcat;
    n.inputs = std::move(parts);
    return g.add_node(std::move(n));
  }

  // conv3x3 + ReLU + conv3x3 with an additive skip.
  int residual_block(int from, int width) {
    int c1 = conv(from, width, width, 3);
    int r = relu(c1);
    int c2 = conv(r, width, width, 3);
    return add2(from, c2);
  }

  ModelGraph finish(int output) {
    g.output_node = output;
    g.validate();
    return std::move(g);
  }
};

}  // namespace

ModelGraph build_abpn(int width, std::uint64_t seed) {
  if (width < 1) throw GraphError("abpn: width must be >= 1");
  Builder b("abpn", seed);
  int x = b.relu(b.conv(0, 3, width, 3));
  for (int i = 0; i < 4; ++i) x = b.relu(b.conv(x, width, width, 3));
  int residual = b.conv(x, width, 27, 3);
  int anchor = b.stack(0, 9);
  int sum = b.add2(residual, anchor);
  int clipped = b.clip(sum);
  return b.finish(b.d2s(clipped, 3));
}

ModelGraph build_xlsr(int width, int n_gblocks, std::uint64_t seed) {
  if (width % 4 != 0)
    throw GraphError("xlsr: width " + std::to_string(width) +
                     " not divisible by 4 (grouped convolutions)");
  if (n_gblocks < 1) throw GraphError("xlsr: need at least one Gblock");
  Builder b("xlsr", seed);
  int f0 = b.relu(b.conv(0, 3, width, 3));
  int x = f0;
  for (int i = 0; i < n_gblocks; ++i) {
    int grouped = b.conv(x, width, width, 3, /*groups=*/4);
    int merged = b.conv(grouped, width, width, 1);
    x = b.relu(merged);
  }
  int skip = b.add2(f0, x);
  int tail = b.conv(skip, width, 27, 3);
  int up = b.d2s(tail, 3);
  return b.finish(b.clip(up));
}

ModelGraph build_tinysrnet(int width, std::uint64_t seed) {
  if (width < 1) throw GraphError("tinysrnet: width must be >= 1");
  Builder b("tinysrnet", seed);
  b.g.input_multiple = 2;
  int folded = b.s2d(0, 2);  // (3,h,w) -> (12, h/2, w/2)
  int x = b.relu(b.conv(folded, 12, width, 3));
  for (int i = 0; i < 3; ++i) x = b.residual_block(x, width);
  int trunk = b.d2s(b.conv(x, width, 108, 3), 6);
  int bridge = b.d2s(b.conv(0, 3, 27, 3), 3);
  int sum = b.add2(trunk, bridge);
  return b.finish(b.clip(sum));
}

ModelGraph build_fastsr(int width, std::uint64_t seed) {
  if (width < 1) throw GraphError("fastsr: width must be >= 1");
  Builder b("fastsr", seed);
  int x = b.relu(b.conv(0, 3, width, 3));
  for (int i = 0; i < 3; ++i) x = b.residual_block(x, width);
  int up = b.d2s(b.conv(x, width, 27, 3), 3);
  int anchor = b.nearest(0, 3);
  int sum = b.add2(up, anchor);
  return b.finish(b.clip(sum));
}

ModelGraph build_prpsr(int width, ReparamMode mode, std::uint64_t seed) {
  if (width < 1) throw GraphError("prpsr: width must be >= 1");
  Builder b(mode == ReparamMode::kTrain ? "prpsr_train" : "prpsr", seed);
  int x = b.relu(b.conv(0, 3, width, 5));
  for (int i = 0; i < 5; ++i) {
    if (mode == ReparamMode::kInference) {
      x = b.relu(b.conv(x, width, width, 3));
    } else {
      // y = x + conv1x1(x) + conv3x3(x), then ReLU.
      int c1 = b.conv(x, width, width, 1);
      int c3 = b.conv(x, width, width, 3);
      int s1 = b.add2(x, c1);
      int s2 = b.add2(s1, c3);
      x = b.relu(s2);
    }
  }
  int tail = b.conv(x, width, 27, 3);
  int up = b.d2s(tail, 3);
  return b.finish(b.clip(up));
}

ModelGraph build_edsr_attention(int width, std::uint64_t seed) {
  if (width < 4) throw GraphError("edsr_attn: width must be >= 4");
  Builder b("edsr_attn", seed);
  const int mid = width / 4;
  int f0 = b.conv(0, 3, width, 3);
  int x = f0;
  std::vector<int> gated_blocks;
  for (int i = 0; i < 6; ++i) {
    int block = b.residual_block(x, width);
    // Attention unit: two convs and a clipped-linear gate in [0, 1].
    int a1 = b.relu(b.conv(x, width, mid, 3));
    int a2 = b.conv(a1, mid, width, 3);
    GraphNode& pre = b.g.nodes[a2];
    for (auto& bias : pre.conv.bias) bias = 127.5f;
    int ac = b.clip(a2, 255.0f);
    int gate = b.conv(ac, width, width, 1);
    GraphNode& gn = b.g.nodes[gate];
    // Start as an exact 1/255 diagonal so the gate is the clipped-linear
    // map (x + 127.5 -> [0, 1]) before any training.
    std::fill(gn.conv.weights.vec().begin(), gn.conv.weights.vec().end(), 0.0f);
    for (int c = 0; c < width; ++c)
      gn.conv.weights.at(c, c, 0, 0) = 1.0f / 255.0f;
    x = b.mul2(block, gate);
    gated_blocks.push_back(x);
  }
  int cat = b.concat(gated_blocks);
  int reduced = b.conv(cat, 6 * width, width, 1);
  int skip = b.add2(f0, reduced);
  int t = b.relu(b.conv(skip, width, width, 3));
  t = b.relu(b.conv(t, width, width, 3));
  int tail = b.conv(t, width, 27, 3);
  int up = b.d2s(tail, 3);
  return b.finish(b.clip(up));
}

const std::vector<std::string>& zoo_arch_names() {
  static const std::vector<std::string> names = {
      "abpn",  "xlsr",  "tinysrnet", "fastsr",
      "prpsr", "prpsr_inference", "edsr_attn"};
  return names;
}

ModelGraph build_arch(const std::string& name, std::uint64_t seed) {
  if (name == "abpn") return build_abpn(ZooDefaults::kAbpnWidth, seed);
  if (name == "xlsr")
    return build_xlsr(ZooDefaults::kXlsrWidth, ZooDefaults::kXlsrGblocks, seed);
  if (name == "tinysrnet")
    return build_tinysrnet(ZooDefaults::kTinySrWidth, seed);
  if (name == "fastsr") return build_fastsr(ZooDefaults::kFastSrWidth, seed);
  if (name == "prpsr")
    return build_prpsr(ZooDefaults::kPrpsrWidth, ReparamMode::kTrain, seed);
  if (name == "prpsr_inference")
    return build_prpsr(ZooDefaults::kPrpsrWidth, ReparamMode::kInference, seed);
  if (name == "edsr_attn")
    return build_edsr_attention(ZooDefaults::kEdsrWidth, seed);
  throw ConfigError("unknown architecture '" + name + "'");
}

}  // namespace qsr
