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

#include "qsr/reparam.hpp"

#include <map>
#include <optional>
#include <set>

namespace qsr {

namespace {

bool is_plain_conv(const ConvSpec& c, int kernel) {
  return c.kh == kernel && c.kw == kernel && c.groups == 1 && c.stride == 1 &&
         c.in_channels == c.out_channels && c.pad_h() == (kernel - 1) / 2;
}

struct MatchedBlock {
  int source;   // x
  int conv1x1;  // conv1x1(x)
  int conv3x3;  // conv3x3(x)
  int add_a;    // x + conv1x1(x)
  int add_b;    // (x + conv1x1(x)) + conv3x3(x)
};

}  // namespace

void RepBranchBlock::validate() const {
  conv1x1.validate();
  conv3x3.validate();
  if (!is_plain_conv(conv1x1, 1))
    throw ShapeError("rep block: 1x1 branch must be a plain c->c conv");
  if (!is_plain_conv(conv3x3, 3))
    throw ShapeError("rep block: 3x3 branch must be a plain c->c conv");
  if (conv1x1.in_channels != conv3x3.in_channels)
    throw ShapeError("rep block: branch channel axes disagree (" +
                     std::to_string(conv1x1.in_channels) + " vs " +
                     std::to_string(conv3x3.in_channels) + ")");
}

ConvSpec fold_branch(const RepBranchBlock& block) {
  block.validate();
  const int c = block.conv3x3.in_channels;
  ConvSpec folded = make_conv(c, c, 3);
  folded.weights = block.conv3x3.weights;
  for (int o = 0; o < c; ++o) {
    for (int i = 0; i < c; ++i)
      folded.weights.at(o, i, 1, 1) += block.conv1x1.weights.at(o, i, 0, 0);
    folded.weights.at(o, o, 1, 1) += 1.0f;
    folded.bias[o] = block.conv3x3.bias[o] + block.conv1x1.bias[o];
  }
  return folded;
}

ModelGraph fold_model(const ModelGraph& g, int* folded_count) {
  g.validate();

  // Match relu(add(add(x, conv1x1(x)), conv3x3(x))) with commutative adds.
  // Interior nodes must have no consumers outside the block.
  std::vector<int> consumers(g.nodes.size(), 0);
  for (const GraphNode& n : g.nodes)
    for (int in : n.inputs) ++consumers[in];

  auto conv_of_kernel = [&](int id, int kernel, int source) {
    const GraphNode& n = g.nodes[id];
    return n.kind == OpKind::kConv && n.inputs[0] == source &&
           is_plain_conv(n.conv, kernel);
  };

  auto try_match = [&](int id) -> std::optional<MatchedBlock> {
    const GraphNode& outer = g.nodes[id];
    if (outer.kind != OpKind::kAdd) return std::nullopt;
    for (int flip = 0; flip < 2; ++flip) {
      const int inner_id = outer.inputs[flip];
      const int c3_id = outer.inputs[1 - flip];
      const GraphNode& inner = g.nodes[inner_id];
      if (inner.kind != OpKind::kAdd || consumers[inner_id] != 1) continue;
      for (int flip2 = 0; flip2 < 2; ++flip2) {
        const int x_id = inner.inputs[flip2];
        const int c1_id = inner.inputs[1 - flip2];
        if (!conv_of_kernel(c1_id, 1, x_id) || consumers[c1_id] != 1) continue;
        if (!conv_of_kernel(c3_id, 3, x_id) || consumers[c3_id] != 1) continue;
        return MatchedBlock{x_id, c1_id, c3_id, inner_id, id};
      }
    }
    return std::nullopt;
  };

  std::map<int, MatchedBlock> blocks;  // keyed by the outer add id
  std::set<int> interior;
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id)
    if (std::optional<MatchedBlock> mb = try_match(id)) {
      blocks[id] = *mb;
      interior.insert(mb->add_a);
      interior.insert(mb->conv1x1);
      interior.insert(mb->conv3x3);
    }

  ModelGraph out;
  out.name = g.name == "prpsr_train" && !blocks.empty() ? "prpsr" : g.name;
  out.scale = g.scale;
  out.input_multiple = g.input_multiple;
  std::vector<int> remap(g.nodes.size(), -1);
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    if (interior.count(id)) continue;
    auto it = blocks.find(id);
    if (it != blocks.end()) {
      const MatchedBlock& mb = it->second;
      RepBranchBlock branch{g.nodes[mb.conv1x1].conv, g.nodes[mb.conv3x3].conv};
      GraphNode folded;
      folded.kind = OpKind::kConv;
      folded.inputs = {remap[mb.source]};
      folded.conv = fold_branch(branch);
      remap[id] = out.add_node(std::move(folded));
      continue;
    }
    GraphNode copy = g.nodes[id];
    for (int& in : copy.inputs) in = remap[in];
    remap[id] = out.add_node(std::move(copy));
  }
  out.output_node = remap[g.output_node];
  out.validate();
  if (folded_count) *folded_count = static_cast<int>(blocks.size());
  return out;
}

}  // namespace qsr
