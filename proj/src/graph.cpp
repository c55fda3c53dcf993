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

#include "qsr/graph.hpp"

#include <algorithm>

#include "qsr/quant.hpp"

namespace qsr {

namespace {

struct KindName {
  OpKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {OpKind::kInput, "input"},
    {OpKind::kConv, "conv"},
    {OpKind::kRelu, "relu"},
    {OpKind::kClippedRelu, "clipped_relu"},
    {OpKind::kDepthToSpace, "depth_to_space"},
    {OpKind::kSpaceToDepth, "space_to_depth"},
    {OpKind::kStackRepeat, "stack_repeat"},
    {OpKind::kNearestUpsample, "nearest_upsample"},
    {OpKind::kAdd, "add"},
    {OpKind::kMul, "mul"},
    {OpKind::kConcat, "concat"},
    {OpKind::kFakeQuant, "fake_quant"},
};

int expected_arity(OpKind k) {
  switch (k) {
    case OpKind::kInput: return 0;
    case OpKind::kAdd:
    case OpKind::kMul: return 2;
    case OpKind::kConcat: return -1;  // two or more
    default: return 1;
  }
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  const TensorShape& s0 = parts.front()->shape();
  std::int64_t c_total = 0;
  for (const Tensor* p : parts) {
    const TensorShape& s = p->shape();
    if (s.b != s0.b || s.h != s0.h || s.w != s0.w)
      throw ShapeError("concat: operand shape " + s.str() +
                       " does not match " + s0.str() +
                       " on batch/height/width axes");
    c_total += s.c;
  }
  Tensor out(s0.b, c_total, s0.h, s0.w);
  const std::int64_t plane = s0.h * s0.w;
  for (std::int64_t b = 0; b < s0.b; ++b) {
    std::int64_t c_off = 0;
    for (const Tensor* p : parts) {
      const std::int64_t pc = p->shape().c;
      std::copy(p->chan(b, 0), p->chan(b, 0) + pc * plane,
                out.chan(b, c_off));
      c_off += pc;
    }
  }
  return out;
}

}  // namespace

const char* op_kind_name(OpKind k) {
  for (const auto& kn : kKindNames)
    if (kn.kind == k) return kn.name;
  return "unknown";
}

OpKind op_kind_from_name(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  throw GraphError("unknown op kind '" + name + "'");
}

int ModelGraph::add_node(GraphNode n) {
  const int id = static_cast<int>(nodes.size());
  for (int in : n.inputs)
    if (in < 0 || in >= id)
      throw GraphError("node " + std::to_string(id) +
                       " references node " + std::to_string(in) +
                       " which is not an earlier node (cycle)");
  nodes.push_back(std::move(n));
  return id;
}

void ModelGraph::validate() const {
  if (nodes.empty() || nodes[0].kind != OpKind::kInput)
    throw GraphError("graph '" + name + "': node 0 must be the input");
  if (output_node < 0 || output_node >= static_cast<int>(nodes.size()))
    throw GraphError("graph '" + name + "': missing output node");
  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    const GraphNode& n = nodes[id];
    if (id > 0 && n.kind == OpKind::kInput)
      throw GraphError("graph '" + name + "': multiple input nodes");
    const int arity = expected_arity(n.kind);
    if (arity >= 0 && static_cast<int>(n.inputs.size()) != arity)
      throw GraphError("node " + std::to_string(id) + " (" +
                       op_kind_name(n.kind) + "): expected " +
                       std::to_string(arity) + " inputs, got " +
                       std::to_string(n.inputs.size()));
    if (n.kind == OpKind::kConcat && n.inputs.size() < 2)
      throw GraphError("node " + std::to_string(id) +
                       " (concat): needs at least 2 inputs");
    for (int in : n.inputs)
      if (in < 0 || in >= id)
        throw GraphError("node " + std::to_string(id) +
                         " references node " + std::to_string(in) +
                         " which is not an earlier node (cycle)");
    if (n.kind == OpKind::kConv) n.conv.validate();
  }
}

std::vector<Tensor> ModelGraph::forward_trace(const Tensor& input) const {
  validate();
  if (input_multiple > 1 && (input.shape().h % input_multiple != 0 ||
                             input.shape().w % input_multiple != 0))
    throw ShapeError("graph '" + name + "': input spatial axes " +
                     input.shape().str() + " must be divisible by " +
                     std::to_string(input_multiple));
  std::vector<Tensor> trace(nodes.size());
  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    const GraphNode& n = nodes[id];
    auto in = [&](int slot) -> const Tensor& { return trace[n.inputs[slot]]; };
    try {
      switch (n.kind) {
        case OpKind::kInput:
          trace[id] = input;
          break;
        case OpKind::kConv:
          if (n.fq_weights) {
            ConvSpec sim = n.conv;
            sim.weights = fake_quant_weights(n.conv.weights);
            trace[id] = conv2d(in(0), sim);
          } else {
            trace[id] = conv2d(in(0), n.conv);
          }
          break;
        case OpKind::kRelu:
          trace[id] = relu(in(0));
          break;
        case OpKind::kClippedRelu:
          trace[id] = clipped_relu(in(0), n.clip_max);
          break;
        case OpKind::kDepthToSpace:
          trace[id] = depth_to_space(in(0), n.block);
          break;
        case OpKind::kSpaceToDepth:
          trace[id] = space_to_depth(in(0), n.block);
          break;
        case OpKind::kStackRepeat:
          trace[id] = stack_repeat(in(0), n.repeat);
          break;
        case OpKind::kNearestUpsample:
          trace[id] = nearest_upsample(in(0), n.factor);
          break;
        case OpKind::kAdd:
          trace[id] = add(in(0), in(1));
          break;
        case OpKind::kMul:
          trace[id] = mul(in(0), in(1));
          break;
        case OpKind::kConcat: {
          std::vector<const Tensor*> parts;
          for (int i : n.inputs) parts.push_back(&trace[i]);
          trace[id] = concat_channels(parts);
          break;
        }
        case OpKind::kFakeQuant:
          trace[id] = fake_quant(in(0), n.fq);
          break;
      }
    } catch (const Error& e) {
      throw GraphError("graph '" + name + "', node " + std::to_string(id) +
                       " (" + op_kind_name(n.kind) + "): " + e.what());
    }
  }
  return trace;
}

Tensor ModelGraph::forward(const Tensor& input) const {
  std::vector<Tensor> trace = forward_trace(input);
  return std::move(trace[output_node]);
}

std::int64_t ModelGraph::parameter_count() const {
  std::int64_t n = 0;
  for (const GraphNode& node : nodes)
    if (node.kind == OpKind::kConv)
      n += node.conv.weights.numel() +
           static_cast<std::int64_t>(node.conv.bias.size());
  return n;
}

std::vector<int> ModelGraph::conv_node_ids() const {
  std::vector<int> ids;
  for (int id = 0; id < static_cast<int>(nodes.size()); ++id)
    if (nodes[id].kind == OpKind::kConv) ids.push_back(id);
  return ids;
}

GraphGrads graph_backward(const ModelGraph& g, const Tensor& input,
                          const std::vector<Tensor>& trace,
                          const Tensor& grad_output) {
  if (trace.size() != g.nodes.size())
    throw TrainError("backward: no recorded forward pass for this graph");
  if (!(trace[g.output_node].shape() == grad_output.shape()))
    throw TrainError("backward: output gradient shape " +
                     grad_output.shape().str() + " does not match forward");

  std::vector<Tensor> grad(g.nodes.size());
  auto accumulate = [&](int id, Tensor&& t) {
    if (grad[id].empty()) {
      grad[id] = std::move(t);
    } else {
      Tensor& dst = grad[id];
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst.vec()[i] += t.vec()[i];
    }
  };
  grad[g.output_node] = grad_output;

  GraphGrads out;
  for (int id = static_cast<int>(g.nodes.size()) - 1; id >= 0; --id) {
    if (grad[id].empty()) continue;  // node does not influence the output
    const GraphNode& n = g.nodes[id];
    const Tensor& go = grad[id];
    switch (n.kind) {
      case OpKind::kInput:
        out.input = go;
        break;
      case OpKind::kConv: {
        Tensor gw(n.conv.weights.shape());
        std::vector<float> gb(n.conv.bias.size(), 0.0f);
        conv2d_backward_params(trace[n.inputs[0]], go, n.conv, gw, gb);
        out.weights.emplace(id, std::move(gw));
        out.biases.emplace(id, std::move(gb));
        if (n.fq_weights) {
          // The forward ran on simulated 8-bit weights; the input gradient
          // must flow through the same values. The weight gradient itself is
          // straight-through (per-channel scaling never clamps).
          ConvSpec sim = n.conv;
          sim.weights = fake_quant_weights(n.conv.weights);
          accumulate(n.inputs[0], conv2d_backward_input(go, sim));
        } else {
          accumulate(n.inputs[0], conv2d_backward_input(go, n.conv));
        }
        break;
      }
      case OpKind::kRelu:
        accumulate(n.inputs[0], relu_backward(trace[n.inputs[0]], go));
        break;
      case OpKind::kClippedRelu:
        accumulate(n.inputs[0],
                   clipped_relu_backward(trace[n.inputs[0]], n.clip_max, go));
        break;
      case OpKind::kDepthToSpace:
        accumulate(n.inputs[0], space_to_depth(go, n.block));
        break;
      case OpKind::kSpaceToDepth:
        accumulate(n.inputs[0], depth_to_space(go, n.block));
        break;
      case OpKind::kStackRepeat:
        accumulate(n.inputs[0], stack_repeat_backward(go, n.repeat));
        break;
      case OpKind::kNearestUpsample:
        accumulate(n.inputs[0], nearest_upsample_backward(go, n.factor));
        break;
      case OpKind::kAdd:
        accumulate(n.inputs[0], Tensor(go));
        accumulate(n.inputs[1], Tensor(go));
        break;
      case OpKind::kMul:
        accumulate(n.inputs[0], mul_backward_a(trace[n.inputs[1]], go));
        accumulate(n.inputs[1], mul_backward_b(trace[n.inputs[0]],
                                               trace[n.inputs[1]], go));
        break;
      case OpKind::kConcat: {
        std::int64_t c_off = 0;
        for (int src : n.inputs) {
          const TensorShape& s = trace[src].shape();
          Tensor part(s);
          const std::int64_t plane = s.h * s.w;
          for (std::int64_t b = 0; b < s.b; ++b)
            std::copy(go.chan(b, c_off), go.chan(b, c_off) + s.c * plane,
                      part.chan(b, 0));
          c_off += s.c;
          accumulate(src, std::move(part));
        }
        break;
      }
      case OpKind::kFakeQuant:
        accumulate(n.inputs[0],
                   fake_quant_backward(trace[n.inputs[0]], n.fq, go));
        break;
    }
  }
  if (out.input.empty()) out.input = Tensor(input.shape());
  return out;
}

}  // namespace qsr
