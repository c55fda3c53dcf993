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

#ifndef QSR_GRAPH_HPP_
#define QSR_GRAPH_HPP_

#include <map>
#include <string>
#include <vector>

#include "qsr/conv.hpp"
#include "qsr/quant_params.hpp"
#include "qsr/tensor.hpp"

namespace qsr {

enum class OpKind : std::uint8_t {
  kInput,
  kConv,
  kRelu,
  kClippedRelu,
  kDepthToSpace,
  kSpaceToDepth,
  kStackRepeat,
  kNearestUpsample,
  kAdd,
  kMul,
  kConcat,
  kFakeQuant,
};

const char* op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& name);

struct GraphNode {
  OpKind kind = OpKind::kInput;
  std::vector<int> inputs;

  ConvSpec conv;            // kConv
  int block = 0;            // kDepthToSpace / kSpaceToDepth
  int repeat = 0;           // kStackRepeat
  int factor = 0;           // kNearestUpsample
  float clip_max = 255.0f;  // kClippedRelu
  QuantParams fq;           // kFakeQuant
  bool fq_weights = false;  // kConv: simulate 8-bit weights in the forward
};

// Ordered DAG of layer nodes. Node 0 is the single input; every node may only
// reference earlier nodes, which is checked and keeps the graph acyclic.
struct ModelGraph {
  std::string name;
  int scale = 3;
  // Spatial divisibility the architecture requires on its input (1 for most;
  // 2 for nets with an input-side space-to-depth).
  int input_multiple = 1;
  std::vector<GraphNode> nodes;
  int output_node = -1;

  int add_node(GraphNode n);
  void validate() const;

  Tensor forward(const Tensor& input) const;
  // Forward pass that keeps every node output (needed for backward).
  std::vector<Tensor> forward_trace(const Tensor& input) const;

  std::int64_t parameter_count() const;
  // Node ids of convolutions with trainable parameters, in graph order.
  std::vector<int> conv_node_ids() const;
};

// Parameter and input gradients from one reverse pass.
struct GraphGrads {
  std::map<int, Tensor> weights;             // conv node id -> dL/dW
  std::map<int, std::vector<float>> biases;  // conv node id -> dL/db
  Tensor input;                              // dL/dinput
};

// Reverse-mode sweep over a recorded forward trace. Throws TrainError when
// the trace does not belong to this graph (backward without forward).
GraphGrads graph_backward(const ModelGraph& g, const Tensor& input,
                          const std::vector<Tensor>& trace,
                          const Tensor& grad_output);

}  // namespace qsr

#endif  // QSR_GRAPH_HPP_
