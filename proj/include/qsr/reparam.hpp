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

#ifndef QSR_REPARAM_HPP_
#define QSR_REPARAM_HPP_

#include "qsr/conv.hpp"
#include "qsr/graph.hpp"

namespace qsr {

// Training-time three-branch block y = x + conv1x1(x) + conv3x3(x);
// both convs map c channels to c channels, stride 1, no grouping.
struct RepBranchBlock {
  ConvSpec conv1x1;
  ConvSpec conv3x3;

  void validate() const;
};

// Folds the block into one 3x3 convolution:
//   K[o][i] = W3[o][i] + center(W1[o][i]) + center(1[o==i]),
//   bias    = b3 + b1.
// Exact in real arithmetic.
ConvSpec fold_branch(const RepBranchBlock& block);

// Replaces every relu(x + conv1x1(x) + conv3x3(x)) subgraph with a single
// convolution. Structural pattern matching; already-folded graphs come back
// unchanged (the pass is idempotent). Returns the number of folded blocks
// via folded_count when non-null.
ModelGraph fold_model(const ModelGraph& g, int* folded_count = nullptr);

}  // namespace qsr

#endif  // QSR_REPARAM_HPP_
