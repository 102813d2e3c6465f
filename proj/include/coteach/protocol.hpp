// Copyright 2026 The coteach Authors
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

#pragma once

#include <vector>

#include "coteach/corpus.hpp"
#include "coteach/losses.hpp"

namespace coteach {

struct MarginedTriple {
  PairwiseTriple triple;
  double margin = 0.0;
};

struct WeightedExample {
  PointwiseExample example;
  double weight = 1.0;
};

// Training data plus loss that a teacher hands to its peer. Hinge protocols
// carry pairwise instances, cross-entropy protocols carry pointwise ones.
struct LearningProtocol {
  LossKind loss_kind = LossKind::cross_entropy;
  std::vector<MarginedTriple> pairwise;
  std::vector<WeightedExample> pointwise;

  std::size_t size() const { return pairwise.size() + pointwise.size(); }
  bool empty() const { return size() == 0; }

  // Checks the kind/view pairing and the margin and weight ranges.
  void validate() const;
};

}  // namespace coteach
