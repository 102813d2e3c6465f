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

#include <cstddef>
#include <span>
#include <vector>

#include "coteach/matcher.hpp"
#include "coteach/protocol.hpp"

namespace coteach {

// Dynamic margins: every triple kept, margin = max(0, lambda * (s_T(c, r+) -
// s_T(c, r-))) from the teacher. Hinge loss.
LearningProtocol margin_protocol(const ModelState& teacher,
                                 std::span<const PairwiseTriple> sub_batch,
                                 double lambda);

// Dynamic instance weighting: positives weigh 1, negatives 1 - s_T(c, r).
// Weighted cross-entropy.
LearningProtocol weighting_protocol(const ModelState& teacher,
                                    std::span<const PointwiseExample> sub_batch);

// Dynamic data curriculum: keeps the ceil(delta * n) examples with the
// smallest teacher cross-entropy, in their original order. Unit weights,
// cross-entropy.
LearningProtocol curriculum_protocol(const ModelState& teacher,
                                     std::span<const PointwiseExample> sub_batch,
                                     double delta);

// No teaching: the sub-batch with unit weights and cross-entropy.
LearningProtocol plain_protocol(std::span<const PointwiseExample> sub_batch);

// ceil(delta * n), computed so that exact products such as 0.5 * 4 do not
// round up.
std::size_t curriculum_size(std::size_t n, double delta);

// Indices of the curriculum_size(losses.size(), delta) smallest losses,
// ties broken by lower index, returned in ascending index order.
std::vector<std::size_t> select_small_loss(std::span<const double> losses, double delta);

}  // namespace coteach
