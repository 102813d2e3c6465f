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

#include "coteach/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coteach/error.hpp"

namespace coteach {

void LearningProtocol::validate() const {
  require(!empty(), ErrorKind::usage, "learning protocol is empty");
  const bool pairwise_kind = loss_kind == LossKind::hinge_with_margin;
  require(pairwise_kind ? pointwise.empty() : pairwise.empty(), ErrorKind::usage,
          std::string("loss kind ") + to_string(loss_kind) +
              " does not match the protocol's instance view");
  for (const auto& p : pairwise)
    require(p.margin >= 0.0, ErrorKind::usage, "protocol margin must be non-negative");
  for (const auto& p : pointwise)
    require(p.weight >= 0.0 && p.weight <= 1.0, ErrorKind::usage,
            "protocol weight must lie in [0, 1]");
}

LearningProtocol margin_protocol(const ModelState& teacher,
                                 std::span<const PairwiseTriple> sub_batch,
                                 double lambda) {
  require(lambda > 0.0, ErrorKind::usage, "lambda must be positive");
  LearningProtocol protocol;
  protocol.loss_kind = LossKind::hinge_with_margin;
  protocol.pairwise.reserve(sub_batch.size());
  for (const auto& t : sub_batch) {
    const double s_pos = score(teacher, t.context, t.pos_response);
    const double s_neg = score(teacher, t.context, t.neg_response);
    const double margin = std::max(0.0, lambda * (s_pos - s_neg));
    PairwiseTriple copy{t.context, t.pos_response, t.neg_response, std::nullopt};
    protocol.pairwise.push_back({std::move(copy), margin});
  }
  return protocol;
}

LearningProtocol weighting_protocol(const ModelState& teacher,
                                    std::span<const PointwiseExample> sub_batch) {
  LearningProtocol protocol;
  protocol.loss_kind = LossKind::weighted_cross_entropy;
  protocol.pointwise.reserve(sub_batch.size());
  for (const auto& ex : sub_batch) {
    const double w = ex.label == 1 ? 1.0 : 1.0 - score(teacher, ex.dialogue);
    protocol.pointwise.push_back({ex, w});
  }
  return protocol;
}

std::size_t curriculum_size(std::size_t n, double delta) {
  const double exact = delta * static_cast<double>(n);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact))
    return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(exact));
}

std::vector<std::size_t> select_small_loss(std::span<const double> losses, double delta) {
  require(delta > 0.0 && delta <= 1.0, ErrorKind::usage, "delta must lie in (0, 1]");
  const std::size_t keep = std::min(curriculum_size(losses.size(), delta), losses.size());
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

LearningProtocol curriculum_protocol(const ModelState& teacher,
                                     std::span<const PointwiseExample> sub_batch,
                                     double delta) {
  require(delta > 0.0 && delta <= 1.0, ErrorKind::usage, "delta must lie in (0, 1]");
  require(!sub_batch.empty(), ErrorKind::usage, "curriculum sub-batch is empty");
  std::vector<double> losses;
  losses.reserve(sub_batch.size());
  for (const auto& ex : sub_batch)
    losses.push_back(cross_entropy(ex.label, score(teacher, ex.dialogue)));
  LearningProtocol protocol;
  protocol.loss_kind = LossKind::cross_entropy;
  for (std::size_t i : select_small_loss(losses, delta))
    protocol.pointwise.push_back({sub_batch[i], 1.0});
  return protocol;
}

LearningProtocol plain_protocol(std::span<const PointwiseExample> sub_batch) {
  LearningProtocol protocol;
  protocol.loss_kind = LossKind::cross_entropy;
  protocol.pointwise.reserve(sub_batch.size());
  for (const auto& ex : sub_batch) protocol.pointwise.push_back({ex, 1.0});
  return protocol;
}

}  // namespace coteach
