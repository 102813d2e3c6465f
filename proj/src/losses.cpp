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

#include "coteach/losses.hpp"

#include <algorithm>
#include <cmath>

#include "coteach/error.hpp"

namespace coteach {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::weighted_cross_entropy: return "weighted_cross_entropy";
    case LossKind::hinge_with_margin: return "hinge_with_margin";
  }
  return "unknown";
}

double cross_entropy(int y, double s) {
  const double p = std::clamp(s, kProbEps, 1.0 - kProbEps);
  return y == 1 ? -std::log(p) : -std::log1p(-p);
}

double cross_entropy_dlogit(int y, double s) {
  if (s < kProbEps || s > 1.0 - kProbEps) return 0.0;
  return s - static_cast<double>(y);
}

double hinge_with_margin(double s_pos, double s_neg, double margin) {
  require(margin >= 0.0, ErrorKind::usage, "hinge margin must be non-negative");
  return std::max(0.0, margin - s_pos + s_neg);
}

double weighted_ce_sum(std::span<const WeightedScore> instances) {
  double total = 0.0;
  for (const auto& inst : instances) {
    require(inst.weight >= 0.0, ErrorKind::usage, "instance weight must be non-negative");
    total += inst.weight * cross_entropy(inst.y, inst.s);
  }
  return total;
}

}  // namespace coteach
