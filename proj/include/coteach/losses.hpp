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

#include <span>

namespace coteach {

enum class LossKind { cross_entropy, weighted_cross_entropy, hinge_with_margin };

const char* to_string(LossKind kind);

// Scores are clamped to [kProbEps, 1 - kProbEps] before taking logs.
inline constexpr double kProbEps = 1e-7;

// -y log(s) - (1 - y) log(1 - s) on the clamped score.
double cross_entropy(int y, double s);

// d cross_entropy / d logit for s = sigmoid(logit): s - y inside the clamp
// range, 0 where the clamp is active.
double cross_entropy_dlogit(int y, double s);

// max(0, margin - s_pos + s_neg). Throws on a negative margin.
double hinge_with_margin(double s_pos, double s_neg, double margin);

struct WeightedScore {
  double weight = 1.0;
  int y = 0;
  double s = 0.5;
};

// Sum of w_i * cross_entropy(y_i, s_i). Throws on a negative weight.
double weighted_ce_sum(std::span<const WeightedScore> instances);

}  // namespace coteach
