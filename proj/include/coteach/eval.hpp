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

#include "coteach/corpus.hpp"
#include "coteach/matcher.hpp"

namespace coteach {

struct RankedEntry {
  std::size_t candidate = 0;  // index in the original candidate list
  double score = 0.0;
  int label = 0;
};

// Entries sorted by descending score, ties by ascending candidate index.
struct RankedGroup {
  std::size_t context_id = 0;
  std::vector<RankedEntry> entries;
};

struct GroupMetrics {
  double ap = 0.0;
  double rr = 0.0;
  double p_at_1 = 0.0;
  double r10_at_1 = 0.0;
  double r10_at_2 = 0.0;
  double r10_at_5 = 0.0;
};

struct MetricsReport {
  double map = 0.0;
  double mrr = 0.0;
  double p_at_1 = 0.0;
  double r10_at_1 = 0.0;
  double r10_at_2 = 0.0;
  double r10_at_5 = 0.0;
  std::size_t n_contexts = 0;
};

struct FilterResult {
  std::vector<TestGroup> groups;
  std::size_t removed = 0;
};

// Drops groups whose labels are all equal (all positive or all negative).
FilterResult filter_degenerate(std::span<const TestGroup> groups);

RankedGroup rank_scores(std::span<const double> scores, std::span<const int> labels,
                        std::size_t context_id = 0);
RankedGroup rank_group(const ModelState& model, const Context& context,
                       std::span<const TestCandidate> candidates,
                       std::size_t context_id = 0);
std::vector<RankedGroup> rank_all(const ModelState& model,
                                  std::span<const TestGroup> groups);

// Throws if a group has no positive label.
GroupMetrics group_metrics(const RankedGroup& group);
std::vector<GroupMetrics> per_group_metrics(std::span<const RankedGroup> groups);
MetricsReport mean_metrics(std::span<const GroupMetrics> per_group);
MetricsReport compute_metrics(std::span<const RankedGroup> groups);

// Fraction of triples with s(c, r+) > s(c, r-); a tie counts as a miss.
// This is P@1 of the two-candidate group (neg, pos) under the tie rule above.
double pairwise_p_at_1(const ModelState& model, std::span<const PairwiseTriple> triples);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Two-tailed paired t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Two-tailed tail probability P(|T| >= |t|) of Student's t with df degrees of
// freedom, via the regularised incomplete beta function.
double student_t_two_tailed(double t, double df);

// Regularised incomplete beta I_x(a, b) (continued fraction).
double incomplete_beta(double a, double b, double x);

// out[0] = x[0], out[t] = alpha * x[t] + (1 - alpha) * out[t - 1].
std::vector<double> ema(std::span<const double> series, double alpha);

}  // namespace coteach
