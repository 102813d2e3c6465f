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

#include "coteach/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coteach/error.hpp"

namespace coteach {

FilterResult filter_degenerate(std::span<const TestGroup> groups) {
  FilterResult out;
  for (const auto& g : groups) {
    const bool mixed = std::any_of(g.candidates.begin(), g.candidates.end(),
                                   [](const auto& c) { return c.label == 1; }) &&
                       std::any_of(g.candidates.begin(), g.candidates.end(),
                                   [](const auto& c) { return c.label != 1; });
    if (mixed) out.groups.push_back(g);
    else ++out.removed;
  }
  return out;
}

RankedGroup rank_scores(std::span<const double> scores, std::span<const int> labels,
                        std::size_t context_id) {
  require(scores.size() == labels.size(), ErrorKind::usage,
          "scores and labels differ in length");
  require(!scores.empty(), ErrorKind::usage, "cannot rank an empty candidate list");
  RankedGroup group;
  group.context_id = context_id;
  group.entries.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    group.entries.push_back({i, scores[i], labels[i]});
  std::stable_sort(group.entries.begin(), group.entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
  return group;
}

RankedGroup rank_group(const ModelState& model, const Context& context,
                       std::span<const TestCandidate> candidates, std::size_t context_id) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(candidates.size());
  labels.reserve(candidates.size());
  for (const auto& c : candidates) {
    scores.push_back(score(model, context, c.response));
    labels.push_back(c.label);
  }
  return rank_scores(scores, labels, context_id);
}

std::vector<RankedGroup> rank_all(const ModelState& model, std::span<const TestGroup> groups) {
  std::vector<RankedGroup> out;
  out.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i)
    out.push_back(rank_group(model, groups[i].context, groups[i].candidates, i));
  return out;
}

GroupMetrics group_metrics(const RankedGroup& group) {
  const auto& e = group.entries;
  const auto total_pos = static_cast<double>(
      std::count_if(e.begin(), e.end(), [](const RankedEntry& x) { return x.label == 1; }));
  if (total_pos == 0.0)
    fail(ErrorKind::data, "group " + std::to_string(group.context_id) +
                              " has no positive candidate; filter degenerate groups first");
  GroupMetrics m;
  double hits = 0.0;
  double precision_sum = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (e[k].label != 1) continue;
    hits += 1.0;
    const double rank = static_cast<double>(k + 1);
    precision_sum += hits / rank;
    if (m.rr == 0.0) m.rr = 1.0 / rank;
    if (k < 1) m.r10_at_1 += 1.0;
    if (k < 2) m.r10_at_2 += 1.0;
    if (k < 5) m.r10_at_5 += 1.0;
  }
  m.ap = precision_sum / total_pos;
  m.p_at_1 = e.front().label == 1 ? 1.0 : 0.0;
  m.r10_at_1 /= total_pos;
  m.r10_at_2 /= total_pos;
  m.r10_at_5 /= total_pos;
  return m;
}

std::vector<GroupMetrics> per_group_metrics(std::span<const RankedGroup> groups) {
  std::vector<GroupMetrics> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(group_metrics(g));
  return out;
}

MetricsReport mean_metrics(std::span<const GroupMetrics> per_group) {
  MetricsReport r;
  r.n_contexts = per_group.size();
  if (per_group.empty()) return r;
  for (const auto& m : per_group) {
    r.map += m.ap;
    r.mrr += m.rr;
    r.p_at_1 += m.p_at_1;
    r.r10_at_1 += m.r10_at_1;
    r.r10_at_2 += m.r10_at_2;
    r.r10_at_5 += m.r10_at_5;
  }
  const double n = static_cast<double>(per_group.size());
  r.map /= n;
  r.mrr /= n;
  r.p_at_1 /= n;
  r.r10_at_1 /= n;
  r.r10_at_2 /= n;
  r.r10_at_5 /= n;
  return r;
}

MetricsReport compute_metrics(std::span<const RankedGroup> groups) {
  const auto per_group = per_group_metrics(groups);
  return mean_metrics(per_group);
}

double pairwise_p_at_1(const ModelState& model, std::span<const PairwiseTriple> triples) {
  require(!triples.empty(), ErrorKind::data, "validation set is empty");
  std::size_t wins = 0;
  for (const auto& t : triples)
    if (score(model, t.context, t.pos_response) > score(model, t.context, t.neg_response))
      ++wins;
  return static_cast<double>(wins) / static_cast<double>(triples.size());
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::usage, "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  require(df > 0.0, ErrorKind::usage, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::usage, "paired samples differ in length");
  require(a.size() >= 2, ErrorKind::usage, "paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(n - 1);

  TTestResult r;
  r.df = n - 1;
  const bool all_zero = std::all_of(diff.begin(), diff.end(), [](double d) { return d == 0.0; });
  if (all_zero) return r;  // t = 0, p = 1
  if (var == 0.0) {
    r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_tailed(r.t, static_cast<double>(r.df));
  return r;
}

std::vector<double> ema(std::span<const double> series, double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::usage, "EMA alpha must lie in (0, 1]");
  std::vector<double> out;
  out.reserve(series.size());
  for (double x : series)
    out.push_back(out.empty() ? x : alpha * x + (1.0 - alpha) * out.back());
  return out;
}

}  // namespace coteach
