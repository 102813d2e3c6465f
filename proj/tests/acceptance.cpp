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

// Acceptance harness. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coteach/config.hpp"
#include "coteach/engine.hpp"
#include "coteach/eval.hpp"
#include "coteach/losses.hpp"
#include "coteach/pipeline.hpp"
#include "coteach/strategies.hpp"
#include "test_util.hpp"

using namespace coteach;
using namespace coteach::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& details) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, details.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Gradient correctness ------------------------------------------------------

void gradient_check() {
  const auto start = Clock::now();
  Rng rng(2026);
  double worst = 0.0;
  int draws = 0;
  for (MatcherKind kind : {MatcherKind::mean_embedding_bilinear, MatcherKind::interaction_mlp}) {
    for (LossKind loss : {LossKind::cross_entropy, LossKind::weighted_cross_entropy,
                          LossKind::hinge_with_margin}) {
      for (int i = 0; i < 100; ++i, ++draws) {
        const ModelState m = random_model(kind, 20, 4, 4, rng);
        const LearningProtocol p = random_protocol(loss, 20, 8, rng);
        worst = std::max(worst, finite_diff_check(m, p, 1e-5));
      }
    }
  }
  const double secs = seconds_since(start);
  report(1, "gradient correctness", worst < 1e-4 && secs < 30.0,
         fmt("%d draws, max relative error %.3g, %.2f s", draws, worst, secs));
}

// Strategy formulas ----------------------------------------------------------

ModelState scripted_teacher(const std::vector<double>& logits) {
  const int vocab = static_cast<int>(logits.size()) + 1;
  ModelState m = init_params({MatcherKind::mean_embedding_bilinear, vocab, 1, 1}, 1);
  const ParamLayout L = ParamLayout::of(m.spec);
  m.params[L.embedding] = 1.0;
  for (std::size_t i = 0; i < logits.size(); ++i) m.params[L.embedding + i + 1] = logits[i];
  m.params[L.w] = 1.0;
  m.params[L.b] = 0.0;
  return m;
}

double logit(double s) { return std::log(s / (1.0 - s)); }

PairwiseTriple triple_for(Token pos, Token neg) { return {{{0}}, {pos}, {neg}, std::nullopt}; }
PointwiseExample example_for(int label, Token tok) { return {label, {{{0}}, {tok}}}; }

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

void strategy_suite() {
  int examples = 0, ok = 0;
  auto expect = [&](bool cond) { ++examples; ok += cond ? 1 : 0; };

  // Margins from teacher scores 0.9 / 0.1 / 0.2 / 0.7 on tokens 1..4.
  const ModelState mt = scripted_teacher({logit(0.9), logit(0.1), logit(0.2), logit(0.7)});
  const std::vector<PairwiseTriple> triples{triple_for(1, 2), triple_for(3, 4), triple_for(1, 1)};
  const auto mp = margin_protocol(mt, triples, 0.5);
  expect(mp.loss_kind == LossKind::hinge_with_margin && mp.pairwise.size() == 3);
  expect(near(mp.pairwise[0].margin, 0.4));
  expect(mp.pairwise[1].margin == 0.0);
  expect(mp.pairwise[2].margin == 0.0);
  expect(near(margin_protocol(mt, triples, 0.1).pairwise[0].margin, 0.08));

  // Weights: positives 1, negatives 1 - s.
  const ModelState wt = scripted_teacher({logit(0.7), logit(0.2), 30.0});
  const std::vector<PointwiseExample> points{example_for(1, 1), example_for(0, 1),
                                             example_for(0, 2), example_for(0, 3)};
  const auto wp = weighting_protocol(wt, points);
  expect(wp.loss_kind == LossKind::weighted_cross_entropy && wp.pointwise.size() == 4);
  expect(wp.pointwise[0].weight == 1.0);
  expect(near(wp.pointwise[1].weight, 0.3));
  expect(near(wp.pointwise[2].weight, 0.8));
  expect(wp.pointwise[3].weight < 1e-12);

  // Curriculum keeps the smallest teacher losses.
  expect(curriculum_size(4, 0.5) == 2 && curriculum_size(10, 0.9) == 9 &&
         curriculum_size(10, 0.1) == 1 && curriculum_size(7, 0.5) == 4 &&
         curriculum_size(50, 0.9) == 45 && curriculum_size(3, 0.01) == 1);
  const ModelState ct = scripted_teacher({logit(0.8), logit(0.4)});
  const std::vector<PointwiseExample> cb{example_for(1, 1), example_for(0, 1),
                                         example_for(1, 2), example_for(0, 2)};
  const auto cp = curriculum_protocol(ct, cb, 0.5);
  expect(cp.loss_kind == LossKind::cross_entropy && cp.pointwise.size() == 2 &&
         cp.pointwise[0].example == cb[0] && cp.pointwise[1].example == cb[3]);

  // Random sub-batches against a full sort.
  Rng rng(1000);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(100);
    std::vector<double> losses(n);
    for (auto& l : losses) l = rng.bernoulli(0.3) ? static_cast<double>(rng.below(5)) : rng.uniform(0.0, 5.0);
    const double delta = 0.01 + 0.99 * rng.uniform();
    const std::size_t k = static_cast<std::size_t>(std::ceil(delta * static_cast<double>(n) - 1e-9));
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < n; ++i) all.push_back({losses[i], i});
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < k; ++i) want.push_back(all[i].second);
    std::sort(want.begin(), want.end());
    agree += select_small_loss(losses, delta) == want ? 1 : 0;
  }
  report(2, "strategy formulas", ok == examples && agree == 1000,
         fmt("%d/%d unit examples exact, %d/1000 random sub-batches equal the full-sort oracle",
             ok, examples, agree));
}

// Co-teaching loop fidelity --------------------------------------------------

void loop_fidelity() {
  GenConfig g = small_gen(11);
  const Corpus c = generate_synthetic_corpus(g);
  Rng init_rng(5);
  const ModelState a0 = random_model(MatcherKind::mean_embedding_bilinear, c.vocab_size, 8, 1, init_rng);
  const ModelState b0 = random_model(MatcherKind::interaction_mlp, c.vocab_size, 8, 6, init_rng);
  bool split_ok = true, order_ok = true;
  std::int64_t iterations = 0;
  for (Strategy s : {Strategy::margin, Strategy::weighting, Strategy::curriculum}) {
    TrainConfig cfg;
    cfg.strategy = s;
    cfg.lambda = 0.5;
    cfg.delta = 0.9;
    cfg.learning_rate = default_learning_rate(s);
    cfg.batch_size = 20;  // 200 triples, 10 iterations per epoch
    cfg.epochs = 5;
    cfg.eval_every = 10;
    cfg.seed = 9;
    std::int64_t calls = 0;
    auto check_split = [&](std::int64_t iter, std::span<const std::size_t> sa,
                           std::span<const std::size_t> sb) {
      ++calls;
      std::set<std::size_t> seen(sa.begin(), sa.end());
      bool disjoint = seen.size() == sa.size();
      for (std::size_t i : sb) disjoint = disjoint && seen.insert(i).second;
      split_ok = split_ok && disjoint && iter == calls && sa.size() == 10 && sb.size() == 10;
    };
    CoteachOptions fwd, rev;
    fwd.on_split = check_split;
    rev.on_split = check_split;
    rev.order = UpdateOrder::b_first;
    const auto x = coteach_train(a0, b0, c, cfg, fwd);
    iterations = calls;
    calls = 0;
    const auto y = coteach_train(a0, b0, c, cfg, rev);
    split_ok = split_ok && calls == iterations;
    order_ok = order_ok && x.history.records.size() == 50 &&
               bit_identical(x.a.params, y.a.params) && bit_identical(x.b.params, y.b.params) &&
               !(x.a == a0) && !(x.b == b0);
  }
  report(3, "co-teaching loop fidelity", split_ok && order_ok && iterations == 50,
         fmt("%lld iterations per run, disjoint equal halves: %s, order swap bit-identical for "
             "margin/weighting/curriculum: %s",
             static_cast<long long>(iterations), split_ok ? "yes" : "no", order_ok ? "yes" : "no"));
}

// Metrics --------------------------------------------------------------------

GroupMetrics metric_oracle(const std::vector<int>& ranked) {
  GroupMetrics g;
  double total = 0, hits = 0, ap = 0;
  for (int y : ranked) total += y;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    if (ranked[k - 1] != 1) continue;
    hits += 1;
    ap += hits / static_cast<double>(k);
    if (g.rr == 0.0) g.rr = 1.0 / static_cast<double>(k);
  }
  g.ap = ap / total;
  g.p_at_1 = ranked[0];
  auto recall = [&](std::size_t k) {
    double c = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) c += ranked[i];
    return c / total;
  };
  g.r10_at_1 = recall(1);
  g.r10_at_2 = recall(2);
  g.r10_at_5 = recall(5);
  return g;
}

RankedGroup in_rank_order(const std::vector<int>& labels) {
  std::vector<double> scores(labels.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 1.0 - 0.01 * static_cast<double>(i);
  return rank_scores(scores, labels);
}

void metric_oracle_check() {
  Rng rng(4242);
  double worst = 0.0;
  std::vector<RankedGroup> groups;
  GroupMetrics sum;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> s(n);
    std::vector<int> y(n);
    do {
      for (auto& v : y) v = rng.bernoulli(0.3) ? 1 : 0;
    } while (std::count(y.begin(), y.end(), 1) == 0);
    for (auto& v : s) v = rng.uniform();
    groups.push_back(rank_scores(s, y, static_cast<std::size_t>(i)));
    std::vector<std::pair<double, int>> order;
    for (std::size_t k = 0; k < n; ++k) order.push_back({-s[k], y[k]});
    std::sort(order.begin(), order.end());
    std::vector<int> ranked;
    for (const auto& [neg, lab] : order) ranked.push_back(lab);
    const GroupMetrics o = metric_oracle(ranked);
    const GroupMetrics got = group_metrics(groups.back());
    for (double d : {got.ap - o.ap, got.rr - o.rr, got.p_at_1 - o.p_at_1, got.r10_at_1 - o.r10_at_1,
                     got.r10_at_2 - o.r10_at_2, got.r10_at_5 - o.r10_at_5})
      worst = std::max(worst, std::abs(d));
    sum.ap += o.ap;
    sum.rr += o.rr;
    sum.p_at_1 += o.p_at_1;
  }
  const MetricsReport all = compute_metrics(groups);
  worst = std::max({worst, std::abs(all.map - sum.ap / 1000), std::abs(all.mrr - sum.rr / 1000),
                    std::abs(all.p_at_1 - sum.p_at_1 / 1000)});

  const double map = compute_metrics(std::vector{in_rank_order({1, 0, 1, 0, 0, 0, 0, 0, 0, 0})}).map;
  const double mrr = compute_metrics(std::vector{in_rank_order({0, 0, 1, 0, 0, 0, 0, 0, 0, 0})}).mrr;
  const bool examples = std::abs(map - 0.833333) < 5e-7 && std::abs(mrr - 1.0 / 3.0) < 5e-7;
  report(4, "metric oracle", worst <= 1e-12 && examples,
         fmt("max deviation over 1000 random groups %.3g, MAP example %.6f, MRR example %.6f",
             worst, map, mrr));
}

// Noise-robustness experiment ------------------------------------------------

struct SeedOutcome {
  double base_test = 0.0;
  std::map<std::string, double> test;      // selected model, clean test P@1
  std::map<std::string, double> valid_a;   // peer A validation P@1 minus pretrained
  std::map<std::string, double> valid_b;
};

struct Arm {
  std::string name;
  Strategy strategy;
  double delta;
};

std::vector<SeedOutcome> noise_experiment(const std::vector<Arm>& arms, double* secs) {
  const auto start = Clock::now();
  const RunConfig defaults;
  std::vector<SeedOutcome> out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenConfig g = defaults.gen;
    g.vocab_size = 1000;
    g.n_topics = 10;
    g.n_train = 5000;
    g.false_negative_rate = 0.3;
    // Large held-out sets keep evaluation noise well below the effects measured.
    g.n_valid = 5000;
    g.n_test_contexts = 5000;
    g.seed = seed;
    const Corpus c = generate_synthetic_corpus(g);
    const auto test = filter_degenerate(c.test).groups;

    MatcherSpec spec = defaults.spec_a;
    spec.kind = MatcherKind::mean_embedding_bilinear;
    spec.vocab_size = c.vocab_size;
    TrainConfig pc = defaults.pretrain;
    pc.seed = seed;
    const ModelState pre = pretrain(spec, c, pc);

    SeedOutcome o;
    o.base_test = compute_metrics(rank_all(pre, test)).p_at_1;
    const double base_valid = pairwise_p_at_1(pre, c.valid);
    for (const Arm& arm : arms) {
      TrainConfig tc = defaults.coteach;
      tc.strategy = arm.strategy;
      tc.lambda = 0.5;
      tc.delta = arm.delta;
      tc.learning_rate = default_learning_rate(arm.strategy);
      tc.epochs = 3;
      tc.eval_every = 0;
      tc.seed = seed;
      const auto r = coteach_train(pre, pre, c, tc);
      o.test[arm.name] = compute_metrics(rank_all(select_model(r.a, r.b, c.valid), test)).p_at_1;
      o.valid_a[arm.name] = pairwise_p_at_1(r.a, c.valid) - base_valid;
      o.valid_b[arm.name] = pairwise_p_at_1(r.b, c.valid) - base_valid;
    }
    out.push_back(std::move(o));
  }
  *secs = seconds_since(start);
  return out;
}

void noise_robustness() {
  const std::vector<Arm> arms{{"none", Strategy::none, 1.0},
                              {"margin", Strategy::margin, 1.0},
                              {"weighting", Strategy::weighting, 1.0},
                              {"curriculum", Strategy::curriculum, 0.9},
                              {"curriculum_0.5", Strategy::curriculum, 0.5},
                              {"curriculum_0.1", Strategy::curriculum, 0.1}};
  double secs = 0.0;
  const auto runs = noise_experiment(arms, &secs);

  for (std::size_t s = 0; s < runs.size(); ++s) {
    std::printf("  seed %zu: pretrained %.4f", s + 1, runs[s].base_test);
    for (const Arm& arm : arms)
      std::printf(" | %s %+.4f (valid A %+.4f, B %+.4f)", arm.name.c_str(),
                  runs[s].test.at(arm.name) - runs[s].base_test, runs[s].valid_a.at(arm.name),
                  runs[s].valid_b.at(arm.name));
    std::printf("\n");
  }

  auto mean_of = [&](const std::function<double(const SeedOutcome&)>& f) {
    double total = 0;
    for (const auto& r : runs) total += f(r);
    return total / static_cast<double>(runs.size());
  };
  const double base_mean = mean_of([](const SeedOutcome& r) { return r.base_test; });

  bool all_hold = true;
  std::string winner;
  double best_gain = -1.0;
  std::string details;
  for (const char* name : {"margin", "weighting", "curriculum"}) {
    int at_least = 0;
    for (const auto& r : runs) at_least += r.test.at(name) >= r.base_test ? 1 : 0;
    const double gain = mean_of([&](const SeedOutcome& r) { return r.test.at(name); }) - base_mean;
    all_hold = all_hold && at_least >= 4;
    if (gain > best_gain) {
      best_gain = gain;
      winner = name;
    }
    details += fmt("%s %d/5 seeds >= pretrained, mean gain %+.4f; ", name, at_least, gain);
  }
  const double none_gain = mean_of([](const SeedOutcome& r) { return r.test.at("none"); }) - base_mean;
  details += fmt("plain training (reference) %+.4f; pretrained mean %.4f; %.1f s", none_gain,
                 base_mean, secs);
  report(5, "noise robustness", all_hold && best_gain >= 0.02 && secs < 300.0,
         details + fmt("; best gain %+.4f needs >= 0.02", best_gain));

  int both_up = 0;
  for (const auto& r : runs) both_up += r.valid_a.at(winner) > 0 && r.valid_b.at(winner) > 0 ? 1 : 0;
  report(6, "co-evolution of both peers", both_up >= 4,
         fmt("winning strategy %s: peers A and B both above the pretrained validation P@1 in "
             "%d/5 seeds", winner.c_str(), both_up));

  std::vector<double> by_delta;
  for (const char* name : {"curriculum_0.1", "curriculum_0.5", "curriculum"})
    by_delta.push_back(mean_of([&](const SeedOutcome& r) { return r.test.at(name); }));
  report(7, "curriculum sensitivity", by_delta[0] < by_delta[2],
         fmt("mean clean-test P@1 at delta 0.1 / 0.5 / 0.9: %.4f / %.4f / %.4f", by_delta[0],
             by_delta[1], by_delta[2]));
}

// Determinism ----------------------------------------------------------------

void determinism() {
  TempDir r1("accept1"), r2("accept2");
  std::vector<std::string> files{"run/margin/history.csv", "run/margin/metrics.csv",
                                 "run/curriculum/history.csv", "run/curriculum/metrics.csv",
                                 "run/pretrained/metrics.csv"};
  for (const TempDir* root : {&r1, &r2}) {
    RunConfig c = parse_config_text(R"(
n_train = 1000
n_valid = 200
n_test_contexts = 200
epochs = 2
eval_every = 10
)");
    c.corpus_dir = root->path() / "corpus";
    c.run_dir = root->path() / "run";
    std::ostringstream out;
    cmd_generate(c, out);
    cmd_pretrain(c, out);
    c.run_name = kPretrainedRun;
    cmd_evaluate(c, out);
    c.run_name.clear();
    for (const char* s : {"margin", "curriculum"}) {
      apply_setting(c, "strategy", s);
      cmd_coteach(c, out);
      cmd_evaluate(c, out);
    }
  }
  int same = 0;
  for (const auto& f : files) {
    const std::string x = read_file(r1.path() / f);
    same += !x.empty() && x == read_file(r2.path() / f) ? 1 : 0;
  }
  report(8, "determinism", same == static_cast<int>(files.size()),
         fmt("%d/%zu history and metrics files byte-identical across two runs", same, files.size()));
}

}  // namespace

int main() {
  const std::vector<std::pair<int, void (*)()>> criteria{
      {1, gradient_check}, {2, strategy_suite}, {3, loop_fidelity},
      {4, metric_oracle_check}, {5, noise_robustness}, {8, determinism}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, "exception", false, e.what());
    }
  }
  std::printf("%s: %d criterion line(s) failed\n", failures == 0 ? "ACCEPTED" : "NOT ACCEPTED",
              failures);
  return failures == 0 ? 0 : 1;
}
