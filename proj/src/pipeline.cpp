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

#include "coteach/pipeline.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "coteach/error.hpp"

namespace coteach {
namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

fs::path pretrained_path(const RunConfig& config, bool second) {
  return config.run_dir / (second ? "pretrained_b.ckpt" : "pretrained.ckpt");
}

MatcherSpec with_vocab(MatcherSpec spec, int vocab) {
  spec.vocab_size = vocab;
  return spec;
}

ModelState load_matching(const fs::path& path, const MatcherSpec& expected) {
  ModelState model = load_checkpoint(path);
  if (!(model.spec == expected))
    fail(ErrorKind::data, "config/checkpoint spec mismatch for " + path.string() +
                              ": checkpoint is " + to_string(model.spec.kind) +
                              " d=" + std::to_string(model.spec.embedding_dim) +
                              " vocab=" + std::to_string(model.spec.vocab_size) +
                              ", config wants " + to_string(expected.kind) +
                              " d=" + std::to_string(expected.embedding_dim) +
                              " vocab=" + std::to_string(expected.vocab_size));
  return model;
}

struct Peers {
  ModelState a;
  ModelState b;
};

Peers load_peers(const RunConfig& config, const Corpus& corpus) {
  const MatcherSpec spec_a = with_vocab(config.spec_a, corpus.vocab_size);
  ModelState a = load_matching(pretrained_path(config, false), spec_a);
  if (!config.spec_b) return {a, a};
  const MatcherSpec spec_b = with_vocab(*config.spec_b, corpus.vocab_size);
  return {std::move(a), load_matching(pretrained_path(config, true), spec_b)};
}

CoteachResult run_coteach(const RunConfig& config, const Corpus& corpus,
                          const TrainConfig& train, const fs::path& run_path) {
  const Peers peers = load_peers(config, corpus);
  ensure_dir(run_path);
  CoteachOptions options;
  options.checkpoint_dir = run_path;
  options.record_wall_time = config.record_wall_time;
  CoteachResult result = coteach_train(peers.a, peers.b, corpus, train, options);
  write_history_csv(result.history, run_path / "history.csv");
  return result;
}

void write_metrics_file(const fs::path& path, const std::string& row) {
  auto out = open_out(path);
  out << kMetricsHeader << '\n' << row << '\n';
}

std::string sweep_label(double value) {
  std::string s = shortest(value);
  for (auto& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

}  // namespace

Corpus load_run_corpus(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_dir);
  truncate_corpus(corpus, config.max_turns, config.max_tokens);
  return corpus;
}

std::string format_metrics_row(const std::string& run, const std::string& strategy,
                               const MetricsReport& r, const std::vector<bool>& stars) {
  const std::array<double, 6> values{r.map, r.mrr, r.p_at_1, r.r10_at_1, r.r10_at_2, r.r10_at_5};
  std::string row = run + "," + strategy;
  for (std::size_t i = 0; i < values.size(); ++i) {
    row += "," + fixed6(values[i]);
    if (i < stars.size() && stars[i]) row += "*";
  }
  row += "," + std::to_string(r.n_contexts);
  return row;
}

void write_group_dump(std::span<const GroupMetrics> groups, const fs::path& path) {
  auto out = open_out(path);
  out << "group,AP,RR,P@1,R10@1,R10@2,R10@5\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    out << i << ',' << shortest(g.ap) << ',' << shortest(g.rr) << ',' << shortest(g.p_at_1)
        << ',' << shortest(g.r10_at_1) << ',' << shortest(g.r10_at_2) << ','
        << shortest(g.r10_at_5) << '\n';
  }
}

std::vector<GroupMetrics> read_group_dump(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "missing per-group dump " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<GroupMetrics> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::array<double, 7> v{};
    std::stringstream ss(line);
    std::string field;
    std::size_t n = 0;
    while (std::getline(ss, field, ',')) {
      if (n >= v.size()) break;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[n]);
      if (ec != std::errc() || ptr != field.data() + field.size())
        fail(ErrorKind::data, path.string() + ":" + std::to_string(number) + ": bad number");
      ++n;
    }
    if (n != v.size())
      fail(ErrorKind::data, path.string() + ":" + std::to_string(number) + ": expected 7 fields");
    out.push_back({v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  return out;
}

std::optional<long long> latest_checkpoint_iter(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return std::nullopt;
  static const std::regex pattern(R"(A_(\d+)\.ckpt)");
  std::optional<long long> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const long long iter = std::stoll(m[1].str());
    if (!fs::exists(dir / ("B_" + m[1].str() + ".ckpt"))) continue;
    if (!best || iter > *best) best = iter;
  }
  return best;
}

RunEvaluation evaluate_run(const RunConfig& config, const Corpus& corpus,
                           const std::string& run_name) {
  RunEvaluation ev;
  ev.run = run_name;
  ModelState model;
  if (run_name == kPretrainedRun) {
    ev.strategy = kPretrainedRun;
    model = load_matching(pretrained_path(config, false),
                          with_vocab(config.spec_a, corpus.vocab_size));
  } else {
    ev.strategy = to_string(config.coteach.strategy);
    const fs::path dir = config.run_dir / run_name;
    const auto iter = latest_checkpoint_iter(dir);
    if (!iter) fail(ErrorKind::data, "no A_<iter>/B_<iter> checkpoints in " + dir.string());
    const std::string suffix = std::to_string(*iter) + ".ckpt";
    ModelState a = load_checkpoint(dir / ("A_" + suffix));
    ModelState b = load_checkpoint(dir / ("B_" + suffix));
    if (a.spec.vocab_size != corpus.vocab_size || b.spec.vocab_size != corpus.vocab_size)
      fail(ErrorKind::data, "checkpoint vocabulary does not match corpus");
    model = select_model(a, b, corpus.valid);
  }
  const FilterResult filtered = filter_degenerate(corpus.test);
  const auto ranked = rank_all(model, filtered.groups);
  ev.per_group = per_group_metrics(ranked);
  ev.report = mean_metrics(ev.per_group);
  return ev;
}

void cmd_generate(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = generate_synthetic_corpus(config.gen);
  save_corpus(corpus, config.corpus_dir);
  out << "corpus " << config.corpus_dir.string() << ": train=" << corpus.train.size()
      << " valid=" << corpus.valid.size() << " test=" << corpus.test.size()
      << " vocab=" << corpus.vocab_size << " candidates=" << corpus.n_candidates << '\n';
  out << "noise: configured=" << shortest(config.gen.false_negative_rate)
      << " realized_train=" << fixed6(noise_fraction(corpus.train))
      << " realized_valid=" << fixed6(noise_fraction(corpus.valid)) << '\n';
}

void cmd_pretrain(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = load_run_corpus(config);
  ensure_dir(config.run_dir);
  auto run_one = [&](const MatcherSpec& spec, bool second) {
    const ModelState model = pretrain(with_vocab(spec, corpus.vocab_size), corpus, config.pretrain);
    const fs::path path = pretrained_path(config, second);
    save_checkpoint(model, path);
    out << "pretrained " << to_string(spec.kind) << " -> " << path.string();
    if (!corpus.valid.empty())
      out << " valid_P@1=" << fixed6(pairwise_p_at_1(model, corpus.valid));
    out << '\n';
  };
  run_one(config.spec_a, false);
  if (config.spec_b) run_one(*config.spec_b, true);
}

void cmd_coteach(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = load_run_corpus(config);
  const TrainConfig train = config.effective_coteach();
  const std::string name = config.effective_run_name();
  require(name != kPretrainedRun, ErrorKind::usage,
          "run name 'pretrained' is reserved for the pretrained checkpoint");
  const fs::path run_path = config.run_dir / name;
  const CoteachResult result = run_coteach(config, corpus, train, run_path);
  out << "coteach " << to_string(train.strategy) << " -> " << run_path.string() << ": "
      << result.history.records.size() << " iterations";
  if (!corpus.valid.empty())
    out << ", valid_P@1 A=" << fixed6(pairwise_p_at_1(result.a, corpus.valid))
        << " B=" << fixed6(pairwise_p_at_1(result.b, corpus.valid));
  out << '\n';
}

void cmd_evaluate(const RunConfig& config, std::ostream& out,
                  const std::optional<fs::path>& baseline_dump) {
  const Corpus corpus = load_run_corpus(config);
  const std::string name = config.effective_run_name();
  const RunEvaluation ev = evaluate_run(config, corpus, name);
  const fs::path dir = config.run_dir / name;
  ensure_dir(dir);

  std::vector<bool> stars;
  std::vector<std::string> significance;
  if (baseline_dump) {
    const auto base = read_group_dump(*baseline_dump);
    if (base.size() != ev.per_group.size())
      fail(ErrorKind::data, "baseline dump has " + std::to_string(base.size()) +
                                " groups, evaluation has " + std::to_string(ev.per_group.size()));
    using Field = double GroupMetrics::*;
    const std::array<std::pair<const char*, Field>, 6> fields{{
        {"MAP", &GroupMetrics::ap},
        {"MRR", &GroupMetrics::rr},
        {"P@1", &GroupMetrics::p_at_1},
        {"R10@1", &GroupMetrics::r10_at_1},
        {"R10@2", &GroupMetrics::r10_at_2},
        {"R10@5", &GroupMetrics::r10_at_5},
    }};
    for (const auto& [label, field] : fields) {
      std::vector<double> a, b;
      for (const auto& g : ev.per_group) a.push_back(g.*field);
      for (const auto& g : base) b.push_back(g.*field);
      const TTestResult t = paired_t_test(a, b);
      stars.push_back(t.p < 0.05 && t.t > 0.0);
      significance.push_back(std::string("significance,") + label + ",t=" + fixed6(t.t) +
                             ",p=" + fixed6(t.p));
    }
  }

  const std::string row = format_metrics_row(ev.run, ev.strategy, ev.report, stars);
  write_metrics_file(dir / "metrics.csv", row);
  if (config.dump_groups) write_group_dump(ev.per_group, dir / "per_group.csv");
  out << kMetricsHeader << '\n' << row << '\n';
  for (const auto& line : significance) out << line << '\n';
}

void cmd_sweep(const RunConfig& config, std::ostream& out) {
  const bool lambda = config.sweep_param == "lambda";
  std::vector<double> values = config.sweep_values;
  if (values.empty()) {
    if (lambda) values = {1.0, 1.0 / 2, 1.0 / 3, 1.0 / 5, 1.0 / 10, 1.0 / 15, 1.0 / 20};
    else values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  }
  const Corpus corpus = load_run_corpus(config);

  std::vector<std::string> rows;
  for (double value : values) {
    RunConfig point = config;
    point.coteach.strategy = lambda ? Strategy::margin : Strategy::curriculum;
    if (lambda) point.coteach.lambda = value;
    else point.coteach.delta = value;
    const TrainConfig train = point.effective_coteach();
    train.validate();
    const std::string name = std::string(to_string(train.strategy)) + "_" +
                             config.sweep_param + "_" + sweep_label(value);
    run_coteach(point, corpus, train, config.run_dir / name);
    RunEvaluation ev = evaluate_run(point, corpus, name);
    rows.push_back(format_metrics_row(ev.run, ev.strategy, ev.report));
    write_metrics_file(config.run_dir / name / "metrics.csv", rows.back());
    if (config.dump_groups) write_group_dump(ev.per_group, config.run_dir / name / "per_group.csv");
  }
  ensure_dir(config.run_dir);
  auto file = open_out(config.run_dir / ("sweep_" + config.sweep_param + ".csv"));
  file << kMetricsHeader << '\n';
  out << kMetricsHeader << '\n';
  for (const auto& row : rows) {
    file << row << '\n';
    out << row << '\n';
  }
}

void cmd_report(const RunConfig& config, std::ostream& out) {
  const std::string name = config.effective_run_name();
  const fs::path dir = config.run_dir / name;
  const RunHistory history = read_history_csv(dir / "history.csv");

  std::vector<double> loss_a, loss_b, valid_a, valid_b;
  for (const auto& r : history.records) {
    loss_a.push_back(r.loss_a);
    loss_b.push_back(r.loss_b);
    if (r.valid_p_at_1_a && r.valid_p_at_1_b) {
      valid_a.push_back(*r.valid_p_at_1_a);
      valid_b.push_back(*r.valid_p_at_1_b);
    }
  }
  const auto loss_a_ema = ema(loss_a, config.ema_alpha);
  const auto loss_b_ema = ema(loss_b, config.ema_alpha);
  const auto valid_a_ema = ema(valid_a, config.ema_alpha);
  const auto valid_b_ema = ema(valid_b, config.ema_alpha);

  const fs::path path = dir / "curves.csv";
  auto file = open_out(path);
  file << "iter,loss_A,loss_B,loss_A_ema,loss_B_ema,valid_P@1_A,valid_P@1_B,"
          "valid_P@1_A_ema,valid_P@1_B_ema\n";
  std::size_t k = 0;
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    const auto& r = history.records[i];
    file << r.iter << ',' << shortest(r.loss_a) << ',' << shortest(r.loss_b) << ','
         << shortest(loss_a_ema[i]) << ',' << shortest(loss_b_ema[i]);
    if (r.valid_p_at_1_a && r.valid_p_at_1_b) {
      file << ',' << shortest(*r.valid_p_at_1_a) << ',' << shortest(*r.valid_p_at_1_b) << ','
           << shortest(valid_a_ema[k]) << ',' << shortest(valid_b_ema[k]);
      ++k;
    } else {
      file << ",,,,";
    }
    file << '\n';
  }
  out << "curves " << path.string() << ": " << history.records.size() << " iterations, "
      << valid_a.size() << " validation points, ema_alpha=" << shortest(config.ema_alpha) << '\n';
}

}  // namespace coteach
