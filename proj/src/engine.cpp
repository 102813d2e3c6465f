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

#include "coteach/engine.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "coteach/error.hpp"
#include "coteach/eval.hpp"
#include "coteach/strategies.hpp"

namespace coteach {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::margin: return "margin";
    case Strategy::weighting: return "weighting";
    case Strategy::curriculum: return "curriculum";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "none") return Strategy::none;
  if (text == "margin") return Strategy::margin;
  if (text == "weighting") return Strategy::weighting;
  if (text == "curriculum") return Strategy::curriculum;
  fail(ErrorKind::usage, "unknown strategy '" + text + "'");
}

const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "adam") return OptimizerKind::adam;
  if (text == "sgd") return OptimizerKind::sgd;
  fail(ErrorKind::usage, "unknown optimizer '" + text + "'");
}

double default_learning_rate(Strategy s) {
  return s == Strategy::margin ? 1e-3 : 1e-4;
}

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::usage,
          "learning rate must be a non-negative finite number");
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorKind::usage,
          "batch size must be even and at least 2");
  require(epochs >= 0, ErrorKind::usage, "epochs must be non-negative");
  require(eval_every >= 0, ErrorKind::usage, "eval_every must be non-negative");
  if (strategy == Strategy::margin) {
    require(lambda.has_value(), ErrorKind::usage, "margin strategy needs lambda");
    require(*lambda > 0.0, ErrorKind::usage, "lambda must be positive");
  }
  if (strategy == Strategy::curriculum) {
    require(delta.has_value(), ErrorKind::usage, "curriculum strategy needs delta");
    require(*delta > 0.0 && *delta <= 1.0, ErrorKind::usage, "delta must lie in (0, 1]");
  }
}

OptimizerState make_optimizer_state(const TrainConfig& config, std::size_t n_params) {
  OptimizerState state;
  if (config.optimizer == OptimizerKind::adam) {
    state.m.assign(n_params, 0.0);
    state.v.assign(n_params, 0.0);
  }
  return state;
}

namespace {

void check_finite(std::span<const double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      fail(ErrorKind::numeric, "non-finite gradient at parameter " + std::to_string(i));
}

}  // namespace

void adam_update(std::span<double> params, std::span<const double> grad,
                 OptimizerState& state, double learning_rate, double beta1,
                 double beta2, double eps) {
  require(params.size() == grad.size(), ErrorKind::usage,
          "gradient length does not match parameter count");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorKind::usage, "optimizer moments do not match parameter count");
  check_finite(grad);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void optimizer_step(ModelState& model, std::span<const double> grad,
                    OptimizerState& state, const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::adam) {
    adam_update(model.params, grad, state, config.learning_rate, config.adam_beta1,
                config.adam_beta2, config.adam_eps);
    return;
  }
  require(grad.size() == model.params.size(), ErrorKind::usage,
          "gradient length does not match parameter count");
  check_finite(grad);
  ++state.step;
  for (std::size_t i = 0; i < grad.size(); ++i)
    model.params[i] -= config.learning_rate * grad[i];
}

void require_even_batch(std::size_t size) {
  require(size >= 2 && size % 2 == 0, ErrorKind::usage,
          "batch of " + std::to_string(size) + " cannot be split evenly");
}

LearningProtocol make_protocol(const ModelState& teacher,
                               std::span<const PairwiseTriple> sub_batch,
                               const TrainConfig& config) {
  switch (config.strategy) {
    case Strategy::margin:
      require(config.lambda.has_value(), ErrorKind::usage, "margin strategy needs lambda");
      return margin_protocol(teacher, sub_batch, *config.lambda);
    case Strategy::weighting:
      return weighting_protocol(teacher, to_pointwise(sub_batch));
    case Strategy::curriculum:
      require(config.delta.has_value(), ErrorKind::usage, "curriculum strategy needs delta");
      return curriculum_protocol(teacher, to_pointwise(sub_batch), *config.delta);
    case Strategy::none:
      break;
  }
  return plain_protocol(to_pointwise(sub_batch));
}

StepLosses coteach_exchange(ModelState& a, ModelState& b, OptimizerState& opt_a,
                            OptimizerState& opt_b, std::span<const PairwiseTriple> sub_a,
                            std::span<const PairwiseTriple> sub_b, const TrainConfig& config,
                            UpdateOrder order) {
  require(a.spec.vocab_size == b.spec.vocab_size, ErrorKind::usage,
          "peer models must share a vocabulary");
  // A teaches B on B's sub-batch and vice versa, both from the entry state.
  const LearningProtocol protocol_b = make_protocol(a, sub_b, config);
  const LearningProtocol protocol_a = make_protocol(b, sub_a, config);
  const LossAndGrad lg_a = loss_and_grad(a, protocol_a);
  const LossAndGrad lg_b = loss_and_grad(b, protocol_b);

  if (order == UpdateOrder::a_first) {
    optimizer_step(a, lg_a.grad, opt_a, config);
    optimizer_step(b, lg_b.grad, opt_b, config);
  } else {
    optimizer_step(b, lg_b.grad, opt_b, config);
    optimizer_step(a, lg_a.grad, opt_a, config);
  }
  return {lg_a.loss, lg_b.loss};
}

StepLosses coteach_step(ModelState& a, ModelState& b, OptimizerState& opt_a,
                        OptimizerState& opt_b, std::span<const PairwiseTriple> batch,
                        const TrainConfig& config, Rng& split_rng, UpdateOrder order) {
  auto [sub_a, sub_b] = split_batch(batch, split_rng);
  return coteach_exchange(a, b, opt_a, opt_b, sub_a, sub_b, config, order);
}

void RunHistory::append(IterationRecord record) {
  require(records.empty() || record.iter > records.back().iter, ErrorKind::usage,
          "history iterations must be strictly increasing");
  records.push_back(record);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::optional<double> parse_optional(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(ErrorKind::data, "bad number '" + field + "' in history");
  return v;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

void write_pair(const std::filesystem::path& dir, std::int64_t iter, const ModelState& a,
                const ModelState& b) {
  save_checkpoint(a, dir / ("A_" + std::to_string(iter) + ".ckpt"));
  save_checkpoint(b, dir / ("B_" + std::to_string(iter) + ".ckpt"));
}

}  // namespace

void write_history_csv(const RunHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << "iter,loss_A,loss_B,valid_P@1_A,valid_P@1_B,wall_ms\n";
  for (const auto& r : history.records) {
    out << r.iter << ',' << format_double(r.loss_a) << ',' << format_double(r.loss_b) << ',';
    if (r.valid_p_at_1_a) out << format_double(*r.valid_p_at_1_a);
    out << ',';
    if (r.valid_p_at_1_b) out << format_double(*r.valid_p_at_1_b);
    out << ',' << format_double(r.wall_ms) << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

RunHistory read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "missing history file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("iter,", 0) != 0) fail(ErrorKind::data, path.string() + ": bad header");
  RunHistory history;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6)
      fail(ErrorKind::data, path.string() + ":" + std::to_string(number) +
                                ": expected 6 fields");
    IterationRecord r;
    const auto iter = parse_optional(fields[0]);
    const auto la = parse_optional(fields[1]);
    const auto lb = parse_optional(fields[2]);
    if (!iter || !la || !lb)
      fail(ErrorKind::data, path.string() + ":" + std::to_string(number) +
                                ": missing required field");
    r.iter = static_cast<std::int64_t>(*iter);
    r.loss_a = *la;
    r.loss_b = *lb;
    r.valid_p_at_1_a = parse_optional(fields[3]);
    r.valid_p_at_1_b = parse_optional(fields[4]);
    r.wall_ms = parse_optional(fields[5]).value_or(0.0);
    history.append(r);
  }
  return history;
}

CoteachResult coteach_train(const ModelState& init_a, const ModelState& init_b,
                            const Corpus& corpus, const TrainConfig& config,
                            const CoteachOptions& options) {
  config.validate();
  require(init_a.spec.vocab_size == init_b.spec.vocab_size, ErrorKind::usage,
          "peer models must share a vocabulary");
  const std::size_t n = corpus.train.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  require(n >= batch, ErrorKind::data,
          "training set (" + std::to_string(n) + " triples) is smaller than one batch");
  const std::size_t n_k = n / batch;
  const bool evaluate = config.eval_every > 0 && !corpus.valid.empty();

  if (options.checkpoint_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.checkpoint_dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + options.checkpoint_dir->string());
  }

  CoteachResult result{init_a, init_b, {}};
  OptimizerState opt_a = make_optimizer_state(config, init_a.params.size());
  OptimizerState opt_b = make_optimizer_state(config, init_b.params.size());
  const auto start = std::chrono::steady_clock::now();
  std::int64_t iter = 0;
  std::int64_t last_checkpoint = -1;

  std::vector<std::size_t> positions;
  std::vector<PairwiseTriple> sub_a, sub_b;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(
        n, Rng::for_concern(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    Rng split_rng = Rng::for_concern(config.seed, "split", static_cast<std::uint64_t>(epoch));
    for (std::size_t k = 0; k < n_k; ++k) {
      // Splitting training-set indices draws the same permutation as
      // splitting the triples themselves.
      positions.assign(order.begin() + static_cast<std::ptrdiff_t>(k * batch),
                       order.begin() + static_cast<std::ptrdiff_t>((k + 1) * batch));
      const auto [idx_a, idx_b] = split_batch<std::size_t>(positions, split_rng);
      ++iter;
      if (options.on_split) options.on_split(iter, idx_a, idx_b);
      sub_a.clear();
      sub_b.clear();
      for (std::size_t i : idx_a) sub_a.push_back(corpus.train[i]);
      for (std::size_t i : idx_b) sub_b.push_back(corpus.train[i]);
      const StepLosses losses = coteach_exchange(result.a, result.b, opt_a, opt_b, sub_a,
                                                 sub_b, config, options.order);
      IterationRecord record;
      record.iter = iter;
      record.loss_a = losses.loss_a;
      record.loss_b = losses.loss_b;
      if (config.eval_every > 0 && iter % config.eval_every == 0) {
        if (evaluate) {
          record.valid_p_at_1_a = pairwise_p_at_1(result.a, corpus.valid);
          record.valid_p_at_1_b = pairwise_p_at_1(result.b, corpus.valid);
        }
        if (options.checkpoint_dir) {
          write_pair(*options.checkpoint_dir, iter, result.a, result.b);
          last_checkpoint = iter;
        }
      }
      if (options.record_wall_time)
        record.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
      result.history.append(record);
    }
  }
  if (options.checkpoint_dir && last_checkpoint != iter)
    write_pair(*options.checkpoint_dir, iter, result.a, result.b);
  return result;
}

ModelState pretrain(const MatcherSpec& spec, const Corpus& corpus, const TrainConfig& config) {
  require(config.strategy == Strategy::none, ErrorKind::usage,
          "pretraining uses plain cross-entropy (strategy none)");
  require(!corpus.train.empty(), ErrorKind::data, "training set is empty");
  require(config.learning_rate >= 0.0, ErrorKind::usage, "learning rate must be non-negative");
  require(config.batch_size >= 1, ErrorKind::usage, "batch size must be positive");
  require(config.epochs >= 0, ErrorKind::usage, "epochs must be non-negative");

  ModelState model = init_params(spec, config.seed);
  if (config.epochs == 0) return model;

  const std::size_t n = corpus.train.size();
  const std::size_t batch = std::min(static_cast<std::size_t>(config.batch_size), n);
  const std::size_t n_k = n / batch;
  const bool select = !corpus.valid.empty();
  ModelState best = model;
  double best_p1 = select ? pairwise_p_at_1(model, corpus.valid) : 0.0;
  OptimizerState opt = make_optimizer_state(config, model.params.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(
        n, Rng::for_concern(config.seed, "pretrain-shuffle", static_cast<std::uint64_t>(epoch)));
    std::vector<PairwiseTriple> current;
    for (std::size_t k = 0; k < n_k; ++k) {
      current.clear();
      for (std::size_t i = k * batch; i < (k + 1) * batch; ++i)
        current.push_back(corpus.train[order[i]]);
      const LossAndGrad lg = loss_and_grad(model, plain_protocol(to_pointwise(current)));
      optimizer_step(model, lg.grad, opt, config);
    }
    if (!select) {
      best = model;
      continue;
    }
    const double p1 = pairwise_p_at_1(model, corpus.valid);
    if (p1 > best_p1) {
      best_p1 = p1;
      best = model;
    }
  }
  return best;
}

Peer select_peer(const ModelState& a, const ModelState& b,
                 std::span<const PairwiseTriple> valid) {
  require(!valid.empty(), ErrorKind::data, "validation set is empty");
  return pairwise_p_at_1(b, valid) > pairwise_p_at_1(a, valid) ? Peer::b : Peer::a;
}

const ModelState& select_model(const ModelState& a, const ModelState& b,
                               std::span<const PairwiseTriple> valid) {
  return select_peer(a, b, valid) == Peer::a ? a : b;
}

}  // namespace coteach
