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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coteach/corpus.hpp"
#include "coteach/matcher.hpp"
#include "coteach/protocol.hpp"
#include "coteach/rng.hpp"

namespace coteach {

enum class Strategy { none, margin, weighting, curriculum };
enum class OptimizerKind { adam, sgd };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);
const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& text);

// Learning rates used by co-teaching for each strategy when none is set
// explicitly.
double default_learning_rate(Strategy s);

struct TrainConfig {
  Strategy strategy = Strategy::none;
  std::optional<double> lambda;  // margin
  std::optional<double> delta;   // curriculum
  double learning_rate = 1e-3;
  int batch_size = 50;  // triples per batch
  int epochs = 1;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int eval_every = 50;  // iterations between validation evaluations; 0 = never

  void validate() const;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

OptimizerState make_optimizer_state(const TrainConfig& config, std::size_t n_params);

// Adam with bias correction. Throws ErrorKind::numeric on a non-finite
// gradient entry.
void adam_update(std::span<double> params, std::span<const double> grad,
                 OptimizerState& state, double learning_rate, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

void optimizer_step(ModelState& model, std::span<const double> grad,
                    OptimizerState& state, const TrainConfig& config);

// Random permutation, then the first half / second half. The batch size must
// be even.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_batch(std::span<const T> batch, Rng& rng);

// The protocol a teacher prepares for a student's sub-batch.
LearningProtocol make_protocol(const ModelState& teacher,
                               std::span<const PairwiseTriple> sub_batch,
                               const TrainConfig& config);

enum class UpdateOrder { a_first, b_first };

struct StepLosses {
  double loss_a = 0.0;
  double loss_b = 0.0;
};

// One co-teaching iteration. Both protocols are built from the parameters at
// step entry, so the update order does not affect the result.
// Protocol exchange and dual update on an already split batch.
StepLosses coteach_exchange(ModelState& a, ModelState& b, OptimizerState& opt_a,
                            OptimizerState& opt_b, std::span<const PairwiseTriple> sub_a,
                            std::span<const PairwiseTriple> sub_b, const TrainConfig& config,
                            UpdateOrder order = UpdateOrder::a_first);

StepLosses coteach_step(ModelState& a, ModelState& b, OptimizerState& opt_a,
                        OptimizerState& opt_b, std::span<const PairwiseTriple> batch,
                        const TrainConfig& config, Rng& split_rng,
                        UpdateOrder order = UpdateOrder::a_first);

struct IterationRecord {
  std::int64_t iter = 0;
  double loss_a = 0.0;
  double loss_b = 0.0;
  std::optional<double> valid_p_at_1_a;
  std::optional<double> valid_p_at_1_b;
  double wall_ms = 0.0;
};

struct RunHistory {
  std::vector<IterationRecord> records;

  // Appends; throws unless iter exceeds the previous record's.
  void append(IterationRecord record);
};

void write_history_csv(const RunHistory& history, const std::filesystem::path& path);
RunHistory read_history_csv(const std::filesystem::path& path);

struct CoteachOptions {
  // Checkpoint directory for A_<iter>.ckpt / B_<iter>.ckpt; none = no files.
  std::optional<std::filesystem::path> checkpoint_dir;
  // Fill IterationRecord::wall_ms with elapsed time. Off by default so that
  // history files are reproducible byte for byte.
  bool record_wall_time = false;
  UpdateOrder order = UpdateOrder::a_first;
  // Called once per iteration with the training-set indices of each peer's
  // sub-batch, before the update.
  std::function<void(std::int64_t iter, std::span<const std::size_t> sub_a,
                     std::span<const std::size_t> sub_b)>
      on_split;
};

struct CoteachResult {
  ModelState a;
  ModelState b;
  RunHistory history;
};

CoteachResult coteach_train(const ModelState& init_a, const ModelState& init_b,
                            const Corpus& corpus, const TrainConfig& config,
                            const CoteachOptions& options = {});

// Plain cross-entropy training of one model; returns the epoch-end snapshot
// (or the initial parameters) with the best validation P@1.
ModelState pretrain(const MatcherSpec& spec, const Corpus& corpus, const TrainConfig& config);

enum class Peer { a, b };

// Better validation P@1 wins; ties go to A.
Peer select_peer(const ModelState& a, const ModelState& b,
                 std::span<const PairwiseTriple> valid);
const ModelState& select_model(const ModelState& a, const ModelState& b,
                               std::span<const PairwiseTriple> valid);

void require_even_batch(std::size_t size);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_batch(std::span<const T> batch, Rng& rng) {
  require_even_batch(batch.size());
  std::vector<std::size_t> order(batch.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t half = batch.size() / 2;
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(half);
  out.second.reserve(half);
  for (std::size_t i = 0; i < half; ++i) out.first.push_back(batch[order[i]]);
  for (std::size_t i = half; i < order.size(); ++i) out.second.push_back(batch[order[i]]);
  return out;
}

}  // namespace coteach
