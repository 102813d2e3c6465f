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

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coteach/config.hpp"
#include "coteach/eval.hpp"

namespace coteach {

// generate -> pretrain -> coteach -> evaluate, plus sweep and report. Each
// command reads and writes files under config.corpus_dir / config.run_dir and
// prints a short summary to `out`.

void cmd_generate(const RunConfig& config, std::ostream& out);
void cmd_pretrain(const RunConfig& config, std::ostream& out);
void cmd_coteach(const RunConfig& config, std::ostream& out);
// Evaluates run `config.effective_run_name()`; the name "pretrained" selects
// the pretrained checkpoint.
void cmd_evaluate(const RunConfig& config, std::ostream& out,
                  const std::optional<std::filesystem::path>& baseline_dump = std::nullopt);
void cmd_sweep(const RunConfig& config, std::ostream& out);
void cmd_report(const RunConfig& config, std::ostream& out);

inline constexpr const char* kPretrainedRun = "pretrained";
inline constexpr const char* kMetricsHeader = "run,strategy,MAP,MRR,P@1,R10@1,R10@2,R10@5,n_contexts";

// Corpus from config.corpus_dir with the configured truncation applied.
Corpus load_run_corpus(const RunConfig& config);

// One row in kMetricsHeader layout, metrics to 6 decimals. `stars` marks
// columns (MAP..R10@5, in order) that get a trailing '*'.
std::string format_metrics_row(const std::string& run, const std::string& strategy,
                               const MetricsReport& report,
                               const std::vector<bool>& stars = {});

void write_group_dump(std::span<const GroupMetrics> groups, const std::filesystem::path& path);
std::vector<GroupMetrics> read_group_dump(const std::filesystem::path& path);

struct RunEvaluation {
  std::string run;
  std::string strategy;
  MetricsReport report;
  std::vector<GroupMetrics> per_group;
};

// Picks the model for a run (pretrained checkpoint, or select_model over the
// latest A/B checkpoints) and scores it on the filtered test set.
RunEvaluation evaluate_run(const RunConfig& config, const Corpus& corpus,
                           const std::string& run_name);

// Latest A_<iter>.ckpt / B_<iter>.ckpt iteration in dir, if any.
std::optional<long long> latest_checkpoint_iter(const std::filesystem::path& dir);

}  // namespace coteach
