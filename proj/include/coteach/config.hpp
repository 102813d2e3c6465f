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
#include <string>
#include <vector>

#include "coteach/corpus.hpp"
#include "coteach/engine.hpp"
#include "coteach/matcher.hpp"

namespace coteach {

// Everything a pipeline command needs. Parsed from `key = value` lines; see
// README.md for the key list.
struct RunConfig {
  GenConfig gen;
  MatcherSpec spec_a;
  std::optional<MatcherSpec> spec_b;  // set = two-network mode

  TrainConfig pretrain;  // strategy is always none
  TrainConfig coteach;
  bool coteach_lr_set = false;  // otherwise default_learning_rate(strategy)

  int max_turns = 10;
  int max_tokens = 50;

  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path run_dir = "run";
  std::string run_name;  // empty = strategy name

  double ema_alpha = 0.1;
  std::string sweep_param = "delta";
  std::vector<double> sweep_values;
  bool dump_groups = true;
  bool record_wall_time = false;

  RunConfig();

  // Co-teaching config with the strategy's default learning rate filled in.
  TrainConfig effective_coteach() const;
  std::string effective_run_name() const;
};

// Applies one setting; throws ErrorKind::usage for unknown keys or bad
// values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace coteach
