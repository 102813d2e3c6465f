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

#include "coteach/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "coteach/error.hpp"

namespace coteach {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end)
    fail(ErrorKind::usage, "bad value '" + value + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorKind::usage, "bad boolean '" + value + "' for key '" + key + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_value<double>(key, item));
  }
  return out;
}

bool apply_spec(MatcherSpec& spec, const std::string& field, const std::string& key,
                const std::string& value) {
  if (field == "kind") spec.kind = parse_matcher_kind(value);
  else if (field == "embedding_dim") spec.embedding_dim = parse_value<int>(key, value);
  else if (field == "hidden_dim") spec.hidden_dim = parse_value<int>(key, value);
  else return false;
  return true;
}

}  // namespace

RunConfig::RunConfig() {
  pretrain.strategy = Strategy::none;
  pretrain.learning_rate = 1e-2;
  pretrain.epochs = 1;
  pretrain.eval_every = 0;
  coteach.epochs = 3;
  coteach.lambda = 0.5;
  coteach.delta = 0.9;
  coteach.eval_every = 50;
}

TrainConfig RunConfig::effective_coteach() const {
  TrainConfig out = coteach;
  if (!coteach_lr_set) out.learning_rate = default_learning_rate(coteach.strategy);
  return out;
}

std::string RunConfig::effective_run_name() const {
  return run_name.empty() ? std::string(to_string(coteach.strategy)) : run_name;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  auto as_int = [&] { return parse_value<int>(key, value); };
  auto as_double = [&] { return parse_value<double>(key, value); };

  if (key == "seed") {
    const auto seed = parse_value<std::uint64_t>(key, value);
    c.gen.seed = c.pretrain.seed = c.coteach.seed = seed;
  }
  // corpus generation
  else if (key == "vocab_size") c.gen.vocab_size = as_int();
  else if (key == "n_topics") c.gen.n_topics = as_int();
  else if (key == "n_train") c.gen.n_train = as_int();
  else if (key == "n_valid") c.gen.n_valid = as_int();
  else if (key == "n_test_contexts") c.gen.n_test_contexts = as_int();
  else if (key == "n_candidates") c.gen.n_candidates = as_int();
  else if (key == "turns_per_context") c.gen.turns_per_context = as_int();
  else if (key == "tokens_per_utterance") c.gen.tokens_per_utterance = as_int();
  else if (key == "false_negative_rate") c.gen.false_negative_rate = as_double();
  else if (key == "topic_purity") c.gen.topic_purity = as_double();
  else if (key == "test_positive_rate") c.gen.test_positive_rate = as_double();
  // matchers
  else if (key.rfind("spec_a.", 0) == 0) {
    if (!apply_spec(c.spec_a, key.substr(7), key, value))
      fail(ErrorKind::usage, "unknown config key '" + key + "'");
  } else if (key.rfind("spec_b.", 0) == 0) {
    if (!c.spec_b) c.spec_b = c.spec_a;
    if (!apply_spec(*c.spec_b, key.substr(7), key, value))
      fail(ErrorKind::usage, "unknown config key '" + key + "'");
  }
  // pretraining
  else if (key == "pretrain.epochs") c.pretrain.epochs = as_int();
  else if (key == "pretrain.lr") c.pretrain.learning_rate = as_double();
  else if (key == "pretrain.batch_size") c.pretrain.batch_size = as_int();
  // co-teaching
  else if (key == "strategy") c.coteach.strategy = parse_strategy(value);
  else if (key == "lambda") c.coteach.lambda = as_double();
  else if (key == "delta") c.coteach.delta = as_double();
  else if (key == "lr") { c.coteach.learning_rate = as_double(); c.coteach_lr_set = true; }
  else if (key == "batch_size") c.coteach.batch_size = as_int();
  else if (key == "epochs") c.coteach.epochs = as_int();
  else if (key == "eval_every") c.coteach.eval_every = as_int();
  else if (key == "optimizer") {
    c.coteach.optimizer = c.pretrain.optimizer = parse_optimizer(value);
  } else if (key == "adam.beta1") c.coteach.adam_beta1 = c.pretrain.adam_beta1 = as_double();
  else if (key == "adam.beta2") c.coteach.adam_beta2 = c.pretrain.adam_beta2 = as_double();
  else if (key == "adam.eps") c.coteach.adam_eps = c.pretrain.adam_eps = as_double();
  // data limits and paths
  else if (key == "max_turns") c.max_turns = as_int();
  else if (key == "max_tokens") c.max_tokens = as_int();
  else if (key == "corpus_dir") c.corpus_dir = value;
  else if (key == "run_dir") c.run_dir = value;
  else if (key == "run_name") c.run_name = value;
  // reporting
  else if (key == "ema_alpha") c.ema_alpha = as_double();
  else if (key == "sweep.param") {
    if (value != "lambda" && value != "delta")
      fail(ErrorKind::usage, "sweep.param must be lambda or delta");
    c.sweep_param = value;
  } else if (key == "sweep.values") c.sweep_values = parse_list(key, value);
  else if (key == "eval.dump_groups") c.dump_groups = parse_bool(key, value);
  else if (key == "record_wall_time") c.record_wall_time = parse_bool(key, value);
  else fail(ErrorKind::usage, "unknown config key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::usage, origin + ":" + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(config, key, value);
    } catch (const Error& e) {
      fail(e.kind(), origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::usage, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.string());
}

}  // namespace coteach
