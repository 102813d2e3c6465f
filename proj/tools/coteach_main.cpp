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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coteach/coteach.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitOther = 3;

int exit_code(ct_status status) {
  switch (status) {
    case CT_OK: return 0;
    case CT_ERR_USAGE: return kExitUsage;
    case CT_ERR_DATA:
    case CT_ERR_IO: return kExitData;
    default: return kExitOther;
  }
}

void write_stdout(const char* text, size_t len, void*) {
  std::fwrite(text, 1, len, stdout);
  std::fflush(stdout);
}

struct ConfigDeleter {
  void operator()(ct_config* c) const { ct_config_free(c); }
};
using ConfigPtr = std::unique_ptr<ct_config, ConfigDeleter>;

struct Options {
  std::string config_path;
  std::string run_dir;
  std::string strategy;
  std::string baseline_dump;
  std::vector<std::string> settings;
  long long seed = 0;
  bool seed_set = false;
};

int report(ct_status status) {
  if (status != CT_OK)
    std::cerr << "coteach: " << ct_status_name(status) << ": " << ct_last_error() << '\n';
  return exit_code(status);
}

ct_status build_config(const Options& opt, ct_config** out) {
  ct_status st = opt.config_path.empty() ? ct_config_new(out)
                                         : ct_config_load(opt.config_path.c_str(), out);
  if (st != CT_OK) return st;
  auto set = [&](const std::string& key, const std::string& value) {
    return ct_config_set(*out, key.c_str(), value.c_str());
  };
  for (const auto& kv : opt.settings) {
    const auto eq = kv.find('=');
    if ((st = set(kv.substr(0, eq), kv.substr(eq + 1))) != CT_OK) return st;
  }
  if (!opt.run_dir.empty() && (st = set("run_dir", opt.run_dir)) != CT_OK) return st;
  if (opt.seed_set && (st = set("seed", std::to_string(opt.seed))) != CT_OK) return st;
  if (opt.strategy == "pretrained") return set("run_name", "pretrained");
  if (!opt.strategy.empty() && (st = set("strategy", opt.strategy)) != CT_OK) return st;
  return CT_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-teaching for response-selection matchers trained on noisy data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ct_version());

  Options opt;
  auto add_common = [&](CLI::App* sub, bool with_strategy, bool allow_pretrained) {
    sub->add_option("--config", opt.config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--run-dir", opt.run_dir, "Run output directory");
    sub->add_option("--seed", opt.seed, "Seed for generation, init and training")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->add_option("--set", opt.settings, "Override a config key (key=value)");
    if (with_strategy) {
      std::vector<std::string> allowed{"margin", "weighting", "curriculum", "none"};
      if (allow_pretrained) allowed.emplace_back("pretrained");
      sub->add_option("--strategy", opt.strategy, "Co-teaching strategy or run to use")
          ->check(CLI::IsMember(allowed));
    }
  };

  auto* generate = app.add_subcommand("generate", "Write a synthetic noisy corpus");
  add_common(generate, false, false);
  auto* pretrain = app.add_subcommand("pretrain", "Pre-train the matcher(s) on noisy data");
  add_common(pretrain, false, false);
  auto* coteach = app.add_subcommand("coteach", "Co-teach two peers from the pretrained model");
  add_common(coteach, true, false);
  auto* evaluate = app.add_subcommand("evaluate", "Rank the test set and print metrics");
  add_common(evaluate, true, true);
  evaluate->add_option("--baseline-dump", opt.baseline_dump,
                       "Per-group metrics of a baseline for a paired t-test")
      ->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "Sweep lambda (margin) or delta (curriculum)");
  add_common(sweep, false, false);
  auto* report_cmd = app.add_subcommand("report", "Write EMA-smoothed training curves");
  add_common(report_cmd, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (const auto& kv : opt.settings) {
    if (kv.find('=') == std::string::npos) {
      std::cerr << "coteach: usage error: --set expects key=value, got '" << kv << "'\n";
      return kExitUsage;
    }
  }

  ct_config* raw = nullptr;
  const ct_status built = build_config(opt, &raw);
  ConfigPtr config(raw);
  if (built != CT_OK) return report(built);

  ct_status st = CT_OK;
  if (*generate) st = ct_cmd_generate(config.get(), write_stdout, nullptr);
  else if (*pretrain) st = ct_cmd_pretrain(config.get(), write_stdout, nullptr);
  else if (*coteach) st = ct_cmd_coteach(config.get(), write_stdout, nullptr);
  else if (*evaluate)
    st = ct_cmd_evaluate(config.get(), opt.baseline_dump.empty() ? nullptr : opt.baseline_dump.c_str(),
                         write_stdout, nullptr);
  else if (*sweep) st = ct_cmd_sweep(config.get(), write_stdout, nullptr);
  else if (*report_cmd) st = ct_cmd_report(config.get(), write_stdout, nullptr);
  return report(st);
}
