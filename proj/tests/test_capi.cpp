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

#include <string>

#include "coteach/coteach.h"
#include "doctest.h"
#include "test_util.hpp"

namespace {

void collect(const char* text, size_t len, void* user) {
  static_cast<std::string*>(user)->append(text, len);
}

}  // namespace

TEST_CASE("C API: config, commands, models") {
  coteach::testing::TempDir root("capi");
  ct_config* cfg = nullptr;
  REQUIRE(ct_config_new(&cfg) == CT_OK);
  const std::string corpus = (root.path() / "corpus").string();
  const std::string run = (root.path() / "run").string();
  const char* settings[][2] = {{"vocab_size", "200"},  {"n_topics", "4"},
                               {"n_train", "100"},     {"n_valid", "40"},
                               {"n_test_contexts", "20"}, {"spec_a.embedding_dim", "8"},
                               {"batch_size", "20"},   {"epochs", "1"},
                               {"corpus_dir", corpus.c_str()}, {"run_dir", run.c_str()},
                               {"strategy", "weighting"}};
  for (const auto& kv : settings) CHECK(ct_config_set(cfg, kv[0], kv[1]) == CT_OK);

  CHECK(ct_config_set(cfg, "no_such_key", "1") == CT_ERR_USAGE);
  CHECK(std::string(ct_last_error()).find("no_such_key") != std::string::npos);
  CHECK(ct_config_set(nullptr, "seed", "1") == CT_ERR_USAGE);

  std::string out;
  CHECK(ct_cmd_pretrain(cfg, collect, &out) == CT_ERR_DATA);
  CHECK(ct_cmd_generate(cfg, collect, &out) == CT_OK);
  CHECK(out.find("train=100") != std::string::npos);
  CHECK(ct_cmd_pretrain(cfg, nullptr, nullptr) == CT_OK);
  CHECK(ct_cmd_coteach(cfg, collect, &out) == CT_OK);
  out.clear();
  CHECK(ct_cmd_evaluate(cfg, nullptr, collect, &out) == CT_OK);
  CHECK(out.find("\nweighting,weighting,") != std::string::npos);
  CHECK(ct_cmd_report(cfg, collect, &out) == CT_OK);
  CHECK(ct_cmd_evaluate(cfg, "/nonexistent/per_group.csv", collect, &out) == CT_ERR_DATA);

  ct_corpus* c = nullptr;
  REQUIRE(ct_corpus_load(cfg, &c) == CT_OK);
  size_t n_train = 0, n_valid = 0, n_test = 0;
  int32_t vocab = 0;
  CHECK(ct_corpus_counts(c, &n_train, &n_valid, &n_test, &vocab) == CT_OK);
  CHECK(n_train == 100);
  CHECK(n_valid == 40);
  CHECK(n_test == 20);
  CHECK(vocab == 200);

  ct_model* m = nullptr;
  REQUIRE(ct_model_load((root.path() / "run" / "pretrained.ckpt").c_str(), &m) == CT_OK);
  size_t n_params = 0;
  CHECK(ct_model_param_count(m, &n_params) == CT_OK);
  CHECK(n_params == 200 * 8 + 64 + 1);
  const int32_t u0[] = {1, 2, 3};
  const int32_t u1[] = {4};
  const int32_t* utts[] = {u0, u1};
  const size_t lens[] = {3, 1};
  const int32_t resp[] = {5, 6};
  double s = -1.0;
  CHECK(ct_model_score(m, utts, lens, 2, resp, 2, &s) == CT_OK);
  CHECK((s > 0.0 && s < 1.0));
  const int32_t bad[] = {200};
  CHECK(ct_model_score(m, utts, lens, 2, bad, 1, &s) == CT_ERR_DATA);
  double p1 = -1.0;
  CHECK(ct_model_valid_p_at_1(m, c, &p1) == CT_OK);
  CHECK((p1 >= 0.0 && p1 <= 1.0));
  CHECK(ct_model_save(m, (root.path() / "copy.ckpt").c_str()) == CT_OK);
  ct_model* m2 = nullptr;
  CHECK(ct_model_load((root.path() / "missing.ckpt").c_str(), &m2) == CT_ERR_DATA);

  ct_model_free(m);
  ct_corpus_free(c);
  ct_config_free(cfg);
  CHECK(std::string(ct_status_name(CT_ERR_DATA)) == "data error");
  CHECK(std::string(ct_version()) == "0.1.0");
}
