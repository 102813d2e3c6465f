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

#include "coteach/coteach.h"

#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "coteach/config.hpp"
#include "coteach/corpus.hpp"
#include "coteach/error.hpp"
#include "coteach/eval.hpp"
#include "coteach/matcher.hpp"
#include "coteach/pipeline.hpp"

struct ct_config {
  coteach::RunConfig value;
};

struct ct_corpus {
  coteach::Corpus value;
};

struct ct_model {
  coteach::ModelState value;
};

namespace {

thread_local std::string last_error;

ct_status status_for(coteach::ErrorKind kind) {
  switch (kind) {
    case coteach::ErrorKind::usage: return CT_ERR_USAGE;
    case coteach::ErrorKind::data: return CT_ERR_DATA;
    case coteach::ErrorKind::io: return CT_ERR_IO;
    case coteach::ErrorKind::numeric: return CT_ERR_NUMERIC;
  }
  return CT_ERR_INTERNAL;
}

template <typename F>
ct_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return CT_OK;
  } catch (const coteach::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return CT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) coteach::fail(coteach::ErrorKind::usage, std::string(what) + " is null");
}

template <typename Cmd>
ct_status run_command(const ct_config* config, ct_write_fn write, void* user, Cmd&& cmd) {
  return guarded([&] {
    need(config, "config");
    std::ostringstream out;
    // Flush what was produced even if the command fails part way.
    struct Flush {
      std::ostringstream& out;
      ct_write_fn write;
      void* user;
      ~Flush() {
        if (write == nullptr) return;
        const std::string text = out.str();
        if (!text.empty()) write(text.data(), text.size(), user);
      }
    } flush{out, write, user};
    cmd(config->value, out);
  });
}

}  // namespace

extern "C" {

const char* ct_version(void) { return "0.1.0"; }

const char* ct_last_error(void) { return last_error.c_str(); }

const char* ct_status_name(ct_status status) {
  switch (status) {
    case CT_OK: return "ok";
    case CT_ERR_USAGE: return "usage error";
    case CT_ERR_DATA: return "data error";
    case CT_ERR_IO: return "io error";
    case CT_ERR_NUMERIC: return "numeric error";
    case CT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ct_status ct_config_new(ct_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ct_config{};
  });
}

ct_status ct_config_load(const char* path, ct_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ct_config{coteach::load_config(path)};
  });
}

ct_status ct_config_set(ct_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    coteach::apply_setting(config->value, key, value);
  });
}

void ct_config_free(ct_config* config) { delete config; }

ct_status ct_cmd_generate(const ct_config* config, ct_write_fn write, void* user) {
  return run_command(config, write, user, coteach::cmd_generate);
}

ct_status ct_cmd_pretrain(const ct_config* config, ct_write_fn write, void* user) {
  return run_command(config, write, user, coteach::cmd_pretrain);
}

ct_status ct_cmd_coteach(const ct_config* config, ct_write_fn write, void* user) {
  return run_command(config, write, user, coteach::cmd_coteach);
}

ct_status ct_cmd_evaluate(const ct_config* config, const char* baseline_dump, ct_write_fn write,
                          void* user) {
  return run_command(config, write, user,
                     [&](const coteach::RunConfig& c, std::ostream& out) {
                       std::optional<std::filesystem::path> dump;
                       if (baseline_dump != nullptr) dump = baseline_dump;
                       coteach::cmd_evaluate(c, out, dump);
                     });
}

ct_status ct_cmd_sweep(const ct_config* config, ct_write_fn write, void* user) {
  return run_command(config, write, user, coteach::cmd_sweep);
}

ct_status ct_cmd_report(const ct_config* config, ct_write_fn write, void* user) {
  return run_command(config, write, user, coteach::cmd_report);
}

ct_status ct_corpus_load(const ct_config* config, ct_corpus** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = new ct_corpus{coteach::load_run_corpus(config->value)};
  });
}

ct_status ct_corpus_generate(const ct_config* config, ct_corpus** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = new ct_corpus{coteach::generate_synthetic_corpus(config->value.gen)};
  });
}

ct_status ct_corpus_counts(const ct_corpus* corpus, size_t* n_train, size_t* n_valid,
                           size_t* n_test, int32_t* vocab_size) {
  return guarded([&] {
    need(corpus, "corpus");
    if (n_train) *n_train = corpus->value.train.size();
    if (n_valid) *n_valid = corpus->value.valid.size();
    if (n_test) *n_test = corpus->value.test.size();
    if (vocab_size) *vocab_size = corpus->value.vocab_size;
  });
}

void ct_corpus_free(ct_corpus* corpus) { delete corpus; }

ct_status ct_model_load(const char* path, ct_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ct_model{coteach::load_checkpoint(path)};
  });
}

ct_status ct_model_save(const ct_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    coteach::save_checkpoint(model->value, path);
  });
}

ct_status ct_model_param_count(const ct_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->value.params.size();
  });
}

ct_status ct_model_score(const ct_model* model, const int32_t* const* utterances,
                         const size_t* utterance_lens, size_t n_utterances,
                         const int32_t* response, size_t response_len, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    if (n_utterances > 0) {
      need(utterances, "utterances");
      need(utterance_lens, "utterance_lens");
    }
    if (response_len > 0) need(response, "response");
    const int vocab = model->value.spec.vocab_size;
    auto copy = [&](const int32_t* data, size_t len) {
      coteach::require(len > 0, coteach::ErrorKind::data, "empty token sequence");
      coteach::TokenSeq seq(data, data + len);
      for (auto t : seq)
        coteach::require(t >= 0 && t < vocab, coteach::ErrorKind::data,
                         "token id " + std::to_string(t) + " outside vocabulary");
      return seq;
    };
    coteach::require(n_utterances > 0, coteach::ErrorKind::data, "empty context");
    coteach::Context context;
    for (size_t i = 0; i < n_utterances; ++i) {
      need(utterances[i], "utterance");
      context.push_back(copy(utterances[i], utterance_lens[i]));
    }
    const coteach::TokenSeq resp = copy(response, response_len);
    *out = coteach::score(model->value, context, resp);
  });
}

ct_status ct_model_valid_p_at_1(const ct_model* model, const ct_corpus* corpus, double* out) {
  return guarded([&] {
    need(model, "model");
    need(corpus, "corpus");
    need(out, "out");
    coteach::require(!corpus->value.valid.empty(), coteach::ErrorKind::data,
                     "corpus has no validation triples");
    coteach::require(model->value.spec.vocab_size == corpus->value.vocab_size,
                     coteach::ErrorKind::data, "model and corpus vocabularies differ");
    *out = coteach::pairwise_p_at_1(model->value, corpus->value.valid);
  });
}

void ct_model_free(ct_model* model) { delete model; }

}  // extern "C"
