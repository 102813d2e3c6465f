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

/* C interface to the coteach library. All functions return a ct_status;
 * on failure ct_last_error() describes the problem for the calling thread. */
#ifndef COTEACH_COTEACH_H
#define COTEACH_COTEACH_H

#include <stddef.h>
#include <stdint.h>

#if defined(COTEACH_BUILDING_LIBRARY)
#define CT_API __attribute__((visibility("default")))
#else
#define CT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ct_status {
  CT_OK = 0,
  CT_ERR_USAGE = 1,
  CT_ERR_DATA = 2,
  CT_ERR_IO = 3,
  CT_ERR_NUMERIC = 4,
  CT_ERR_INTERNAL = 5
} ct_status;

typedef struct ct_config ct_config;
typedef struct ct_corpus ct_corpus;
typedef struct ct_model ct_model;

/* Receives command output; text is not NUL-terminated. */
typedef void (*ct_write_fn)(const char* text, size_t len, void* user);

CT_API const char* ct_version(void);
CT_API const char* ct_last_error(void);
CT_API const char* ct_status_name(ct_status status);

CT_API ct_status ct_config_new(ct_config** out);
CT_API ct_status ct_config_load(const char* path, ct_config** out);
CT_API ct_status ct_config_set(ct_config* config, const char* key, const char* value);
CT_API void ct_config_free(ct_config* config);

/* Pipeline commands. write may be NULL to discard output. */
CT_API ct_status ct_cmd_generate(const ct_config* config, ct_write_fn write, void* user);
CT_API ct_status ct_cmd_pretrain(const ct_config* config, ct_write_fn write, void* user);
CT_API ct_status ct_cmd_coteach(const ct_config* config, ct_write_fn write, void* user);
/* baseline_dump may be NULL; otherwise a per_group.csv to test against. */
CT_API ct_status ct_cmd_evaluate(const ct_config* config, const char* baseline_dump,
                                 ct_write_fn write, void* user);
CT_API ct_status ct_cmd_sweep(const ct_config* config, ct_write_fn write, void* user);
CT_API ct_status ct_cmd_report(const ct_config* config, ct_write_fn write, void* user);

/* Loads the configured corpus directory with truncation applied. */
CT_API ct_status ct_corpus_load(const ct_config* config, ct_corpus** out);
CT_API ct_status ct_corpus_generate(const ct_config* config, ct_corpus** out);
CT_API ct_status ct_corpus_counts(const ct_corpus* corpus, size_t* n_train, size_t* n_valid,
                                  size_t* n_test, int32_t* vocab_size);
CT_API void ct_corpus_free(ct_corpus* corpus);

CT_API ct_status ct_model_load(const char* path, ct_model** out);
CT_API ct_status ct_model_save(const ct_model* model, const char* path);
CT_API ct_status ct_model_param_count(const ct_model* model, size_t* out);
/* Scores one (context, response) pair; context utterances are given as
 * n_utterances pointers with matching lengths. */
CT_API ct_status ct_model_score(const ct_model* model, const int32_t* const* utterances,
                                const size_t* utterance_lens, size_t n_utterances,
                                const int32_t* response, size_t response_len, double* out);
/* Validation P@1 over the corpus's pairwise validation triples. */
CT_API ct_status ct_model_valid_p_at_1(const ct_model* model, const ct_corpus* corpus,
                                       double* out);
CT_API void ct_model_free(ct_model* model);

#ifdef __cplusplus
}
#endif

#endif /* COTEACH_COTEACH_H */
