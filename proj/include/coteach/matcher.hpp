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
#include <span>
#include <string>
#include <vector>

#include "coteach/corpus.hpp"
#include "coteach/protocol.hpp"

namespace coteach {

enum class MatcherKind { mean_embedding_bilinear, interaction_mlp };

const char* to_string(MatcherKind kind);
MatcherKind parse_matcher_kind(const std::string& text);

struct MatcherSpec {
  MatcherKind kind = MatcherKind::mean_embedding_bilinear;
  int vocab_size = 0;
  int embedding_dim = 32;
  int hidden_dim = 32;  // interaction-mlp only

  void validate() const;
  std::size_t param_count() const;

  bool operator==(const MatcherSpec&) const = default;
};

// Offsets into the flat parameter vector.
//
//   both kinds:       E   vocab x d, row-major (row = token)
//   bilinear:         W   d x d row-major, then b (1)
//   interaction-mlp:  W1  h x 3d row-major, b1 (h), w2 (h), b2 (1)
//
// Unused offsets equal `total`.
struct ParamLayout {
  std::size_t embedding = 0;
  std::size_t w = 0, b = 0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  std::size_t total = 0;

  static ParamLayout of(const MatcherSpec& spec);
};

struct ModelState {
  MatcherSpec spec;
  std::vector<double> params;

  bool operator==(const ModelState&) const = default;
};

// Embeddings and weight matrices ~ U(-0.1, 0.1), biases 0.
ModelState init_params(const MatcherSpec& spec, std::uint64_t seed);

double score(const ModelState& model, std::span<const TokenSeq> context,
             std::span<const Token> response);
inline double score(const ModelState& model, const TokenizedDialogue& dialogue) {
  return score(model, dialogue.context, dialogue.response);
}

// Logistic function with its input clamped to [-30, 30].
double sigmoid(double z);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Summed protocol loss and its gradient with respect to model.params.
// Margins and weights are constants.
LossAndGrad loss_and_grad(const ModelState& model, const LearningProtocol& protocol);
double protocol_loss(const ModelState& model, const LearningProtocol& protocol);

// Central-difference check of `analytic` against the protocol loss, which is
// evaluated in extended precision here. Returns the largest per-coordinate
// |g - fd| / max(|g|, |fd|, 1e-8).
double finite_diff_check(const ModelState& model, const LearningProtocol& protocol,
                         double step, std::span<const double> analytic);
// Same, against loss_and_grad's gradient.
double finite_diff_check(const ModelState& model, const LearningProtocol& protocol,
                         double step);

// Text header line then little-endian IEEE-754 doubles.
void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace coteach
