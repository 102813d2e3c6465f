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
#include <optional>
#include <span>
#include <vector>

namespace coteach {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;
using Context = std::vector<TokenSeq>;

// A context (utterances, oldest first) paired with one response candidate.
struct TokenizedDialogue {
  Context context;
  TokenSeq response;

  bool operator==(const TokenizedDialogue&) const = default;
};

struct PointwiseExample {
  int label = 0;  // 1 = proper response, 0 = negative
  TokenizedDialogue dialogue;

  bool operator==(const PointwiseExample&) const = default;
};

// (c, r+, r-). noise_flag marks synthetic false negatives; training code never
// reads it.
struct PairwiseTriple {
  Context context;
  TokenSeq pos_response;
  TokenSeq neg_response;
  std::optional<bool> noise_flag;

  bool operator==(const PairwiseTriple&) const = default;
};

struct TestCandidate {
  TokenSeq response;
  int label = 0;  // human judgement

  bool operator==(const TestCandidate&) const = default;
};

struct TestGroup {
  Context context;
  std::vector<TestCandidate> candidates;

  bool operator==(const TestGroup&) const = default;
};

struct GenerationInfo {
  std::uint64_t seed = 0;
  double noise_rate = 0.0;

  bool operator==(const GenerationInfo&) const = default;
};

struct Corpus {
  std::vector<PairwiseTriple> train;
  std::vector<PairwiseTriple> valid;
  std::vector<TestGroup> test;
  int vocab_size = 0;
  int n_candidates = 10;
  std::optional<GenerationInfo> generation;  // set iff synthetic

  bool operator==(const Corpus&) const = default;
};

// Synthetic topic corpus. The vocabulary is cut into n_topics + 1 equal
// blocks: block t belongs to topic t, the last block (plus any remainder) is
// a shared background range. Each token of a topic-t utterance comes from
// topic t's block with probability topic_purity, otherwise from the
// background.
struct GenConfig {
  int vocab_size = 1000;
  int n_topics = 10;
  int n_train = 5000;
  int n_valid = 500;
  int n_test_contexts = 500;
  int n_candidates = 10;
  int turns_per_context = 3;
  int tokens_per_utterance = 6;
  double false_negative_rate = 0.3;
  double topic_purity = 0.5;
  // Probability that a test candidate is drawn from the context's topic.
  double test_positive_rate = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

Corpus generate_synthetic_corpus(const GenConfig& config);

// (1, c, r+) then (0, c, r-) for every triple, order preserved.
std::vector<PointwiseExample> to_pointwise(std::span<const PairwiseTriple> triples);

// Keeps the last max_turns utterances and the first max_tokens tokens of every
// utterance and of the response.
TokenizedDialogue truncate(const TokenizedDialogue& dialogue, int max_turns,
                           int max_tokens);
void truncate_corpus(Corpus& corpus, int max_turns, int max_tokens);

// Fraction of triples flagged as false negatives; 0 for an empty or
// unflagged list.
double noise_fraction(std::span<const PairwiseTriple> triples);

// Directory layout: train.txt, valid.txt, test.txt, plus train.noise /
// valid.noise sidecars for synthetic corpora.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace coteach
