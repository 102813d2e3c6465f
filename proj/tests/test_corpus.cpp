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

#include <cmath>
#include <set>

#include "coteach/corpus.hpp"
#include "coteach/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coteach;
using coteach::testing::TempDir;

namespace {

int topic_of(Token t, const GenConfig& g) {
  const int block = g.vocab_size / (g.n_topics + 1);
  const int topic = t / block;
  return topic < g.n_topics ? topic : -1;
}

}  // namespace

TEST_CASE("generator: noise branch never or always taken at the extremes") {
  GenConfig g = coteach::testing::small_gen();
  g.false_negative_rate = 0.0;
  Corpus clean = generate_synthetic_corpus(g);
  for (const auto& t : clean.train) CHECK(t.noise_flag == std::optional<bool>(false));
  g.false_negative_rate = 1.0;
  Corpus noisy = generate_synthetic_corpus(g);
  for (const auto& t : noisy.train) CHECK(t.noise_flag == std::optional<bool>(true));
}

TEST_CASE("generator: exact sizes and determinism") {
  GenConfig g;
  g.n_train = 5000;
  g.n_valid = 10;
  g.n_test_contexts = 10;
  const Corpus a = generate_synthetic_corpus(g);
  CHECK(a.train.size() == 5000);
  CHECK(a.valid.size() == 10);
  CHECK(a.test.size() == 10);
  CHECK(a.vocab_size == 1000);
  REQUIRE(a.generation.has_value());
  CHECK(a.generation->seed == g.seed);
  const Corpus b = generate_synthetic_corpus(g);
  CHECK(a == b);

  TempDir d1("gen1"), d2("gen2");
  save_corpus(a, d1.path());
  save_corpus(b, d2.path());
  for (const char* f : {"train.txt", "valid.txt", "test.txt", "train.noise", "valid.noise"})
    CHECK(coteach::testing::read_file(d1.path() / f) == coteach::testing::read_file(d2.path() / f));

  g.seed = 2;
  CHECK_FALSE(generate_synthetic_corpus(g) == a);
}

TEST_CASE("generator: realized noise fraction within four binomial sigmas") {
  for (double rho : {0.1, 0.3, 0.5}) {
    GenConfig g;
    g.false_negative_rate = rho;
    g.n_train = 5000;
    g.n_valid = 10;
    g.n_test_contexts = 10;
    g.seed = 11;
    const Corpus c = generate_synthetic_corpus(g);
    const double frac = noise_fraction(c.train);
    CHECK(std::abs(frac - rho) < 4.0 * std::sqrt(rho * (1 - rho) / 5000.0));
  }
}

TEST_CASE("generator: structural invariants") {
  GenConfig g = coteach::testing::small_gen(3);
  g.false_negative_rate = 0.4;
  const Corpus c = generate_synthetic_corpus(g);
  for (const auto& t : c.train) {
    CHECK(t.pos_response != t.neg_response);
    CHECK(t.context.size() == static_cast<std::size_t>(g.turns_per_context));
    for (const auto& u : t.context) {
      CHECK(!u.empty());
      CHECK(u.size() <= static_cast<std::size_t>(g.tokens_per_utterance));
      for (Token tok : u) CHECK((tok >= 0 && tok < g.vocab_size));
    }
  }
  for (const auto& group : c.test) {
    REQUIRE(group.candidates.size() == static_cast<std::size_t>(g.n_candidates));
    int pos = 0;
    for (const auto& cand : group.candidates) pos += cand.label;
    CHECK(pos >= 1);
    CHECK(pos <= g.n_candidates - 1);
  }
}

TEST_CASE("generator: a clean negative comes from a different topic than the positive") {
  GenConfig g = coteach::testing::small_gen(5);
  g.topic_purity = 1.0;
  g.false_negative_rate = 0.5;
  const Corpus c = generate_synthetic_corpus(g);
  for (const auto& t : c.train) {
    const int pos_topic = topic_of(t.pos_response.front(), g);
    const int neg_topic = topic_of(t.neg_response.front(), g);
    for (Token tok : t.pos_response) CHECK(topic_of(tok, g) == pos_topic);
    if (*t.noise_flag) CHECK(neg_topic == pos_topic);
    else CHECK(neg_topic != pos_topic);
  }
}

TEST_CASE("generator: invalid configs are rejected") {
  GenConfig g;
  g.false_negative_rate = 1.5;
  CHECK_THROWS_AS(generate_synthetic_corpus(g), Error);
  g = GenConfig{};
  g.false_negative_rate = -0.1;
  CHECK_THROWS_AS(generate_synthetic_corpus(g), Error);
  g = GenConfig{};
  g.vocab_size = 10;
  g.n_topics = 10;
  CHECK_THROWS_AS(generate_synthetic_corpus(g), Error);
  g = GenConfig{};
  g.n_train = 0;
  CHECK_THROWS_AS(generate_synthetic_corpus(g), Error);
}

TEST_CASE("to_pointwise") {
  CHECK(to_pointwise({}).empty());
  Rng rng(1);
  std::vector<PairwiseTriple> triples;
  for (int i = 0; i < 3; ++i) triples.push_back(coteach::testing::random_triple(rng, 50));
  const auto one = to_pointwise(std::span(triples).first(1));
  REQUIRE(one.size() == 2);
  CHECK(one[0].label == 1);
  CHECK(one[1].label == 0);
  CHECK(one[0].dialogue.response == triples[0].pos_response);
  CHECK(one[1].dialogue.response == triples[0].neg_response);
  const auto all = to_pointwise(triples);
  REQUIRE(all.size() == 6);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].label == (i % 2 == 0 ? 1 : 0));
    CHECK(all[i].dialogue.context == triples[i / 2].context);
  }
}

TEST_CASE("truncate keeps the last turns and the first tokens") {
  TokenizedDialogue d;
  for (int i = 0; i < 12; ++i) d.context.push_back({i});
  for (int i = 0; i < 60; ++i) d.response.push_back(i);
  const auto t = truncate(d, 10, 50);
  REQUIRE(t.context.size() == 10);
  CHECK(t.context.front() == TokenSeq{2});
  CHECK(t.context.back() == TokenSeq{11});
  REQUIRE(t.response.size() == 50);
  CHECK(t.response.front() == 0);
  CHECK(t.response.back() == 49);
  CHECK(truncate(t, 10, 50) == t);

  TokenizedDialogue short_one{{{1, 2}, {3}, {4, 5, 6}}, {7}};
  CHECK(truncate(short_one, 10, 50) == short_one);

  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    TokenizedDialogue r{coteach::testing::random_context(rng, 30, 8, 9),
                        coteach::testing::random_seq(rng, 30, 9)};
    const int turns = 1 + static_cast<int>(rng.below(5));
    const int tokens = 1 + static_cast<int>(rng.below(5));
    const auto once = truncate(r, turns, tokens);
    CHECK(truncate(once, turns, tokens) == once);
  }
}

TEST_CASE("corpus save/load round trip") {
  GenConfig g = coteach::testing::small_gen();
  g.n_train = 10;
  const Corpus c = generate_synthetic_corpus(g);
  TempDir dir("roundtrip");
  save_corpus(c, dir.path());
  CHECK(load_corpus(dir.path()) == c);

  Corpus plain = c;
  plain.generation.reset();
  for (auto& t : plain.train) t.noise_flag.reset();
  for (auto& t : plain.valid) t.noise_flag.reset();
  TempDir dir2("roundtrip_plain");
  save_corpus(plain, dir2.path());
  CHECK(load_corpus(dir2.path()) == plain);
}

TEST_CASE("corpus loading errors and boundaries") {
  GenConfig g = coteach::testing::small_gen();
  g.n_train = 4;
  const Corpus c = generate_synthetic_corpus(g);
  TempDir dir("errors");
  save_corpus(c, dir.path());

  SUBCASE("empty train file gives an empty train list") {
    coteach::testing::write_file(dir.path() / "train.txt", "#vocab=200 candidates=10\n");
    std::filesystem::remove(dir.path() / "train.noise");
    const Corpus loaded = load_corpus(dir.path());
    CHECK(loaded.train.empty());
    CHECK(loaded.valid == c.valid);
  }
  SUBCASE("a line with one field names its line") {
    coteach::testing::write_file(dir.path() / "train.txt",
                                 "#vocab=200 candidates=10\nPOS\n");
    try {
      load_corpus(dir.path());
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::data);
      CHECK(std::string(e.what()).find("train.txt:2") != std::string::npos);
    }
  }
  SUBCASE("token id at or above the vocabulary is rejected") {
    coteach::testing::write_file(dir.path() / "train.txt",
                                 "#vocab=200 candidates=10\nPOS\t1 2\t3\nNEG\t1 2\t200\n");
    std::filesystem::remove(dir.path() / "train.noise");
    CHECK_THROWS_AS(load_corpus(dir.path()), Error);
  }
  SUBCASE("missing directory is a data error") {
    try {
      load_corpus(dir.path() / "nope");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::data);
    }
  }
}

TEST_CASE("truncate_corpus applies limits everywhere") {
  GenConfig g = coteach::testing::small_gen();
  g.turns_per_context = 5;
  g.tokens_per_utterance = 8;
  Corpus c = generate_synthetic_corpus(g);
  truncate_corpus(c, 2, 3);
  for (const auto& t : c.train) {
    CHECK(t.context.size() <= 2);
    CHECK(t.pos_response.size() <= 3);
    CHECK(t.neg_response.size() <= 3);
    for (const auto& u : t.context) CHECK(u.size() <= 3);
  }
  for (const auto& grp : c.test) {
    CHECK(grp.context.size() <= 2);
    for (const auto& cand : grp.candidates) CHECK(cand.response.size() <= 3);
  }
}
