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

#include "coteach/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "coteach/error.hpp"
#include "coteach/rng.hpp"

namespace coteach {
namespace {

class TopicSampler {
 public:
  TopicSampler(const GenConfig& config, Rng& rng)
      : config_(config),
        rng_(rng),
        block_(config.vocab_size / (config.n_topics + 1)),
        background_start_(block_ * config.n_topics) {}

  Token token(int topic) {
    if (rng_.bernoulli(config_.topic_purity)) {
      return static_cast<Token>(topic * block_ +
                                static_cast<int>(rng_.below(block_)));
    }
    const auto width =
        static_cast<std::size_t>(config_.vocab_size - background_start_);
    return static_cast<Token>(background_start_ +
                              static_cast<int>(rng_.below(width)));
  }

  TokenSeq utterance(int topic) {
    const int max_len = config_.tokens_per_utterance;
    const int min_len = std::max(1, max_len / 2);
    const int len =
        min_len + static_cast<int>(rng_.below(static_cast<std::size_t>(
                      max_len - min_len + 1)));
    TokenSeq out(static_cast<std::size_t>(len));
    for (auto& t : out) t = token(topic);
    return out;
  }

  Context context(int topic) {
    Context out;
    out.reserve(static_cast<std::size_t>(config_.turns_per_context));
    for (int i = 0; i < config_.turns_per_context; ++i)
      out.push_back(utterance(topic));
    return out;
  }

  int topic() { return static_cast<int>(rng_.below(config_.n_topics)); }

  int other_topic(int topic) {
    const int shift = 1 + static_cast<int>(rng_.below(config_.n_topics - 1));
    return (topic + shift) % config_.n_topics;
  }

 private:
  const GenConfig& config_;
  Rng& rng_;
  int block_;
  int background_start_;
};

std::vector<PairwiseTriple> make_triples(TopicSampler& sampler, Rng& rng,
                                         int count, double noise_rate) {
  std::vector<PairwiseTriple> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    PairwiseTriple triple;
    const int topic = sampler.topic();
    triple.context = sampler.context(topic);
    triple.pos_response = sampler.utterance(topic);
    const bool noisy = rng.bernoulli(noise_rate);
    const int neg_topic = noisy ? topic : sampler.other_topic(topic);
    do {
      triple.neg_response = sampler.utterance(neg_topic);
    } while (triple.neg_response == triple.pos_response);
    triple.noise_flag = noisy;
    out.push_back(std::move(triple));
  }
  return out;
}

TestGroup make_test_group(const GenConfig& config, TopicSampler& sampler,
                          Rng& rng) {
  TestGroup group;
  const int topic = sampler.topic();
  group.context = sampler.context(topic);
  for (;;) {
    group.candidates.clear();
    int positives = 0;
    for (int i = 0; i < config.n_candidates; ++i) {
      const bool same = rng.bernoulli(config.test_positive_rate);
      const int t = same ? topic : sampler.other_topic(topic);
      group.candidates.push_back({sampler.utterance(t), same ? 1 : 0});
      positives += same ? 1 : 0;
    }
    if (positives >= 1 && positives <= config.n_candidates - 1) break;
  }
  return group;
}

// ---- text format ----------------------------------------------------------

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

struct LineRef {
  std::string file;
  std::size_t number;

  std::string where() const {
    return file + ":" + std::to_string(number);
  }
};

TokenSeq parse_tokens(std::string_view field, int vocab_size,
                      const LineRef& ref) {
  TokenSeq out;
  for (auto piece : split(field, ' ')) {
    if (piece.empty()) continue;
    Token value = 0;
    auto [ptr, ec] =
        std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc() || ptr != piece.data() + piece.size() || value < 0)
      fail(ErrorKind::data, ref.where() + ": bad token '" +
                                std::string(piece) + "'");
    if (value >= vocab_size)
      fail(ErrorKind::data, ref.where() + ": token " + std::to_string(value) +
                                " >= vocab size " + std::to_string(vocab_size));
    out.push_back(value);
  }
  if (out.empty()) fail(ErrorKind::data, ref.where() + ": empty token sequence");
  return out;
}

// Fields after the leading tag/label: utterances then the response.
std::pair<Context, TokenSeq> parse_dialogue(
    const std::vector<std::string_view>& fields, int vocab_size,
    const LineRef& ref) {
  if (fields.size() < 3)
    fail(ErrorKind::data, ref.where() + ": expected at least 3 tab-separated "
                                        "fields, got " +
                              std::to_string(fields.size()));
  Context context;
  for (std::size_t i = 1; i + 1 < fields.size(); ++i)
    context.push_back(parse_tokens(fields[i], vocab_size, ref));
  return {std::move(context), parse_tokens(fields.back(), vocab_size, ref)};
}

void write_tokens(std::ostream& out, const TokenSeq& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out << ' ';
    out << tokens[i];
  }
}

void write_dialogue(std::ostream& out, std::string_view tag,
                    const Context& context, const TokenSeq& response) {
  out << tag;
  for (const auto& utt : context) {
    out << '\t';
    write_tokens(out, utt);
  }
  out << '\t';
  write_tokens(out, response);
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string header_line(const Corpus& corpus) {
  std::string h = "#vocab=" + std::to_string(corpus.vocab_size) +
                  " candidates=" + std::to_string(corpus.n_candidates);
  if (corpus.generation) {
    h += " seed=" + std::to_string(corpus.generation->seed);
    h += " noise_rate=" + format_double(corpus.generation->noise_rate);
  }
  return h;
}

struct Header {
  std::optional<int> vocab;
  std::optional<int> candidates;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_rate;
};

template <class T>
T parse_number(std::string_view text, const LineRef& ref) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::data, ref.where() + ": bad header value '" +
                              std::string(text) + "'");
  return value;
}

Header parse_header(std::string_view line, const LineRef& ref) {
  Header h;
  for (auto item : split(line.substr(1), ' ')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::data, ref.where() + ": bad header item '" +
                                std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "vocab") h.vocab = parse_number<int>(value, ref);
    else if (key == "candidates") h.candidates = parse_number<int>(value, ref);
    else if (key == "seed") h.seed = parse_number<std::uint64_t>(value, ref);
    else if (key == "noise_rate") h.noise_rate = parse_number<double>(value, ref);
  }
  return h;
}

struct RawFile {
  std::optional<Header> header;
  std::vector<std::pair<std::size_t, std::string>> lines;  // (number, text)
};

RawFile read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "missing corpus file: " + path.string());
  RawFile raw;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!raw.header) raw.header = parse_header(line, {path.filename().string(), number});
      continue;
    }
    raw.lines.emplace_back(number, std::move(line));
  }
  return raw;
}

std::vector<PairwiseTriple> parse_pairs(const RawFile& raw, int vocab_size,
                                        const std::string& name) {
  std::vector<PairwiseTriple> out;
  for (std::size_t i = 0; i < raw.lines.size(); i += 2) {
    const LineRef pos_ref{name, raw.lines[i].first};
    const auto pos_fields = split(raw.lines[i].second, '\t');
    if (pos_fields.front() != "POS")
      fail(ErrorKind::data, pos_ref.where() + ": expected POS line");
    auto [context, pos] = parse_dialogue(pos_fields, vocab_size, pos_ref);
    if (i + 1 >= raw.lines.size())
      fail(ErrorKind::data, pos_ref.where() + ": POS line without NEG line");
    const LineRef neg_ref{name, raw.lines[i + 1].first};
    const auto neg_fields = split(raw.lines[i + 1].second, '\t');
    if (neg_fields.front() != "NEG")
      fail(ErrorKind::data, neg_ref.where() + ": expected NEG line");
    auto [neg_context, neg] = parse_dialogue(neg_fields, vocab_size, neg_ref);
    if (neg_context != context)
      fail(ErrorKind::data, neg_ref.where() + ": NEG context differs from POS");
    out.push_back({std::move(context), std::move(pos), std::move(neg), std::nullopt});
  }
  return out;
}

std::vector<TestGroup> parse_test(const RawFile& raw, int vocab_size,
                                  int n_candidates, const std::string& name) {
  std::vector<TestGroup> out;
  for (std::size_t i = 0; i < raw.lines.size(); ++i) {
    const LineRef ref{name, raw.lines[i].first};
    const auto fields = split(raw.lines[i].second, '\t');
    const auto label = fields.front();
    if (label != "0" && label != "1")
      fail(ErrorKind::data, ref.where() + ": label must be 0 or 1");
    auto [context, response] = parse_dialogue(fields, vocab_size, ref);
    if (i % static_cast<std::size_t>(n_candidates) == 0) {
      out.push_back({std::move(context), {}});
    } else if (context != out.back().context) {
      fail(ErrorKind::data, ref.where() + ": context differs within group");
    }
    out.back().candidates.push_back({std::move(response), label == "1" ? 1 : 0});
  }
  if (!out.empty() &&
      out.back().candidates.size() != static_cast<std::size_t>(n_candidates))
    fail(ErrorKind::data, name + ": last group has " +
                              std::to_string(out.back().candidates.size()) +
                              " candidates, expected " +
                              std::to_string(n_candidates));
  return out;
}

void read_noise_flags(const std::filesystem::path& path,
                      std::vector<PairwiseTriple>& triples) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= triples.size() || (line != "0" && line != "1"))
      fail(ErrorKind::data, path.filename().string() + ":" +
                                std::to_string(i + 1) + ": bad noise flag");
    triples[i++].noise_flag = line == "1";
  }
  if (i != triples.size())
    fail(ErrorKind::data, path.filename().string() +
                              ": flag count does not match triple count");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void save_pairs(const std::filesystem::path& dir, const std::string& stem,
                const Corpus& corpus, const std::vector<PairwiseTriple>& triples) {
  auto out = open_out(dir / (stem + ".txt"));
  out << header_line(corpus) << '\n';
  for (const auto& t : triples) {
    write_dialogue(out, "POS", t.context, t.pos_response);
    write_dialogue(out, "NEG", t.context, t.neg_response);
  }
  const bool flagged = std::any_of(triples.begin(), triples.end(),
                                   [](const auto& t) { return t.noise_flag.has_value(); });
  const auto flag_path = dir / (stem + ".noise");
  if (flagged) {
    auto flags = open_out(flag_path);
    for (const auto& t : triples) flags << (t.noise_flag.value_or(false) ? "1\n" : "0\n");
  } else {
    std::filesystem::remove(flag_path);
  }
  if (!out) fail(ErrorKind::io, "write failed in " + dir.string());
}

}  // namespace

void GenConfig::validate() const {
  require(false_negative_rate >= 0.0 && false_negative_rate <= 1.0,
          ErrorKind::usage, "false_negative_rate must lie in [0, 1]");
  require(n_topics >= 2, ErrorKind::usage, "n_topics must be at least 2");
  require(vocab_size / (n_topics + 1) >= 2, ErrorKind::usage,
          "vocab_size too small for " + std::to_string(n_topics) +
              " disjoint topic ranges plus background");
  require(n_train > 0 && n_valid > 0 && n_test_contexts > 0,
          ErrorKind::usage, "corpus split sizes must be positive");
  require(n_candidates >= 2, ErrorKind::usage, "n_candidates must be at least 2");
  require(turns_per_context > 0 && tokens_per_utterance > 0, ErrorKind::usage,
          "turns_per_context and tokens_per_utterance must be positive");
  require(topic_purity > 0.0 && topic_purity <= 1.0, ErrorKind::usage,
          "topic_purity must lie in (0, 1]");
  require(test_positive_rate > 0.0 && test_positive_rate < 1.0, ErrorKind::usage,
          "test_positive_rate must lie in (0, 1)");
}

Corpus generate_synthetic_corpus(const GenConfig& config) {
  config.validate();
  Rng rng = Rng::for_concern(config.seed, "generate");
  TopicSampler sampler(config, rng);

  Corpus corpus;
  corpus.vocab_size = config.vocab_size;
  corpus.n_candidates = config.n_candidates;
  corpus.generation = GenerationInfo{config.seed, config.false_negative_rate};
  corpus.train = make_triples(sampler, rng, config.n_train, config.false_negative_rate);
  corpus.valid = make_triples(sampler, rng, config.n_valid, config.false_negative_rate);
  corpus.test.reserve(static_cast<std::size_t>(config.n_test_contexts));
  for (int i = 0; i < config.n_test_contexts; ++i)
    corpus.test.push_back(make_test_group(config, sampler, rng));
  return corpus;
}

std::vector<PointwiseExample> to_pointwise(std::span<const PairwiseTriple> triples) {
  std::vector<PointwiseExample> out;
  out.reserve(triples.size() * 2);
  for (const auto& t : triples) {
    out.push_back({1, {t.context, t.pos_response}});
    out.push_back({0, {t.context, t.neg_response}});
  }
  return out;
}

namespace {

TokenSeq head(const TokenSeq& seq, int max_tokens) {
  const auto n = std::min(seq.size(), static_cast<std::size_t>(max_tokens));
  return TokenSeq(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n));
}

Context tail_turns(const Context& context, int max_turns, int max_tokens) {
  const auto keep = std::min(context.size(), static_cast<std::size_t>(max_turns));
  Context out;
  out.reserve(keep);
  for (auto it = context.end() - static_cast<std::ptrdiff_t>(keep); it != context.end(); ++it)
    out.push_back(head(*it, max_tokens));
  return out;
}

}  // namespace

TokenizedDialogue truncate(const TokenizedDialogue& dialogue, int max_turns,
                           int max_tokens) {
  return {tail_turns(dialogue.context, max_turns, max_tokens),
          head(dialogue.response, max_tokens)};
}

void truncate_corpus(Corpus& corpus, int max_turns, int max_tokens) {
  require(max_turns > 0 && max_tokens > 0, ErrorKind::usage,
          "truncation limits must be positive");
  for (auto* split : {&corpus.train, &corpus.valid}) {
    for (auto& t : *split) {
      t.context = tail_turns(t.context, max_turns, max_tokens);
      t.pos_response = head(t.pos_response, max_tokens);
      t.neg_response = head(t.neg_response, max_tokens);
    }
  }
  for (auto& g : corpus.test) {
    g.context = tail_turns(g.context, max_turns, max_tokens);
    for (auto& c : g.candidates) c.response = head(c.response, max_tokens);
  }
}

double noise_fraction(std::span<const PairwiseTriple> triples) {
  if (triples.empty()) return 0.0;
  std::size_t noisy = 0;
  for (const auto& t : triples) noisy += t.noise_flag.value_or(false) ? 1 : 0;
  return static_cast<double>(noisy) / static_cast<double>(triples.size());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  save_pairs(dir, "train", corpus, corpus.train);
  save_pairs(dir, "valid", corpus, corpus.valid);
  auto out = open_out(dir / "test.txt");
  out << header_line(corpus) << '\n';
  for (const auto& g : corpus.test)
    for (const auto& c : g.candidates)
      write_dialogue(out, c.label ? "1" : "0", g.context, c.response);
  if (!out) fail(ErrorKind::io, "write failed in " + dir.string());
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const RawFile train = read_raw(dir / "train.txt");
  const RawFile valid = read_raw(dir / "valid.txt");
  const RawFile test = read_raw(dir / "test.txt");

  std::optional<Header> header;
  for (const auto* f : {&train, &valid, &test})
    if (!header && f->header) header = f->header;
  if (!header || !header->vocab)
    fail(ErrorKind::data, dir.string() + ": no '#vocab=' header found");

  Corpus corpus;
  corpus.vocab_size = *header->vocab;
  require(corpus.vocab_size > 0, ErrorKind::data, "vocab size must be positive");
  corpus.n_candidates = header->candidates.value_or(10);
  require(corpus.n_candidates > 0, ErrorKind::data, "candidates must be positive");
  if (header->seed && header->noise_rate)
    corpus.generation = GenerationInfo{*header->seed, *header->noise_rate};

  corpus.train = parse_pairs(train, corpus.vocab_size, "train.txt");
  corpus.valid = parse_pairs(valid, corpus.vocab_size, "valid.txt");
  corpus.test = parse_test(test, corpus.vocab_size, corpus.n_candidates, "test.txt");
  read_noise_flags(dir / "train.noise", corpus.train);
  read_noise_flags(dir / "valid.noise", corpus.valid);
  return corpus;
}

}  // namespace coteach
