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

#include "coteach/matcher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coteach/error.hpp"
#include "coteach/rng.hpp"

namespace coteach {

const char* to_string(MatcherKind kind) {
  switch (kind) {
    case MatcherKind::mean_embedding_bilinear: return "mean-embedding-bilinear";
    case MatcherKind::interaction_mlp: return "interaction-mlp";
  }
  return "unknown";
}

MatcherKind parse_matcher_kind(const std::string& text) {
  if (text == "mean-embedding-bilinear" || text == "bilinear")
    return MatcherKind::mean_embedding_bilinear;
  if (text == "interaction-mlp" || text == "mlp") return MatcherKind::interaction_mlp;
  fail(ErrorKind::usage, "unknown matcher kind '" + text + "'");
}

void MatcherSpec::validate() const {
  require(vocab_size > 0, ErrorKind::usage, "matcher vocab_size must be positive");
  require(embedding_dim > 0, ErrorKind::usage, "matcher embedding_dim must be positive");
  require(kind != MatcherKind::interaction_mlp || hidden_dim > 0, ErrorKind::usage,
          "matcher hidden_dim must be positive");
}

ParamLayout ParamLayout::of(const MatcherSpec& spec) {
  const auto v = static_cast<std::size_t>(spec.vocab_size);
  const auto d = static_cast<std::size_t>(spec.embedding_dim);
  const auto h = static_cast<std::size_t>(spec.hidden_dim);
  ParamLayout l;
  l.embedding = 0;
  std::size_t next = v * d;
  if (spec.kind == MatcherKind::mean_embedding_bilinear) {
    l.w = next;
    l.b = l.w + d * d;
    l.total = l.b + 1;
    l.w1 = l.b1 = l.w2 = l.b2 = l.total;
  } else {
    l.w1 = next;
    l.b1 = l.w1 + h * 3 * d;
    l.w2 = l.b1 + h;
    l.b2 = l.w2 + h;
    l.total = l.b2 + 1;
    l.w = l.b = l.total;
  }
  return l;
}

std::size_t MatcherSpec::param_count() const { return ParamLayout::of(*this).total; }

ModelState init_params(const MatcherSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto layout = ParamLayout::of(spec);
  ModelState model{spec, std::vector<double>(layout.total, 0.0)};
  Rng rng = Rng::for_concern(seed, "init");
  auto fill = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) model.params[i] = rng.uniform(-0.1, 0.1);
  };
  if (spec.kind == MatcherKind::mean_embedding_bilinear) {
    fill(layout.embedding, layout.b);  // E then W
  } else {
    fill(layout.embedding, layout.b1);  // E then W1
    fill(layout.w2, layout.b2);
  }
  return model;
}

namespace {

struct Dims {
  std::size_t d;
  std::size_t h;
  ParamLayout layout;

  explicit Dims(const MatcherSpec& spec)
      : d(static_cast<std::size_t>(spec.embedding_dim)),
        h(static_cast<std::size_t>(spec.hidden_dim)),
        layout(ParamLayout::of(spec)) {}
};

void check_tokens(std::span<const Token> tokens, int vocab_size) {
  if (tokens.empty()) fail(ErrorKind::data, "empty token sequence");
  for (Token t : tokens)
    if (t < 0 || t >= vocab_size)
      fail(ErrorKind::data, "token id " + std::to_string(t) +
                                " out of range for vocab size " +
                                std::to_string(vocab_size));
}

// out += scale * mean_t E[t]
template <class Real>
void add_mean_embedding(const double* emb, std::size_t d, std::span<const Token> tokens,
                        Real scale, Real* out) {
  const Real w = scale / static_cast<Real>(tokens.size());
  for (Token t : tokens) {
    const double* row = emb + static_cast<std::size_t>(t) * d;
    for (std::size_t k = 0; k < d; ++k) out[k] += w * row[k];
  }
}

void scatter_mean_embedding(double* grad_emb, std::size_t d,
                            std::span<const Token> tokens, double scale,
                            const double* upstream) {
  const double w = scale / static_cast<double>(tokens.size());
  for (Token t : tokens) {
    double* row = grad_emb + static_cast<std::size_t>(t) * d;
    for (std::size_t k = 0; k < d; ++k) row[k] += w * upstream[k];
  }
}

template <class Real>
struct BasicForward {
  std::vector<Real> u, v;
  std::vector<Real> f, hidden;  // interaction-mlp only
  Real z = 0;
  Real s = 0.5;
};

using Forward = BasicForward<double>;

template <class Real>
Real sigmoid_of(Real z) {
  const Real c = std::clamp(z, Real(-30), Real(30));
  return Real(1) / (Real(1) + std::exp(-c));
}

// Double instantiation drives training; long double serves the gradient checker.
template <class Real>
BasicForward<Real> forward(const ModelState& model, const Dims& dims,
                           std::span<const TokenSeq> context, std::span<const Token> response) {
  if (context.empty()) fail(ErrorKind::data, "empty context");
  const int vocab = model.spec.vocab_size;
  for (const auto& utt : context) check_tokens(utt, vocab);
  check_tokens(response, vocab);

  const std::size_t d = dims.d;
  const double* p = model.params.data();
  const double* emb = p + dims.layout.embedding;
  BasicForward<Real> fw;
  fw.u.assign(d, Real(0));
  fw.v.assign(d, Real(0));
  const Real turn_scale = Real(1) / static_cast<Real>(context.size());
  for (const auto& utt : context) add_mean_embedding(emb, d, utt, turn_scale, fw.u.data());
  add_mean_embedding(emb, d, response, Real(1), fw.v.data());

  if (model.spec.kind == MatcherKind::mean_embedding_bilinear) {
    const double* w = p + dims.layout.w;
    Real z = p[dims.layout.b];
    for (std::size_t i = 0; i < d; ++i) {
      Real wv = 0;
      for (std::size_t j = 0; j < d; ++j) wv += w[i * d + j] * fw.v[j];
      z += fw.u[i] * wv;
    }
    fw.z = z;
  } else {
    const std::size_t h = dims.h;
    fw.f.resize(3 * d);
    for (std::size_t k = 0; k < d; ++k) {
      fw.f[k] = fw.u[k];
      fw.f[d + k] = fw.v[k];
      fw.f[2 * d + k] = fw.u[k] * fw.v[k];
    }
    const double* w1 = p + dims.layout.w1;
    const double* b1 = p + dims.layout.b1;
    const double* w2 = p + dims.layout.w2;
    fw.hidden.resize(h);
    Real z = p[dims.layout.b2];
    for (std::size_t r = 0; r < h; ++r) {
      Real a = b1[r];
      const double* row = w1 + r * 3 * d;
      for (std::size_t k = 0; k < 3 * d; ++k) a += row[k] * fw.f[k];
      fw.hidden[r] = std::tanh(a);
      z += w2[r] * fw.hidden[r];
    }
    fw.z = z;
  }
  fw.s = sigmoid_of(fw.z);
  return fw;
}

// Accumulates grad_z * dz/dparams into grad.
void backward(const ModelState& model, const Dims& dims, const Forward& fw,
              std::span<const TokenSeq> context, std::span<const Token> response,
              double grad_z, std::vector<double>& grad) {
  if (grad_z == 0.0) return;
  const std::size_t d = dims.d;
  const double* p = model.params.data();
  double* g = grad.data();
  std::vector<double> du(d, 0.0), dv(d, 0.0);

  if (model.spec.kind == MatcherKind::mean_embedding_bilinear) {
    const double* w = p + dims.layout.w;
    double* gw = g + dims.layout.w;
    g[dims.layout.b] += grad_z;
    for (std::size_t i = 0; i < d; ++i) {
      const double gu = grad_z * fw.u[i];
      for (std::size_t j = 0; j < d; ++j) {
        gw[i * d + j] += gu * fw.v[j];
        du[i] += grad_z * w[i * d + j] * fw.v[j];
        dv[j] += gu * w[i * d + j];
      }
    }
  } else {
    const std::size_t h = dims.h;
    const double* w1 = p + dims.layout.w1;
    const double* w2 = p + dims.layout.w2;
    double* gw1 = g + dims.layout.w1;
    double* gb1 = g + dims.layout.b1;
    double* gw2 = g + dims.layout.w2;
    g[dims.layout.b2] += grad_z;
    std::vector<double> df(3 * d, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      gw2[r] += grad_z * fw.hidden[r];
      const double ga = grad_z * w2[r] * (1.0 - fw.hidden[r] * fw.hidden[r]);
      gb1[r] += ga;
      const double* row = w1 + r * 3 * d;
      double* grow = gw1 + r * 3 * d;
      for (std::size_t k = 0; k < 3 * d; ++k) {
        grow[k] += ga * fw.f[k];
        df[k] += ga * row[k];
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      du[k] = df[k] + df[2 * d + k] * fw.v[k];
      dv[k] = df[d + k] + df[2 * d + k] * fw.u[k];
    }
  }

  double* gemb = g + dims.layout.embedding;
  const double turn_scale = 1.0 / static_cast<double>(context.size());
  for (const auto& utt : context) scatter_mean_embedding(gemb, d, utt, turn_scale, du.data());
  scatter_mean_embedding(gemb, d, response, 1.0, dv.data());
}

// ds/dz, zero where the logit clamp is active.
double dsigmoid(const Forward& fw) {
  if (fw.z < -30.0 || fw.z > 30.0) return 0.0;
  return fw.s * (1.0 - fw.s);
}

double evaluate(const ModelState& model, const LearningProtocol& protocol,
                std::vector<double>* grad) {
  protocol.validate();
  require(model.params.size() == model.spec.param_count(), ErrorKind::data,
          "parameter vector does not match matcher layout");
  const Dims dims(model.spec);
  double total = 0.0;
  if (protocol.loss_kind == LossKind::hinge_with_margin) {
    for (const auto& inst : protocol.pairwise) {
      const auto& t = inst.triple;
      const Forward pos = forward<double>(model, dims, t.context, t.pos_response);
      const Forward neg = forward<double>(model, dims, t.context, t.neg_response);
      const double l = hinge_with_margin(pos.s, neg.s, inst.margin);
      total += l;
      if (grad && l > 0.0) {
        backward(model, dims, pos, t.context, t.pos_response, -dsigmoid(pos), *grad);
        backward(model, dims, neg, t.context, t.neg_response, dsigmoid(neg), *grad);
      }
    }
  } else {
    for (const auto& inst : protocol.pointwise) {
      const auto& ex = inst.example;
      const Forward fw = forward<double>(model, dims, ex.dialogue.context, ex.dialogue.response);
      total += inst.weight * cross_entropy(ex.label, fw.s);
      if (grad && inst.weight != 0.0) {
        const double gz = inst.weight * cross_entropy_dlogit(ex.label, fw.s);
        backward(model, dims, fw, ex.dialogue.context, ex.dialogue.response, gz, *grad);
      }
    }
  }
  return total;
}

// Loss only, accumulated in extended precision. The clamps match the double path.
long double extended_loss(const ModelState& model, const LearningProtocol& protocol) {
  const Dims dims(model.spec);
  constexpr long double eps = kProbEps;
  auto ce = [&](int y, long double s) {
    const long double p = std::clamp(s, eps, 1.0L - eps);
    return y == 1 ? -std::log(p) : -std::log1p(-p);
  };
  long double total = 0;
  if (protocol.loss_kind == LossKind::hinge_with_margin) {
    for (const auto& inst : protocol.pairwise) {
      const auto& t = inst.triple;
      const auto pos = forward<long double>(model, dims, t.context, t.pos_response);
      const auto neg = forward<long double>(model, dims, t.context, t.neg_response);
      total += std::max(0.0L, inst.margin - pos.s + neg.s);
    }
  } else {
    for (const auto& inst : protocol.pointwise) {
      const auto& ex = inst.example;
      const auto fw = forward<long double>(model, dims, ex.dialogue.context, ex.dialogue.response);
      total += inst.weight * ce(ex.label, fw.s);
    }
  }
  return total;
}

}  // namespace

double sigmoid(double z) { return sigmoid_of(z); }

double score(const ModelState& model, std::span<const TokenSeq> context,
             std::span<const Token> response) {
  require(model.params.size() == model.spec.param_count(), ErrorKind::data,
          "parameter vector does not match matcher layout");
  return forward<double>(model, Dims(model.spec), context, response).s;
}

LossAndGrad loss_and_grad(const ModelState& model, const LearningProtocol& protocol) {
  LossAndGrad out;
  out.grad.assign(model.params.size(), 0.0);
  out.loss = evaluate(model, protocol, &out.grad);
  return out;
}

double protocol_loss(const ModelState& model, const LearningProtocol& protocol) {
  return evaluate(model, protocol, nullptr);
}

double finite_diff_check(const ModelState& model, const LearningProtocol& protocol,
                         double step, std::span<const double> analytic) {
  require(step > 0.0, ErrorKind::usage, "finite-difference step must be positive");
  require(analytic.size() == model.params.size(), ErrorKind::usage,
          "gradient length does not match parameter count");
  protocol.validate();
  require(model.params.size() == model.spec.param_count(), ErrorKind::data,
          "parameter vector does not match matcher layout");
  // J is evaluated in extended precision so that roundoff in the loss does
  // not swamp small gradient coordinates. The divisor is the step actually
  // realised in double arithmetic.
  ModelState probe = model;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.params.size(); ++i) {
    const double saved = probe.params[i];
    const double hi = saved + step;
    const double lo = saved - step;
    probe.params[i] = hi;
    const long double up = extended_loss(probe, protocol);
    probe.params[i] = lo;
    const long double down = extended_loss(probe, protocol);
    probe.params[i] = saved;
    const double fd = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
  }
  return worst;
}

double finite_diff_check(const ModelState& model, const LearningProtocol& protocol,
                         double step) {
  const auto lg = loss_and_grad(model, protocol);
  return finite_diff_check(model, protocol, step, lg.grad);
}

namespace {

constexpr const char* kCheckpointMagic = "coteach-checkpoint";

}  // namespace

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  const auto& spec = model.spec;
  require(model.params.size() == spec.param_count(), ErrorKind::data,
          "parameter vector does not match matcher layout");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write checkpoint " + path.string());
  out << kCheckpointMagic << " kind=" << to_string(spec.kind)
      << " vocab=" << spec.vocab_size << " d=" << spec.embedding_dim
      << " h=" << spec.hidden_dim << " params=" << model.params.size() << '\n';
  std::vector<unsigned char> bytes(model.params.size() * 8);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(model.params[i]);
    for (int b = 0; b < 8; ++b)
      bytes[i * 8 + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write failed for checkpoint " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "missing checkpoint " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != kCheckpointMagic)
    fail(ErrorKind::data, path.string() + ": not a checkpoint file");

  MatcherSpec spec;
  std::size_t count = 0;
  bool have_kind = false, have_vocab = false, have_count = false;
  std::string item;
  while (hs >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorKind::data, path.string() + ": bad header");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    try {
      if (key == "kind") { spec.kind = parse_matcher_kind(value); have_kind = true; }
      else if (key == "vocab") { spec.vocab_size = std::stoi(value); have_vocab = true; }
      else if (key == "d") spec.embedding_dim = std::stoi(value);
      else if (key == "h") spec.hidden_dim = std::stoi(value);
      else if (key == "params") { count = std::stoull(value); have_count = true; }
    } catch (const std::logic_error&) {
      fail(ErrorKind::data, path.string() + ": bad header value '" + item + "'");
    }
  }
  if (!have_kind || !have_vocab || !have_count)
    fail(ErrorKind::data, path.string() + ": incomplete checkpoint header");
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorKind::data, path.string() + ": " + e.what());
  }
  if (count != spec.param_count())
    fail(ErrorKind::data, path.string() + ": parameter count does not match layout");

  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    fail(ErrorKind::data, path.string() + ": truncated parameter data");
  ModelState model{spec, std::vector<double>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    model.params[i] = std::bit_cast<double>(bits);
    if (!std::isfinite(model.params[i]))
      fail(ErrorKind::data, path.string() + ": non-finite parameter");
  }
  return model;
}

}  // namespace coteach
