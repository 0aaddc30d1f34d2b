// src/encoders.cc

// Copyright 2026  The bargein Authors

// See ../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "encoders.h"

#include <cctype>
#include <cmath>
#include <numbers>

#include "error.h"

namespace bargein {

using nn::Graph;
using nn::ParamStore;
using nn::Var;

Mat MeanPool(const Mat &hidden) {
  if (hidden.rows() == 0) throw ValidationError("mean pool over an empty sequence");
  return hidden.colwise().mean();
}

Mat FanInUniform(int out, int in, std::mt19937_64 &rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-a, a);
  Mat w(out, in);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) w(r, c) = u(rng);
  return w;
}

namespace {

Mat Zeros(int r, int c) { return Mat::Zero(r, c); }
Mat Ones(int r, int c) { return Mat::Ones(r, c); }

Mat SinusoidalPositions(int frames, int width) {
  Mat p(frames, width);
  for (int t = 0; t < frames; ++t)
    for (int i = 0; i < width; ++i) {
      double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      p(t, i) = (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
    }
  return p;
}

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

}  // namespace

TransformerStack::TransformerStack(ParamStore *store, const std::string &prefix,
                                   int layers, int width, int heads, int ff,
                                   std::mt19937_64 &rng)
    : heads_(heads) {
  if (layers == 0) return;
  if (width % heads != 0)
    throw ConfigError("transformer width must be divisible by the head count");
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
    Layer L;
    L.ln1_g = store->Add(p + "ln1.gamma", Ones(1, width));
    L.ln1_b = store->Add(p + "ln1.beta", Zeros(1, width));
    L.wq = store->Add(p + "attn.wq", FanInUniform(width, width, rng));
    L.bq = store->Add(p + "attn.bq", Zeros(1, width));
    L.wk = store->Add(p + "attn.wk", FanInUniform(width, width, rng));
    L.bk = store->Add(p + "attn.bk", Zeros(1, width));
    L.wv = store->Add(p + "attn.wv", FanInUniform(width, width, rng));
    L.bv = store->Add(p + "attn.bv", Zeros(1, width));
    L.wo = store->Add(p + "attn.wo", FanInUniform(width, width, rng));
    L.bo = store->Add(p + "attn.bo", Zeros(1, width));
    L.ln2_g = store->Add(p + "ln2.gamma", Ones(1, width));
    L.ln2_b = store->Add(p + "ln2.beta", Zeros(1, width));
    L.w1 = store->Add(p + "ff.w1", FanInUniform(ff, width, rng));
    L.b1 = store->Add(p + "ff.b1", Zeros(1, ff));
    L.w2 = store->Add(p + "ff.w2", FanInUniform(width, ff, rng));
    L.b2 = store->Add(p + "ff.b2", Zeros(1, width));
    layers_.push_back(L);
  }
  lnf_g_ = store->Add(prefix + "final_ln.gamma", Ones(1, width));
  lnf_b_ = store->Add(prefix + "final_ln.beta", Zeros(1, width));
}

Var TransformerStack::Forward(Graph &g, const ParamStore &s, Var x) const {
  if (layers_.empty()) return x;
  auto P = [&](int i) { return g.Param(s, i); };
  const int width = static_cast<int>(g.value(x).cols());
  const int dh = width / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Layer &L : layers_) {
    Var h = nn::LayerNorm(g, x, P(L.ln1_g), P(L.ln1_b));
    Var q = nn::Linear(g, h, P(L.wq), P(L.bq));
    Var k = nn::Linear(g, h, P(L.wk), P(L.bk));
    Var v = nn::Linear(g, h, P(L.wv), P(L.bv));
    std::vector<Var> heads;
    for (int hd = 0; hd < heads_; ++hd) {
      Var qh = nn::SliceCols(g, q, hd * dh, dh);
      Var kh = nn::SliceCols(g, k, hd * dh, dh);
      Var vh = nn::SliceCols(g, v, hd * dh, dh);
      Var att = nn::SoftmaxRows(g, nn::Scale(g, nn::MatMulNT(g, qh, kh), scale));
      heads.push_back(nn::MatMul(g, att, vh));
    }
    Var a = heads.size() == 1 ? heads[0] : nn::ConcatCols(g, heads);
    x = nn::Add(g, x, nn::Linear(g, a, P(L.wo), P(L.bo)));
    Var f = nn::LayerNorm(g, x, P(L.ln2_g), P(L.ln2_b));
    f = nn::Gelu(g, nn::Linear(g, f, P(L.w1), P(L.b1)));
    x = nn::Add(g, x, nn::Linear(g, f, P(L.w2), P(L.b2)));
  }
  return nn::LayerNorm(g, x, P(lnf_g_), P(lnf_b_));
}

void SpeechEncoder::CheckRate(const Utterance &u) const {
  if (u.sample_rate != sample_rate())
    throw ConfigError("utterance sample rate " + std::to_string(u.sample_rate) +
                      " Hz does not match the encoder rate " +
                      std::to_string(sample_rate()) + " Hz");
}

EncoderOutput SpeechEncoder::Encode(const ParamStore &store, const Utterance &u) const {
  CheckRate(u);
  Graph g;
  Var h = Forward(g, store, u.samples);
  return EncoderOutput{g.value(h), frame_stride()};
}

nlohmann::json ToJson(const SpeechEncoderConfig &c) {
  return {{"sample_rate", c.sample_rate}, {"window", c.window}, {"stride", c.stride},
          {"bands", c.bands}, {"hidden", c.hidden}, {"layers", c.layers},
          {"heads", c.heads}, {"ff", c.ff}, {"min_freq", c.min_freq},
          {"max_freq", c.max_freq}};
}

SpeechEncoderConfig SpeechEncoderConfigFromJson(const nlohmann::json &j) {
  SpeechEncoderConfig c;
  c.sample_rate = j.at("sample_rate");
  c.window = j.at("window");
  c.stride = j.at("stride");
  c.bands = j.at("bands");
  c.hidden = j.at("hidden");
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.ff = j.at("ff");
  c.min_freq = j.at("min_freq");
  c.max_freq = j.at("max_freq");
  return c;
}

ConvTransformerEncoder::ConvTransformerEncoder(ParamStore *store, const std::string &prefix,
                                               const SpeechEncoderConfig &cfg,
                                               std::mt19937_64 &rng)
    : cfg_(cfg) {
  if (cfg.sample_rate <= 0 || cfg.window <= 0 || cfg.stride <= 0 || cfg.bands <= 0 ||
      cfg.hidden <= 0)
    throw ConfigError("speech encoder dimensions must be positive");
  const int F = cfg.bands, W = cfg.window;
  Mat kernel(2 * F, W);
  const double lo = HzToMel(cfg.min_freq), hi = HzToMel(cfg.max_freq);
  double hann_sum = 0.0;
  std::vector<double> hann(W);
  for (int t = 0; t < W; ++t) {
    hann[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / (W - 1));
    hann_sum += hann[t];
  }
  for (int j = 0; j < F; ++j) {
    double f = MelToHz(lo + (hi - lo) * (j + 0.5) / F);
    for (int t = 0; t < W; ++t) {
      double ph = 2.0 * std::numbers::pi * f * t / cfg.sample_rate;
      kernel(2 * j, t) = 2.0 * hann[t] * std::cos(ph) / hann_sum;
      kernel(2 * j + 1, t) = 2.0 * hann[t] * std::sin(ph) / hann_sum;
    }
  }
  pairing_ = Mat::Zero(2 * F, F);
  for (int j = 0; j < F; ++j) pairing_(2 * j, j) = pairing_(2 * j + 1, j) = 1.0;
  kernel_ = store->Add(prefix + "frontend.kernel", std::move(kernel));
  lift_w_ = store->Add(prefix + "frontend.lift.w", FanInUniform(cfg.hidden, F, rng));
  lift_b_ = store->Add(prefix + "frontend.lift.b", Zeros(1, cfg.hidden));
  ln_g_ = store->Add(prefix + "frontend.ln.gamma", Ones(1, cfg.hidden));
  ln_b_ = store->Add(prefix + "frontend.ln.beta", Zeros(1, cfg.hidden));
  stack_ = TransformerStack(store, prefix, cfg.layers, cfg.hidden, cfg.heads, cfg.ff, rng);
}

int ConvTransformerEncoder::FrameCount(size_t n) const {
  size_t m = (n + cfg_.stride - 1) / cfg_.stride;
  return static_cast<int>(std::max<size_t>(m, 1));
}

Var ConvTransformerEncoder::Forward(Graph &g, const ParamStore &s,
                                    std::span<const float> samples) const {
  if (samples.empty()) throw ValidationError("cannot encode an empty waveform");
  const int M = FrameCount(samples.size());
  Mat frames = Mat::Zero(M, cfg_.window);
  for (int i = 0; i < M; ++i) {
    const size_t begin = static_cast<size_t>(i) * cfg_.stride;
    const size_t end = std::min(samples.size(), begin + cfg_.window);
    for (size_t t = begin; t < end; ++t) frames(i, static_cast<Eigen::Index>(t - begin)) = samples[t];
  }
  Var x = g.Constant(std::move(frames));
  Var c = nn::Linear(g, x, g.Param(s, kernel_), Var{});
  Var e = nn::MatMul(g, nn::Square(g, c), g.Constant(pairing_));
  Var logs = nn::LogEps(g, e, 1e-6);
  Var h = nn::Linear(g, logs, g.Param(s, lift_w_), g.Param(s, lift_b_));
  h = nn::LayerNorm(g, h, g.Param(s, ln_g_), g.Param(s, ln_b_));
  h = nn::Add(g, h, g.Constant(SinusoidalPositions(M, cfg_.hidden)));
  return stack_.Forward(g, s, h);
}

LexicalSpeechEncoder::LexicalSpeechEncoder(ParamStore *store, const SpeechEncoderConfig &cfg,
                                           int language_layers, std::mt19937_64 &rng)
    : base_(store, "speech.", cfg, rng) {
  if (language_layers < 0) throw ConfigError("language_layers must be >= 0");
  language_ = TransformerStack(store, "language.", language_layers, cfg.hidden, cfg.heads,
                               cfg.ff, rng);
}

LexicalSpeechEncoder::Streams LexicalSpeechEncoder::ForwardStreams(
    Graph &g, const ParamStore &s, std::span<const float> samples) const {
  Var enc = base_.Forward(g, s, samples);
  Var lang = language_.Forward(g, s, enc);
  return {enc, lang};
}

Var LexicalSpeechEncoder::Forward(Graph &g, const ParamStore &s,
                                  std::span<const float> samples) const {
  Streams st = ForwardStreams(g, s, samples);
  if (language_.layers() == 0) return st.encoder;
  return nn::ConcatCols(g, {st.language, st.encoder});
}

Var ExternalSpeechAdapter::Forward(Graph &g, const ParamStore &,
                                   std::span<const float> samples) const {
  EncoderOutput out = fn_(samples, rate_);
  if (out.hidden.cols() != width_)
    throw ValidationError("external encoder returned width " +
                          std::to_string(out.hidden.cols()) + ", expected " +
                          std::to_string(width_));
  if (out.hidden.rows() == 0) throw ValidationError("external encoder returned no frames");
  return g.Constant(std::move(out.hidden));
}

nlohmann::json ToJson(const TextEncoderConfig &c) {
  return {{"buckets", c.buckets}, {"hidden", c.hidden}, {"window", c.window},
          {"context_weight", c.context_weight}, {"piece_len", c.piece_len}};
}

TextEncoderConfig TextEncoderConfigFromJson(const nlohmann::json &j) {
  TextEncoderConfig c;
  c.buckets = j.at("buckets");
  c.hidden = j.at("hidden");
  c.window = j.at("window");
  c.context_weight = j.at("context_weight");
  c.piece_len = j.at("piece_len");
  return c;
}

HashTextEncoder::HashTextEncoder(ParamStore *store, const std::string &prefix,
                                 const TextEncoderConfig &cfg, std::mt19937_64 &rng)
    : cfg_(cfg) {
  if (cfg.buckets <= 0 || cfg.hidden <= 0 || cfg.piece_len <= 0 || cfg.window < 0)
    throw ConfigError("text encoder dimensions must be positive");
  std::normal_distribution<double> n(0.0, 1.0);
  Mat table(cfg.buckets, cfg.hidden);
  for (int r = 0; r < cfg.buckets; ++r)
    for (int c = 0; c < cfg.hidden; ++c) table(r, c) = n(rng);
  table_ = store->Add(prefix + "table", std::move(table), /*trainable=*/false);
}

namespace {

bool IsSeparator(unsigned char c) {
  return c < 0x80 && !std::isalnum(c) && c != '\'';
}

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<Token> HashTextEncoder::Tokenize(std::string_view text) const {
  std::vector<Token> out;
  int word = 0;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSeparator(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    size_t j = i;
    while (j < text.size() && !IsSeparator(static_cast<unsigned char>(text[j]))) ++j;
    // Split the word into pieces of piece_len code points.
    std::string w;
    for (size_t k = i; k < j; ++k)
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(text[k])));
    size_t p = 0;
    bool first = true;
    while (p < w.size()) {
      size_t q = p;
      for (int cp = 0; cp < cfg_.piece_len && q < w.size(); ++cp) {
        ++q;
        while (q < w.size() && (static_cast<unsigned char>(w[q]) & 0xC0) == 0x80) ++q;
      }
      std::string piece = (first ? "" : "##") + w.substr(p, q - p);
      int id = static_cast<int>(Fnv1a(piece) % static_cast<uint64_t>(cfg_.buckets));
      out.push_back({id, std::move(piece), word});
      first = false;
      p = q;
    }
    ++word;
    i = j;
  }
  return out;
}

Mat HashTextEncoder::Hidden(const ParamStore &store, const std::vector<Token> &tokens) const {
  const Mat &table = store.at(table_).value;
  const int n = static_cast<int>(tokens.size());
  Mat e(n, cfg_.hidden);
  for (int i = 0; i < n; ++i) e.row(i) = table.row(tokens[i].id);
  Mat h = e;
  if (cfg_.window > 0 && cfg_.context_weight != 0.0) {
    for (int i = 0; i < n; ++i) {
      int lo = std::max(0, i - cfg_.window), hi = std::min(n - 1, i + cfg_.window);
      if (hi - lo < 1) continue;
      Mat ctx = (e.middleRows(lo, hi - lo + 1).colwise().sum() - e.row(i)) /
                static_cast<double>(hi - lo);
      h.row(i) += cfg_.context_weight * ctx;
    }
  }
  return h;
}

ContextEmbedding::ContextEmbedding(ParamStore *store, const std::string &prefix, int labels,
                                   int dim, int proj, std::mt19937_64 &rng)
    : labels_(labels) {
  if (labels <= 0 || dim <= 0 || proj <= 0)
    throw ConfigError("context embedding dimensions must be positive");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat table(labels, dim);
  for (int r = 0; r < labels; ++r)
    for (int c = 0; c < dim; ++c) table(r, c) = u(rng);
  table_ = store->Add(prefix + "table", std::move(table));
  proj_ = store->Add(prefix + "proj", FanInUniform(proj, dim, rng));
}

Var ContextEmbedding::Forward(Graph &g, const ParamStore &s,
                              const DialogueContextLabel &label) const {
  if (label.id < 0 || label.id >= labels_)
    throw ValidationError("unknown dialogue context id " + std::to_string(label.id));
  Var row = nn::GatherRows(g, g.Param(s, table_), {label.id});
  return nn::Linear(g, row, g.Param(s, proj_), Var{});
}

SpeechBranchResult EncodeSpeech(const SpeechEncoder &enc, const ParamStore &store,
                                int projection, const Utterance &u) {
  SpeechBranchResult r;
  r.out = enc.Encode(store, u);
  r.r_x = MeanPool(r.out.hidden) * store.at(projection).value.transpose();
  return r;
}

Mat PooledPrompt(const PromptEncoder &enc, const ParamStore &store, std::string_view text) {
  if (text.empty()) throw ValidationError("prompt text is empty");
  std::vector<Token> tokens = enc.Tokenize(text);
  if (tokens.empty()) throw ValidationError("prompt text has no tokens");
  return MeanPool(enc.Hidden(store, tokens));
}

Mat EncodePrompt(const PromptEncoder &enc, const ParamStore &store, int projection,
                 std::string_view text) {
  return PooledPrompt(enc, store, text) * store.at(projection).value.transpose();
}

Mat EncodeContext(const ContextEmbedding &ce, const ParamStore &store,
                  const DialogueContextLabel &label) {
  Graph g;
  return g.value(ce.Forward(g, store, label));
}

}  // namespace bargein
