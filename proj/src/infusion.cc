// src/infusion.cc

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

#include "infusion.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "error.h"
#include "rng.h"
#include "training.h"

namespace bargein {

using nn::Graph;
using nn::Var;

nlohmann::json ToJson(const InfusionConfig &c) {
  return {{"speech", ToJson(c.speech)},
          {"language_layers", c.language_layers},
          {"text", ToJson(c.text)},
          {"seed", c.seed}};
}

InfusionConfig InfusionConfigFromJson(const nlohmann::json &j) {
  InfusionConfig c;
  c.speech = SpeechEncoderConfigFromJson(j.at("speech"));
  c.language_layers = j.at("language_layers");
  c.text = TextEncoderConfigFromJson(j.at("text"));
  c.seed = j.at("seed");
  return c;
}

void PretrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (threads <= 0) throw ConfigError("threads must be positive");
}

int WordEndFrame(double end_time, double frame_stride, int num_frames) {
  const double f = std::floor(end_time / frame_stride + 0.5);
  if (!(f > 0.0)) return 0;
  if (f >= num_frames - 1) return num_frames - 1;
  return static_cast<int>(f);
}

Mat WordEmbedding(const PromptEncoder &enc, const nn::ParamStore &store, std::string_view word) {
  std::vector<Token> tokens = enc.Tokenize(word);
  if (tokens.empty())
    throw ValidationError("word '" + std::string(word) + "' has no subword pieces");
  return MeanPool(enc.Hidden(store, tokens));
}

std::vector<Mat> ContextualWordEmbeddings(const PromptEncoder &enc, const nn::ParamStore &store,
                                          const std::vector<WordAlignment> &words) {
  // The transcript follows time order, whatever the order of the list.
  std::vector<size_t> order(words.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::tie(words[a].start_time, words[a].end_time) <
           std::tie(words[b].start_time, words[b].end_time);
  });
  std::vector<Token> tokens;
  for (size_t w : order) {
    std::vector<Token> pieces = enc.Tokenize(words[w].word);
    if (pieces.empty())
      throw ValidationError("word '" + words[w].word + "' has no subword pieces");
    for (Token &t : pieces) {
      t.word = static_cast<int>(w);
      tokens.push_back(std::move(t));
    }
  }
  const Mat hidden = enc.Hidden(store, tokens);
  std::vector<Mat> out(words.size(), Mat::Zero(1, enc.hidden_width()));
  std::vector<int> count(words.size(), 0);
  for (size_t i = 0; i < tokens.size(); ++i) {
    out[tokens[i].word] += hidden.row(static_cast<Eigen::Index>(i));
    ++count[tokens[i].word];
  }
  for (size_t w = 0; w < words.size(); ++w) out[w] /= count[w];
  return out;
}

namespace {

std::mt19937_64 SeedRng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

InfusionModel::InfusionModel(const InfusionConfig &cfg)
    : cfg_(cfg),
      speech_([&]() -> LexicalSpeechEncoder {
        auto rng = SeedRng(cfg.seed);
        return LexicalSpeechEncoder(&store_, cfg.speech, cfg.language_layers, rng);
      }()),
      text_([&]() -> HashTextEncoder {
        auto rng = SeedRng(MixSeed(cfg.seed, 0x7e47));
        return HashTextEncoder(&store_, "text.", cfg.text, rng);
      }()) {
  auto rng = SeedRng(MixSeed(cfg.seed, 0x4ead));
  head_w_ = store_.Add("infusion.head.w", FanInUniform(cfg.text.hidden, cfg.speech.hidden, rng));
  head_b_ = store_.Add("infusion.head.b", Mat::Zero(1, cfg.text.hidden));
}

std::vector<WordTarget> InfusionModel::Targets(const Utterance &u) const {
  if (!u.aligned()) throw ValidationError("utterance has no alignment");
  const std::vector<WordAlignment> &words = *u.alignment;
  std::vector<Mat> embeds = ContextualWordEmbeddings(text_, store_, words);
  const int frames = speech_.FrameCount(u.samples.size());
  std::vector<WordTarget> out;
  for (size_t w = 0; w < words.size(); ++w)
    out.push_back({words[w].word, std::move(embeds[w]),
                   WordEndFrame(words[w].end_time, speech_.frame_stride(), frames)});
  return out;
}

Var InfusionModel::UtteranceLoss(Graph &g, const Utterance &u) const {
  speech_.CheckRate(u);
  std::vector<WordTarget> targets = Targets(u);
  std::vector<int> rows;
  Mat target(static_cast<Eigen::Index>(targets.size()), cfg_.text.hidden);
  for (size_t w = 0; w < targets.size(); ++w) {
    rows.push_back(targets[w].end_frame);
    target.row(static_cast<Eigen::Index>(w)) = targets[w].embed;
  }
  LexicalSpeechEncoder::Streams st = speech_.ForwardStreams(g, store_, u.samples);
  Var at_ends = nn::GatherRows(g, st.language, std::move(rows));
  Var pred = nn::Linear(g, at_ends, g.Param(store_, head_w_), g.Param(store_, head_b_));
  return nn::SumSquares(g, nn::Sub(g, pred, g.Constant(std::move(target))));
}

double InfusionModel::Loss(const Utterance &u) const {
  Graph g;
  return g.value(UtteranceLoss(g, u))(0, 0);
}

EncoderOutput InfusionModel::Represent(const Utterance &u) const {
  return speech_.Encode(store_, u);
}

PretrainResult Pretrain(InfusionModel *model, const Corpus &corpus,
                        std::span<const size_t> turns, const PretrainConfig &cfg) {
  cfg.Validate();
  PretrainResult result;
  std::vector<size_t> aligned;
  for (size_t i : turns) {
    if (corpus.turns.at(i).user.aligned())
      aligned.push_back(i);
    else
      ++result.skipped_unaligned;
  }
  if (aligned.empty()) throw ConfigError("no aligned utterances to pretrain on");
  if (cfg.steps == 0) return result;

  nn::ParamStore &store = model->params();
  store.SetTrainable("text.", false);
  if (model->language_layers() > 0) store.SetTrainable("speech.", !cfg.freeze_speech);
  auto optimizer = nn::MakeOptimizer(cfg.optimizer, cfg.learning_rate);
  std::mt19937_64 order_rng(MixSeed(cfg.seed, 0x1f05));
  std::vector<size_t> order = aligned;
  size_t cursor = order.size();
  std::vector<size_t> batch(cfg.batch_size);
  for (long step = 0; step < cfg.steps; ++step) {
    for (size_t &b : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      b = order[cursor++];
    }
    std::vector<nn::GradBuffer> grads(batch.size(), nn::GradBuffer(store));
    std::vector<double> losses(batch.size());
    ParallelFor(batch.size(), cfg.threads, [&](size_t k) {
      Graph g(&grads[k]);
      Var loss = model->UtteranceLoss(g, corpus.turns[batch[k]].user);
      losses[k] = g.value(loss)(0, 0);
      g.Backward(loss);
    });
    nn::GradBuffer total(store);
    double loss = 0.0;
    for (size_t k = 0; k < batch.size(); ++k) {
      total.AddFrom(grads[k]);
      loss += losses[k];
    }
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "non-finite infusion loss at step " << step;
      throw NumericError(os.str());
    }
    total.Scale(1.0 / static_cast<double>(batch.size()));
    if (cfg.clip_norm > 0.0) nn::ClipGlobalNorm(&total, cfg.clip_norm);
    optimizer->Step(&store, total);
    result.loss_curve.push_back(loss);
  }
  store.SetTrainable("speech.", true);
  return result;
}

std::vector<double> SmoothCurve(std::span<const double> curve, int window) {
  if (window <= 0) throw ConfigError("smoothing window must be positive");
  std::vector<double> out(curve.size());
  double sum = 0.0;
  for (size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i];
    if (i >= static_cast<size_t>(window)) sum -= curve[i - window];
    out[i] = sum / static_cast<double>(std::min<size_t>(i + 1, window));
  }
  return out;
}

std::vector<ProbeExample> WordEndFeatures(const EncoderOutput &rep,
                                          const std::vector<WordAlignment> &words,
                                          const std::vector<std::string> &vocab) {
  std::vector<ProbeExample> out;
  const int frames = static_cast<int>(rep.hidden.rows());
  for (const WordAlignment &w : words) {
    auto it = std::find(vocab.begin(), vocab.end(), w.word);
    if (it == vocab.end()) continue;
    const int f = WordEndFrame(w.end_time, rep.frame_stride, frames);
    out.push_back({rep.hidden.row(f), static_cast<int>(it - vocab.begin())});
  }
  return out;
}

double LinearProbeAccuracy(const std::vector<ProbeExample> &train,
                           const std::vector<ProbeExample> &test, int num_classes,
                           const ProbeConfig &cfg) {
  if (train.empty() || test.empty()) throw ValidationError("probe needs train and test examples");
  const Eigen::Index d = train[0].feature.cols();
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  auto stack = [&](const std::vector<ProbeExample> &ex) {
    Mat x(static_cast<Eigen::Index>(ex.size()), d);
    for (size_t i = 0; i < ex.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = ex[i].feature;
    return x;
  };
  Mat x = stack(train);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().sum() /
                           static_cast<double>(n)).sqrt();
  for (Eigen::Index c = 0; c < d; ++c)
    if (sd(c) < 1e-12) sd(c) = 1.0;
  auto normalize = [&](Mat m) {
    return Mat(((m.rowwise() - mean).array().rowwise() / sd.array()).matrix());
  };
  x = normalize(std::move(x));
  Mat y = Mat::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) y(i, train[i].label) = 1.0;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  Mat w = Mat::NullaryExpr(d, num_classes, [&] { return init(rng); });
  Mat b = Mat::Zero(1, num_classes);
  Mat mw = Mat::Zero(d, num_classes), vw = mw, mb = Mat::Zero(1, num_classes), vb = mb;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= cfg.epochs; ++t) {
    Mat logits = (x * w).rowwise() + b.row(0);
    for (Eigen::Index i = 0; i < n; ++i) logits.row(i) = nn::Softmax(logits.row(i));
    const Mat delta = (logits - y) / static_cast<double>(n);
    const Mat gw = x.transpose() * delta + cfg.l2 * w;
    const Mat gb = delta.colwise().sum();
    mw = b1 * mw + (1 - b1) * gw;
    vw = b2 * vw + (1 - b2) * gw.cwiseProduct(gw);
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb.cwiseProduct(gb);
    const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
    w.array() -= cfg.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
    b.array() -= cfg.learning_rate * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
  }
  const Mat xt = normalize(stack(test));
  const Mat scores = (xt * w).rowwise() + b.row(0);
  size_t correct = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    Eigen::Index arg;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    if (arg == test[i].label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace bargein
