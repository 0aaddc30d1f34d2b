// tests/oracles.h

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

#ifndef BARGEIN_TESTS_ORACLES_H_
#define BARGEIN_TESTS_ORACLES_H_

// Brute-force loop versions of the model computations, written against raw
// parameter values only, for comparison with the vectorised library code.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "corpus.h"
#include "fusion.h"
#include "infusion.h"
#include "metrics.h"

namespace bargein::testing {

inline Mat LoopMeanPool(const Mat &h) {
  Mat out(1, h.cols());
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < h.rows(); ++r) s += h(r, c);
    out(0, c) = s / static_cast<double>(h.rows());
  }
  return out;
}

// y = W x for a 1 x in row vector x and an out x in matrix W.
inline Mat LoopProject(const Mat &w, const Mat &x) {
  Mat y(1, w.rows());
  for (Eigen::Index j = 0; j < w.rows(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.cols(); ++i) s += w(j, i) * x(0, i);
    y(0, j) = s;
  }
  return y;
}

inline Mat LoopEncodeContext(const Mat &table, const Mat &proj, int id) {
  Mat row(1, table.cols());
  for (Eigen::Index c = 0; c < table.cols(); ++c) row(0, c) = table(id, c);
  return LoopProject(proj, row);
}

// Class probabilities of a fusion model for one turn. The encoders' own
// hidden states are taken as given; everything after them is looped.
inline Mat LoopForward(const FusionModel &m, const DialogueTurn &t) {
  const nn::ParamStore &s = m.params();
  std::vector<double> concat;
  auto append = [&](const Mat &v) {
    for (Eigen::Index i = 0; i < v.cols(); ++i) concat.push_back(v(0, i));
  };
  const Mat hidden = m.speech_encoder().Encode(s, t.user).hidden;
  append(LoopProject(s.at(m.speech_proj()).value, LoopMeanPool(hidden)));
  if (m.config().use_prompt) {
    const auto tokens = m.prompt_encoder()->Tokenize(t.prompt_text);
    const Mat h = m.prompt_encoder()->Hidden(s, tokens);
    append(LoopProject(s.at(m.prompt_proj()).value, LoopMeanPool(h)));
  }
  if (m.config().use_context) {
    const auto &ce = *m.context_embedding();
    append(LoopEncodeContext(s.at(ce.table_index()).value, s.at(ce.proj_index()).value,
                             t.context.id));
  }
  const Mat &wc = s.at(m.fusion_w()).value, &bc = s.at(m.fusion_b()).value;
  const Mat &wy = s.at(m.head_w()).value, &by = s.at(m.head_b()).value;
  std::vector<double> rc(static_cast<size_t>(wc.rows()));
  for (Eigen::Index j = 0; j < wc.rows(); ++j) {
    double z = bc(0, j);
    for (size_t i = 0; i < concat.size(); ++i) z += wc(j, static_cast<Eigen::Index>(i)) * concat[i];
    rc[static_cast<size_t>(j)] = std::tanh(z);
  }
  double logit[2];
  for (int k = 0; k < 2; ++k) {
    logit[k] = by(0, k);
    for (size_t j = 0; j < rc.size(); ++j) logit[k] += wy(k, static_cast<Eigen::Index>(j)) * rc[j];
  }
  const double mx = std::max(logit[0], logit[1]);
  const double e0 = std::exp(logit[0] - mx), e1 = std::exp(logit[1] - mx);
  Mat p(1, 2);
  p << e0 / (e0 + e1), e1 / (e0 + e1);
  return p;
}

inline int LoopWordEndFrame(double end, double stride, int frames) {
  int f = static_cast<int>(std::floor(end / stride + 0.5));
  if (f < 0) f = 0;
  if (f > frames - 1) f = frames - 1;
  return f;
}

// Sum over words of the squared distance between the head's prediction at
// the word-end frame and the contextual word embedding.
inline double LoopInfusionLoss(const InfusionModel &m, const Utterance &u) {
  nn::Graph g;
  auto st = m.speech().ForwardStreams(g, m.params(), u.samples);
  const Mat lang = g.value(st.language);
  const Mat &w = m.params().at(m.head_w()).value;
  const Mat &b = m.params().at(m.head_b()).value;
  const std::vector<Mat> targets = ContextualWordEmbeddings(m.text(), m.params(), *u.alignment);
  double loss = 0.0;
  for (size_t k = 0; k < u.alignment->size(); ++k) {
    const int f = LoopWordEndFrame((*u.alignment)[k].end_time, m.speech().frame_stride(),
                                   static_cast<int>(lang.rows()));
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      double p = b(0, j);
      for (Eigen::Index i = 0; i < w.cols(); ++i) p += w(j, i) * lang(f, i);
      loss += (p - targets[k](0, j)) * (p - targets[k](0, j));
    }
  }
  return loss;
}

// Macro recall and true-class F1 from an explicitly assembled confusion.
inline Metrics LoopMetrics(std::span<const BargeInLabel> pred, std::span<const BargeInLabel> truth) {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == BargeInLabel::kTrue, t = truth[i] == BargeInLabel::kTrue;
    if (p && t) ++tp;
    else if (p && !t) ++fp;
    else if (!p && t) ++fn;
    else ++tn;
  }
  Metrics m;
  m.avg_recall = 100.0 * 0.5 * (tp / (tp + fn) + tn / (tn + fp));
  const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0, rec = tp / (tp + fn);
  m.f1 = prec + rec > 0 ? 100.0 * 2 * prec * rec / (prec + rec) : 0.0;
  return m;
}

inline Utterance RandomUtterance(std::mt19937_64 &rng, double seconds) {
  Utterance u;
  u.sample_rate = 16000;
  std::uniform_real_distribution<double> f(0.01, 0.4), a(0.05, 0.5);
  const double f1 = f(rng), f2 = f(rng), a1 = a(rng), a2 = a(rng);
  const size_t n = static_cast<size_t>(seconds * 16000);
  for (size_t i = 0; i < n; ++i)
    u.samples.push_back(static_cast<float>(a1 * std::sin(f1 * i) + a2 * std::sin(f2 * i)));
  return u;
}

// A small fusion model for oracle and gradient tests.
inline FusionConfig TinyFusion(uint64_t seed, bool prompt = true, bool context = true) {
  FusionConfig c;
  c.speech.hidden = 8;
  c.speech.layers = 1;
  c.speech.heads = 2;
  c.speech.ff = 12;
  c.speech.bands = 4;
  c.speech.window = 160;
  c.speech.stride = 160;
  c.text.hidden = 6;
  c.text.buckets = 64;
  c.context_dim = 3;
  c.proj_dim = 4;
  c.fusion_dim = 5;
  c.use_prompt = prompt;
  c.use_context = context;
  c.seed = seed;
  return c;
}

}  // namespace bargein::testing

#endif  // BARGEIN_TESTS_ORACLES_H_
