// tests/test_infusion.cc

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

#include <cmath>
#include <random>

#include "datagen.h"
#include "doctest.h"
#include "error.h"
#include "gradcheck.h"
#include "infusion.h"

using namespace bargein;
using bargein::testing::GradCheck;

namespace {

InfusionConfig Tiny(int layers) {
  InfusionConfig c;
  c.speech.hidden = 8;
  c.speech.layers = 1;
  c.speech.heads = 2;
  c.speech.ff = 12;
  c.speech.bands = 4;
  c.speech.window = 160;
  c.speech.stride = 160;
  c.text.hidden = 6;
  c.text.buckets = 64;
  c.language_layers = layers;
  c.seed = 5;
  return c;
}

Utterance ToneUtterance(double seconds, std::vector<WordAlignment> words) {
  Utterance u;
  u.sample_rate = 16000;
  const size_t n = static_cast<size_t>(seconds * 16000);
  for (size_t i = 0; i < n; ++i)
    u.samples.push_back(static_cast<float>(0.3 * std::sin(0.07 * i) + 0.1 * std::sin(0.31 * i)));
  u.alignment = std::move(words);
  return u;
}

// Identical vector for every piece.
class ConstantEncoder : public PromptEncoder {
 public:
  std::vector<Token> Tokenize(std::string_view text) const override {
    std::vector<Token> out;
    for (size_t i = 0; i < text.size(); i += 2) out.push_back({0, std::string(text.substr(i, 2)), 0});
    return out;
  }
  int hidden_width() const override { return 3; }
  Mat Hidden(const nn::ParamStore &, const std::vector<Token> &tokens) const override {
    Mat m(static_cast<Eigen::Index>(tokens.size()), 3);
    for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) << 1.5, -2.0, 0.25;
    return m;
  }
};

}  // namespace

TEST_CASE("word end frame rounding and clamping") {
  CHECK(WordEndFrame(0.0, 0.02, 120) == 0);
  CHECK(WordEndFrame(1.24, 0.02, 120) == 62);
  CHECK(WordEndFrame(5.0, 0.02, 120) == 119);
  CHECK(WordEndFrame(0.03, 0.02, 120) == 2);  // 1.5 rounds up
  CHECK(WordEndFrame(0.029, 0.02, 120) == 1);
  CHECK(WordEndFrame(0.5, 0.02, 1) == 0);
  int prev = 0;
  for (int i = 0; i <= 3000; ++i) {
    const int f = WordEndFrame(i * 0.001, 0.02, 120);
    CHECK(f >= prev);
    CHECK(f >= 0);
    CHECK(f < 120);
    prev = f;
  }
}

TEST_CASE("word embedding is the mean of subword states") {
  InfusionModel m(Tiny(0));
  const HashTextEncoder &text = m.text();
  const nn::ParamStore &s = m.params();

  SUBCASE("single piece") {
    auto tokens = text.Tokenize("ab");
    REQUIRE(tokens.size() == 1);
    Mat e = WordEmbedding(text, s, "ab");
    CHECK((e - text.Hidden(s, tokens)).norm() == 0.0);
  }
  SUBCASE("identical pieces") {
    ConstantEncoder c;
    Mat e = WordEmbedding(c, s, "abcd");
    CHECK(e(0, 0) == 1.5);
    CHECK(e(0, 1) == -2.0);
    CHECK(e(0, 2) == 0.25);
  }
  SUBCASE("three pieces against a loop") {
    auto tokens = text.Tokenize("abcdefghi");
    REQUIRE(tokens.size() == 3);
    Mat h = text.Hidden(s, tokens);
    Mat e = WordEmbedding(text, s, "abcdefghi");
    for (int c = 0; c < h.cols(); ++c) {
      double sum = 0.0;
      for (int r = 0; r < 3; ++r) sum += h(r, c);
      CHECK(std::abs(e(0, c) - sum / 3.0) < 1e-12);
    }
  }
  SUBCASE("empty word") {
    CHECK_THROWS_AS(WordEmbedding(text, s, ""), ValidationError);
    CHECK_THROWS_AS(WordEmbedding(text, s, "--"), ValidationError);
  }
}

TEST_CASE("contextual targets use the whole transcript") {
  InfusionModel m(Tiny(0));
  const HashTextEncoder &text = m.text();
  std::vector<WordAlignment> words = {{"badego", 0.0, 0.1}, {"kimu", 0.1, 0.2}};
  std::vector<Mat> got = ContextualWordEmbeddings(text, m.params(), words);
  auto tokens = text.Tokenize("badego kimu");
  Mat h = text.Hidden(m.params(), tokens);
  for (size_t w = 0; w < 2; ++w) {
    Mat sum = Mat::Zero(1, h.cols());
    int n = 0;
    for (size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i].word == static_cast<int>(w)) {
        sum += h.row(static_cast<Eigen::Index>(i));
        ++n;
      }
    CHECK((got[w] - sum / n).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("infusion loss oracles") {
  InfusionModel m(Tiny(0));
  nn::ParamStore &s = m.params();

  SUBCASE("zero and unit residual") {
    Utterance u = ToneUtterance(0.3, {{"kimu", 0.05, 0.2}});
    const Mat target = m.Targets(u)[0].embed;
    s.at(m.head_w()).value.setZero();
    s.at(m.head_b()).value = target;
    CHECK(std::abs(m.Loss(u)) < 1e-20);
    Mat shifted = target;
    shifted(0, 2) += 1.0;
    s.at(m.head_b()).value = shifted;
    CHECK(std::abs(m.Loss(u) - 1.0) < 1e-12);
  }

  SUBCASE("random instances against a per-word loop") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> end(0.0, 0.6);
    for (int trial = 0; trial < 100; ++trial) {
      InfusionModel mm([&] {
        InfusionConfig c = Tiny(trial % 2);
        c.seed = 100 + trial;
        return c;
      }());
      const double e1 = end(rng), e2 = end(rng);
      Utterance u = ToneUtterance(0.5, {{"badego", 0.0, e1}, {"kimu", 0.0, e2}});
      nn::Graph g;
      auto st = mm.speech().ForwardStreams(g, mm.params(), u.samples);
      const Mat lang = g.value(st.language);
      const Mat &w = mm.params().at(mm.head_w()).value;
      const Mat &b = mm.params().at(mm.head_b()).value;
      std::vector<Mat> targets = ContextualWordEmbeddings(mm.text(), mm.params(), *u.alignment);
      double oracle = 0.0;
      const double ends[2] = {e1, e2};
      for (int k = 0; k < 2; ++k) {
        const int f = WordEndFrame(ends[k], mm.speech().frame_stride(), lang.rows());
        Mat p = lang.row(f) * w.transpose() + b;
        for (int c = 0; c < p.cols(); ++c) oracle += std::pow(p(0, c) - targets[k](0, c), 2);
      }
      CHECK(std::abs(mm.Loss(u) - oracle) < 1e-6);
    }
  }

  SUBCASE("alignment order does not matter") {
    Utterance a = ToneUtterance(0.4, {{"badego", 0.0, 0.1}, {"kimu", 0.1, 0.3}});
    Utterance b = ToneUtterance(0.4, {{"kimu", 0.1, 0.3}, {"badego", 0.0, 0.1}});
    CHECK(std::abs(m.Loss(a) - m.Loss(b)) < 1e-9);
  }

  SUBCASE("missing alignment") {
    Utterance u = ToneUtterance(0.3, {});
    u.alignment.reset();
    CHECK_THROWS_AS(m.Loss(u), ValidationError);
  }
}

TEST_CASE("infusion loss gradients match finite differences") {
  for (int layers : {0, 2}) {
    InfusionModel m(Tiny(layers));
    Utterance u = ToneUtterance(0.12, {{"badego", 0.0, 0.05}, {"kimu", 0.05, 0.11}});
    auto r = GradCheck(m.params(), [&](nn::Graph &g, const nn::ParamStore &) {
      return m.UtteranceLoss(g, u);
    });
    INFO("layers=" << layers << " worst " << r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("infused representation shapes and passthrough") {
  Utterance u = ToneUtterance(0.25, {{"kimu", 0.0, 0.2}});
  InfusionModel m0(Tiny(0));
  EncoderOutput r0 = m0.Represent(u);
  nn::ParamStore copy = m0.params();
  CHECK(r0.hidden.cols() == 8);
  // L = 0: identical to the bare speech encoder.
  std::mt19937_64 rng(Tiny(0).seed);
  nn::ParamStore bare;
  ConvTransformerEncoder enc(&bare, "speech.", Tiny(0).speech, rng);
  EncoderOutput direct = enc.Encode(bare, u);
  CHECK(direct.hidden.rows() == r0.hidden.rows());
  CHECK((direct.hidden - r0.hidden).cwiseAbs().maxCoeff() == 0.0);

  InfusionModel m2(Tiny(2));
  EncoderOutput r2 = m2.Represent(u);
  CHECK(r2.hidden.rows() == m2.speech().FrameCount(u.samples.size()));
  CHECK(r2.hidden.cols() == 16);
  InfusionModel again(Tiny(2));
  CHECK((again.Represent(u).hidden - r2.hidden).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m2.params().Hash() == again.params().Hash());
}

TEST_CASE("pretrain contract") {
  GenConfig gc;
  gc.n_train = 8;
  gc.n_val = 2;
  gc.n_test = 2;
  gc.mean_duration = 0.6;
  gc.seed = 3;
  Corpus corpus = Generate(gc);
  std::vector<size_t> train = corpus.SplitIndices(Split::kTrain);

  SUBCASE("zero steps") {
    InfusionModel m(Tiny(2));
    const uint64_t before = m.params().Hash();
    PretrainConfig pc;
    pc.steps = 0;
    auto r = Pretrain(&m, corpus, train, pc);
    CHECK(r.loss_curve.empty());
    CHECK(m.params().Hash() == before);
  }
  SUBCASE("text encoder stays frozen and loss falls") {
    InfusionModel m(Tiny(2));
    const uint64_t text_before = m.params().Hash("text.");
    const uint64_t speech_before = m.params().Hash("speech.");
    PretrainConfig pc;
    pc.steps = 30;
    pc.batch_size = 4;
    pc.learning_rate = 3e-3;
    auto r = Pretrain(&m, corpus, train, pc);
    CHECK(r.loss_curve.size() == 30);
    CHECK(m.params().Hash("text.") == text_before);
    CHECK(m.params().Hash("speech.") != speech_before);
    auto sm = SmoothCurve(r.loss_curve, 5);
    CHECK(sm.back() < sm.front());
  }
  SUBCASE("frozen speech under language layers") {
    InfusionModel m(Tiny(2));
    const uint64_t speech_before = m.params().Hash("speech.");
    PretrainConfig pc;
    pc.steps = 3;
    pc.batch_size = 2;
    pc.freeze_speech = true;
    Pretrain(&m, corpus, train, pc);
    CHECK(m.params().Hash("speech.") == speech_before);
  }
  SUBCASE("deterministic") {
    InfusionModel a(Tiny(2)), b(Tiny(2));
    PretrainConfig pc;
    pc.steps = 4;
    pc.batch_size = 3;
    auto ra = Pretrain(&a, corpus, train, pc);
    pc.threads = 3;
    auto rb = Pretrain(&b, corpus, train, pc);
    CHECK(ra.loss_curve == rb.loss_curve);
    CHECK(a.params().Hash() == b.params().Hash());
  }
  SUBCASE("unaligned turns are skipped and counted") {
    Corpus c = corpus;
    c.turns[train[0]].user.alignment.reset();
    InfusionModel m(Tiny(0));
    PretrainConfig pc;
    pc.steps = 1;
    pc.batch_size = 2;
    auto r = Pretrain(&m, c, train, pc);
    CHECK(r.skipped_unaligned == 1);
    for (size_t i : train) c.turns[i].user.alignment.reset();
    CHECK_THROWS_AS(Pretrain(&m, c, train, pc), ConfigError);
  }
  SUBCASE("clipped update") {
    InfusionModel m(Tiny(0));
    m.params().at(m.head_b()).value.setConstant(1000.0);
    const nn::ParamStore before = m.params();
    PretrainConfig pc;
    pc.optimizer = nn::OptimizerKind::kSgd;
    pc.learning_rate = 1e-3;
    pc.steps = 1;
    pc.batch_size = 4;
    Pretrain(&m, corpus, train, pc);
    double sq = 0.0;
    for (size_t p = 0; p < before.size(); ++p)
      sq += (m.params().at(p).value - before.at(p).value).squaredNorm();
    CHECK(std::sqrt(sq) <= 5.0 * 1e-3 * (1 + 1e-12));
    CHECK(std::sqrt(sq) > 4.9e-3);
  }
}

TEST_CASE("smoothing and linear probe") {
  std::vector<double> curve = {4, 2, 6, 8};
  auto sm = SmoothCurve(curve, 2);
  CHECK(sm == std::vector<double>{4, 3, 4, 7});
  CHECK_THROWS_AS(SmoothCurve(curve, 0), ConfigError);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<ProbeExample> train, test;
  for (int i = 0; i < 120; ++i) {
    ProbeExample e;
    e.label = i % 3;
    e.feature = Mat::Zero(1, 4);
    e.feature(0, e.label) = 1.0;
    for (int c = 0; c < 4; ++c) e.feature(0, c) += noise(rng);
    (i < 90 ? train : test).push_back(e);
  }
  CHECK(LinearProbeAccuracy(train, test, 3, ProbeConfig{}) == 100.0);
  CHECK_THROWS_AS(LinearProbeAccuracy({}, test, 3, ProbeConfig{}), ValidationError);
}
