// tests/test_fusion.cc

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

#include <random>

#include "datagen.h"
#include "doctest.h"
#include "encoders.h"
#include "error.h"
#include "fusion.h"
#include "gradcheck.h"
#include "oracles.h"
#include "training.h"

using namespace bargein;
using namespace bargein::testing;

namespace {

DialogueTurn MakeTurn(std::mt19937_64 &rng, double seconds, int context,
                      const std::string &prompt = "could you repeat the date") {
  DialogueTurn t;
  t.id = "t";
  t.user = RandomUtterance(rng, seconds);
  t.prompt_text = prompt;
  t.context = ContextRegistry::Default().at(context);
  return t;
}

}  // namespace

TEST_CASE("mean pool") {
  Mat h(3, 2);
  h << 1, 2, 3, 4, 5, 9;
  const Mat p = MeanPool(h);
  CHECK(p.rows() == 1);
  CHECK(p(0, 0) == doctest::Approx(3.0));
  CHECK(p(0, 1) == doctest::Approx(5.0));
  Mat one(1, 3);
  one << -1, 0.5, 7;
  CHECK((MeanPool(one) - one).norm() == 0.0);
  CHECK_THROWS_AS(MeanPool(Mat(0, 3)), ValidationError);
}

TEST_CASE("encoder output shapes") {
  FusionModel m(TinyFusion(1));
  std::mt19937_64 rng(1);
  const Utterance u = RandomUtterance(rng, 0.1);
  const EncoderOutput out = m.speech_encoder().Encode(m.params(), u);
  // 1600 samples at stride 160.
  CHECK(out.hidden.rows() == 10);
  CHECK(out.hidden.cols() == 8);
  CHECK(out.frame_stride == doctest::Approx(0.01));
  CHECK(m.speech_encoder().FrameCount(1601) == 11);

  Utterance wrong = u;
  wrong.sample_rate = 8000;
  CHECK_THROWS_AS(m.speech_encoder().Encode(m.params(), wrong), ConfigError);
}

TEST_CASE("prompt tokenizer and frozen table") {
  nn::ParamStore store;
  std::mt19937_64 rng(2);
  TextEncoderConfig tc;
  tc.hidden = 6;
  tc.buckets = 64;
  HashTextEncoder enc(&store, "text.", tc, rng);
  const auto tokens = enc.Tokenize("Hello, world");
  REQUIRE(!tokens.empty());
  CHECK(tokens.front().word == 0);
  CHECK(tokens.back().word == 1);
  for (const auto &t : tokens) CHECK(t.id >= 0);
  for (const auto &t : tokens) CHECK(t.id < 64);
  // Case and punctuation do not change the pieces.
  const auto again = enc.Tokenize("hello world");
  REQUIRE(again.size() == tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) CHECK(again[i].id == tokens[i].id);
  for (size_t p = 0; p < store.size(); ++p) CHECK_FALSE(store.at(static_cast<int>(p)).trainable);
  CHECK(enc.Hidden(store, tokens).rows() == static_cast<Eigen::Index>(tokens.size()));
}

TEST_CASE("context embedding selects a row and projects it") {
  nn::ParamStore store;
  std::mt19937_64 rng(3);
  ContextEmbedding ce(&store, "ctx.", 10, 4, 5, rng);
  const auto &reg = ContextRegistry::Default();
  for (int id = 0; id < reg.size(); ++id) {
    const Mat got = EncodeContext(ce, store, reg.at(id));
    const Mat want = store.at(ce.proj_index()).value * store.at(ce.table_index()).value.row(id).transpose();
    CHECK((got - want.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  DialogueContextLabel bad{10, "intent_9"};
  CHECK_THROWS(EncodeContext(ce, store, bad));
}

TEST_CASE("forward matches the loop oracle for every branch set") {
  std::mt19937_64 rng(4);
  for (int mask = 0; mask < 4; ++mask) {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      FusionModel m(TinyFusion(seed, mask & 1, mask & 2));
      const DialogueTurn t = MakeTurn(rng, 0.05 + 0.03 * seed, static_cast<int>(seed));
      const Mat p = m.Forward(t);
      CHECK((p - LoopForward(m, t)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(p.sum() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("concatenation width follows the branches") {
  std::mt19937_64 rng(5);
  const DialogueTurn t = MakeTurn(rng, 0.1, 2);
  for (int mask = 0; mask < 4; ++mask) {
    FusionModel m(TinyFusion(1, mask & 1, mask & 2));
    nn::Graph g;
    CHECK(g.value(m.Concat(g, t)).cols() == m.config().num_branches() * m.config().proj_dim);
  }
}

TEST_CASE("unused inputs do not affect the output") {
  std::mt19937_64 rng(6);
  const DialogueTurn a = MakeTurn(rng, 0.1, 0, "what is your name");
  DialogueTurn b = a;
  b.context = ContextRegistry::Default().at(7);
  b.prompt_text = "please hold";
  FusionModel audio(TinyFusion(2, false, false));
  CHECK((audio.Forward(a) - audio.Forward(b)).norm() == 0.0);
  FusionModel ctx(TinyFusion(2, false, true));
  DialogueTurn c = a;
  c.prompt_text = "please hold";
  CHECK((ctx.Forward(a) - ctx.Forward(c)).norm() == 0.0);
  CHECK((ctx.Forward(a) - ctx.Forward(b)).norm() > 0.0);
}

TEST_CASE("fusion cross entropy gradients match finite differences") {
  std::mt19937_64 rng(7);
  FusionModel m(TinyFusion(9));
  m.SetSpeechTrainable(true);
  const DialogueTurn t = MakeTurn(rng, 0.05, 3);
  const Mat mask = DropoutMask(1, 3 * m.config().proj_dim, 0.25, 4);
  for (int label : {0, 1}) {
    auto r = GradCheck(m.params(), [&](nn::Graph &g, const nn::ParamStore &) {
      return nn::CrossEntropy(g, m.Logits(g, t, &mask), label);
    });
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("dropout mask is inverted and seeded") {
  const Mat a = DropoutMask(1, 2000, 0.2, 11), b = DropoutMask(1, 2000, 0.2, 11);
  CHECK((a - b).norm() == 0.0);
  int zeros = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == 0.0) ++zeros;
    else CHECK(a(i) == doctest::Approx(1.25));
  }
  CHECK(zeros > 300);
  CHECK(zeros < 500);
  CHECK((DropoutMask(1, 5, 0.0, 1).array() == 1.0).all());
}

TEST_CASE("frozen speech keeps its weights through training") {
  GenConfig gc;
  gc.n_train = 16;
  gc.n_val = 4;
  gc.n_test = 4;
  gc.mean_duration = 0.3;
  const Corpus corpus = Generate(gc);
  FusionModel init(TinyFusion(3));
  TrainConfig tc;
  tc.optimizer = nn::OptimizerKind::kAdam;
  tc.learning_rate = 1e-2;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.fine_tune_speech = false;
  FusionTrainResult r = TrainFusion(init, corpus, tc);
  CHECK(r.log.size() == 2);
  bool head_moved = false;
  for (size_t p = 0; p < init.params().size(); ++p) {
    const auto &before = init.params().at(static_cast<int>(p));
    const auto &after = r.model.params().at(static_cast<int>(p));
    const bool moved = (before.value - after.value).norm() > 0.0;
    if (before.name.rfind("speech.", 0) == 0) CHECK_FALSE(moved);
    if (before.name.rfind("head.", 0) == 0 || before.name.rfind("fusion.", 0) == 0)
      head_moved = head_moved || moved;
  }
  CHECK(head_moved);
}

TEST_CASE("training is deterministic across thread counts") {
  GenConfig gc;
  gc.n_train = 12;
  gc.n_val = 4;
  gc.n_test = 4;
  gc.mean_duration = 0.3;
  const Corpus corpus = Generate(gc);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.learning_rate = 1e-2;
  FusionTrainResult one = TrainFusion(FusionModel(TinyFusion(4)), corpus, tc);
  tc.threads = 3;
  FusionTrainResult three = TrainFusion(FusionModel(TinyFusion(4)), corpus, tc);
  for (size_t p = 0; p < one.model.params().size(); ++p)
    CHECK((one.model.params().at(static_cast<int>(p)).value -
           three.model.params().at(static_cast<int>(p)).value)
              .norm() == 0.0);
}

TEST_CASE("training config validation") {
  TrainConfig tc;
  tc.dropout = 1.0;
  CHECK_THROWS_AS(tc.Validate(), ConfigError);
  tc = TrainConfig();
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.Validate(), ConfigError);
  tc = TrainConfig();
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(tc.Validate(), ConfigError);
}
