// tests/test_metrics.cc

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
#include <limits>

#include "datagen.h"
#include "doctest.h"
#include "error.h"
#include "evaluate.h"
#include "metrics.h"
#include "oracles.h"

using namespace bargein;

namespace {

constexpr auto T = BargeInLabel::kTrue;
constexpr auto F = BargeInLabel::kFalse;

BargeInLabel Flip(BargeInLabel l) { return l == T ? F : T; }

NamedClassifier Constant(const std::string &name, BargeInLabel label) {
  return {name, "audio", [label](const DialogueTurn &, StageTimes *) { return label; }};
}

}  // namespace

TEST_CASE("perfect predictions") {
  const std::vector<BargeInLabel> y = {T, F, T, F};
  const Metrics m = ComputeMetrics(y, y);
  CHECK(m.avg_recall == doctest::Approx(100.0));
  CHECK(m.f1 == doctest::Approx(100.0));
}

TEST_CASE("one of each confusion cell") {
  const std::vector<BargeInLabel> p = {T, T, F, F}, y = {T, F, T, F};
  const Confusion c = CountConfusion(p, y);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
  const Metrics m = ComputeMetrics(p, y);
  CHECK(m.avg_recall == doctest::Approx(50.0));
  CHECK(m.f1 == doctest::Approx(50.0));
}

TEST_CASE("always predicting true on a balanced set") {
  const std::vector<BargeInLabel> p(6, T), y = {T, F, T, F, T, F};
  const Metrics m = ComputeMetrics(p, y);
  CHECK(m.avg_recall == doctest::Approx(50.0));
  CHECK(RoundOneDecimal(m.f1) == doctest::Approx(66.7));
}

TEST_CASE("no true positives gives zero F1") {
  const std::vector<BargeInLabel> p(4, F), y = {T, F, T, F};
  CHECK(ComputeMetrics(p, y).f1 == 0.0);
}

TEST_CASE("macro recall is symmetric under relabelling") {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BargeInLabel> p(20), y(20), pf(20), yf(20);
    for (int i = 0; i < 20; ++i) {
      p[i] = coin(rng) ? T : F;
      y[i] = i < 2 ? (i ? T : F) : (coin(rng) ? T : F);
      pf[i] = Flip(p[i]);
      yf[i] = Flip(y[i]);
    }
    CHECK(ComputeMetrics(p, y).avg_recall == doctest::Approx(ComputeMetrics(pf, yf).avg_recall));
    const Metrics a = ComputeMetrics(p, y), b = bargein::testing::LoopMetrics(p, y);
    CHECK(a.f1 == doctest::Approx(b.f1));
    CHECK(a.avg_recall >= 0.0);
    CHECK(a.f1 <= 100.0);
  }
}

TEST_CASE("metric input errors") {
  const std::vector<BargeInLabel> two = {T, F}, three = {T, F, T}, trues = {T, T};
  CHECK_THROWS_AS(ComputeMetrics(two, three), ValidationError);
  CHECK_THROWS_AS(ComputeMetrics({}, {}), ValidationError);
  CHECK_THROWS_AS(ComputeMetrics(two, trues), ValidationError);
}

TEST_CASE("percentiles") {
  CHECK(Median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(Median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK(Percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 95.0) == doctest::Approx(4.8));
  CHECK(Percentile({7.0}, 95.0) == doctest::Approx(7.0));
  CHECK(Percentile({1.0, 9.0}, 0.0) == doctest::Approx(1.0));
  CHECK(Percentile({1.0, 9.0}, 100.0) == doctest::Approx(9.0));
  CHECK_THROWS(Percentile({}, 50.0));
}

TEST_CASE("report formats") {
  const double na = std::numeric_limits<double>::quiet_NaN();
  std::vector<ReportRow> rows = {{"fusion-audio", "audio", 91.04, 90.46, 1.23456, 2.5},
                                 {"lstm-baseline", "audio", 60.0, 55.55, na, na}};
  CHECK(RenderReportCsv(rows) ==
        "model,inputs,avg_recall,f1,latency_ms_median,latency_ms_p95\n"
        "fusion-audio,audio,91.0,90.5,1.235,2.500\n"
        "lstm-baseline,audio,60.0,55.5,NA,NA\n");
  const std::string table = RenderReportTable(rows);
  CHECK(table.find("Model") == 0);
  CHECK(table.find("lstm-baseline") != std::string::npos);
  CHECK(RenderLatencySamplesCsv({{"m", "test-00001", 2, 0.5}}) ==
        "model,utterance_id,run,ms\nm,test-00001,2,0.500000\n");
}

TEST_CASE("evaluate a split") {
  GenConfig gc;
  gc.n_train = 4;
  gc.n_val = 4;
  gc.n_test = 10;
  gc.mean_duration = 0.3;
  const Corpus c = Generate(gc);
  const Metrics m = EvaluateSplit(Constant("t", T), c, Split::kTest);
  CHECK(m.avg_recall == doctest::Approx(50.0));
  CHECK(m.f1 == doctest::Approx(100.0 * 2.0 / 3.0));
}

TEST_CASE("latency harness shape and errors") {
  GenConfig gc;
  gc.n_train = 4;
  gc.n_val = 4;
  gc.n_test = 6;
  gc.mean_duration = 0.3;
  const Corpus c = Generate(gc);
  BenchConfig bc;
  bc.warmup = 1;
  bc.runs_per_utterance = 2;
  const LatencyResult r = BenchmarkLatency({Constant("a", T), Constant("b", F)}, c, bc);
  REQUIRE(r.summaries.size() == 2);
  CHECK(r.summaries[0].model == "a");
  CHECK(r.summaries[1].utterances == 6);
  CHECK(r.samples.size() == 2 * 6 * 2);
  for (const auto &s : r.summaries) CHECK(s.p95_ms >= s.median_ms);
  for (const auto &s : r.samples) CHECK(s.ms >= 0.0);

  bc.max_utterances = 3;
  CHECK(BenchmarkLatency({Constant("a", T)}, c, bc).samples.size() == 3 * 2);
  bc.threads = 2;
  CHECK_THROWS_AS(BenchmarkLatency({Constant("a", T)}, c, bc), ConfigError);
  bc = BenchConfig();
  bc.runs_per_utterance = 0;
  CHECK_THROWS_AS(bc.Validate(), ConfigError);
}
