// src/evaluate.h

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

#ifndef BARGEIN_EVALUATE_H_
#define BARGEIN_EVALUATE_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "corpus.h"
#include "metrics.h"
#include "timing.h"

namespace bargein {

// A trained classifier as seen by the harness: the full inference path for
// one turn, optionally filling a per-stage time breakdown.
struct NamedClassifier {
  std::string name;
  std::string inputs;  // e.g. "audio+prompt+context"
  std::function<BargeInLabel(const DialogueTurn &, StageTimes *)> classify;
};

Metrics EvaluateSplit(const NamedClassifier &model, const Corpus &corpus, Split split);

struct BenchConfig {
  int warmup = 10;
  int runs_per_utterance = 3;
  int threads = 1;
  Split split = Split::kTest;
  size_t max_utterances = 0;  // 0 = whole split

  void Validate() const;
};

struct LatencySample {
  std::string model;
  std::string utterance_id;
  int run = 0;
  double ms = 0.0;
};

struct LatencySummary {
  std::string model;
  double median_ms = 0.0;  // median over utterances of per-utterance medians
  double p95_ms = 0.0;     // 95th percentile of the same per-utterance medians
  StageTimes stage_median_ms;
  size_t utterances = 0;
};

struct LatencyResult {
  std::vector<LatencySummary> summaries;  // one per model, input order
  std::vector<LatencySample> samples;
};

// Batch-1 wall clock of the whole forward path on the calling thread, pinned
// to one CPU. All models see the same utterances; per utterance the models
// run interleaved in a rotating order so slow drift hits them equally.
// Throws ConfigError when threads > 1 and ValidationError on an empty split.
LatencyResult BenchmarkLatency(const std::vector<NamedClassifier> &models, const Corpus &corpus,
                               const BenchConfig &cfg);

// Linear-interpolated percentile (q in [0, 100]) of a non-empty sample.
double Percentile(std::vector<double> values, double q);
double Median(std::vector<double> values);

struct ReportRow {
  std::string model;
  std::string inputs;
  double avg_recall = 0.0;
  double f1 = 0.0;
  double latency_median_ms = 0.0;
  double latency_p95_ms = 0.0;
};

std::string RenderReportCsv(const std::vector<ReportRow> &rows);
std::string RenderReportTable(const std::vector<ReportRow> &rows);
std::string RenderLatencySamplesCsv(const std::vector<LatencySample> &samples);

// Writes report.csv, report.txt and latency_samples.csv into dir.
void WriteReport(const std::filesystem::path &dir, const std::vector<ReportRow> &rows,
                 const std::vector<LatencySample> &samples);

void WriteText(const std::filesystem::path &path, const std::string &text);

}  // namespace bargein

#endif  // BARGEIN_EVALUATE_H_
