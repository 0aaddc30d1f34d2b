// src/evaluate.cc

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

#include "evaluate.h"

#include <malloc.h>
#include <sched.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "error.h"

namespace bargein {

Metrics EvaluateSplit(const NamedClassifier &model, const Corpus &corpus, Split split) {
  std::vector<BargeInLabel> pred, truth;
  for (size_t i : corpus.SplitIndices(split)) {
    pred.push_back(model.classify(corpus.turns[i], nullptr));
    truth.push_back(corpus.turns[i].label);
  }
  if (truth.empty())
    throw ValidationError("split " + std::string(SplitName(split)) + " is empty");
  return ComputeMetrics(pred, truth);
}

void BenchConfig::Validate() const {
  if (threads != 1)
    throw ConfigError("latency benchmarking is single-threaded; threads must be 1, got " +
                      std::to_string(threads));
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  if (runs_per_utterance < 1) throw ConfigError("runs_per_utterance must be >= 1");
}

double Percentile(std::vector<double> v, double q) {
  if (v.empty()) throw ValidationError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double Median(std::vector<double> v) { return Percentile(std::move(v), 50.0); }

namespace {

// Pins the calling thread to the CPU it is running on and flushes denormals
// for the lifetime of the object. Large buffers stay on the heap instead of
// being mapped and faulted in on every forward pass; that setting is global
// and left in place.
class BenchEnvironment {
 public:
  BenchEnvironment() {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    pinned_ = sched_getaffinity(0, sizeof(saved_), &saved_) == 0;
    if (pinned_) {
      cpu_set_t one;
      CPU_ZERO(&one);
      int cpu = sched_getcpu();
      if (cpu < 0) cpu = 0;
      CPU_SET(cpu, &one);
      pinned_ = sched_setaffinity(0, sizeof(one), &one) == 0;
    }
#if defined(__SSE__)
    csr_ = _mm_getcsr();
    _mm_setcsr(csr_ | 0x8040);  // flush-to-zero and denormals-are-zero
#endif
  }
  ~BenchEnvironment() {
    if (pinned_) sched_setaffinity(0, sizeof(saved_), &saved_);
#if defined(__SSE__)
    _mm_setcsr(csr_);
#endif
  }

 private:
  cpu_set_t saved_;
  bool pinned_ = false;
#if defined(__SSE__)
  unsigned csr_ = 0;
#endif
};

}  // namespace

LatencyResult BenchmarkLatency(const std::vector<NamedClassifier> &models, const Corpus &corpus,
                               const BenchConfig &cfg) {
  cfg.Validate();
  if (models.empty()) throw ConfigError("no models to benchmark");
  std::vector<size_t> utts = corpus.SplitIndices(cfg.split);
  if (utts.empty())
    throw ValidationError("split " + std::string(SplitName(cfg.split)) + " is empty");
  if (cfg.max_utterances > 0 && utts.size() > cfg.max_utterances) utts.resize(cfg.max_utterances);

  BenchEnvironment env;
  using Clock = std::chrono::steady_clock;
  for (int w = 0; w < cfg.warmup; ++w)
    for (const auto &m : models) m.classify(corpus.turns[utts[w % utts.size()]], nullptr);

  const size_t n = models.size();
  LatencyResult result;
  std::vector<std::vector<double>> per_utt(n);
  std::vector<std::map<std::string, std::vector<double>>> stages(n);
  std::vector<std::vector<double>> runs(n);
  for (size_t u = 0; u < utts.size(); ++u) {
    const DialogueTurn &turn = corpus.turns[utts[u]];
    for (auto &r : runs) r.clear();
    for (int run = 0; run < cfg.runs_per_utterance; ++run) {
      for (size_t j = 0; j < n; ++j) {
        const size_t k = (j + u + static_cast<size_t>(run)) % n;
        StageTimes st;
        const auto t0 = Clock::now();
        models[k].classify(turn, &st);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        runs[k].push_back(ms);
        for (const auto &[name, v] : st) stages[k][name].push_back(v);
        result.samples.push_back({models[k].name, turn.id, run, ms});
      }
    }
    for (size_t k = 0; k < n; ++k) per_utt[k].push_back(Median(runs[k]));
  }
  // Samples grouped by model, then utterance, then run.
  std::stable_sort(result.samples.begin(), result.samples.end(),
                   [&](const LatencySample &a, const LatencySample &b) {
                     auto rank = [&](const std::string &name) {
                       for (size_t k = 0; k < n; ++k)
                         if (models[k].name == name) return k;
                       return n;
                     };
                     return rank(a.model) < rank(b.model);
                   });
  for (size_t k = 0; k < n; ++k) {
    LatencySummary s;
    s.model = models[k].name;
    s.median_ms = Median(per_utt[k]);
    s.p95_ms = Percentile(per_utt[k], 95.0);
    s.utterances = utts.size();
    for (const auto &[name, v] : stages[k]) s.stage_median_ms[name] = Median(v);
    result.summaries.push_back(std::move(s));
  }
  return result;
}

namespace {

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Latency(double v) { return std::isnan(v) ? "NA" : Fixed(v, 3); }

}  // namespace

std::string RenderReportCsv(const std::vector<ReportRow> &rows) {
  std::ostringstream os;
  os << "model,inputs,avg_recall,f1,latency_ms_median,latency_ms_p95\n";
  for (const auto &r : rows)
    os << r.model << ',' << r.inputs << ',' << Fixed(r.avg_recall, 1) << ',' << Fixed(r.f1, 1)
       << ',' << Latency(r.latency_median_ms) << ',' << Latency(r.latency_p95_ms) << '\n';
  return os.str();
}

std::string RenderReportTable(const std::vector<ReportRow> &rows) {
  std::vector<std::vector<std::string>> cells = {
      {"Model", "Inputs", "Recall", "F1", "Latency (ms)", "p95 (ms)"}};
  for (const auto &r : rows)
    cells.push_back({r.model, r.inputs, Fixed(r.avg_recall, 1), Fixed(r.f1, 1),
                     Latency(r.latency_median_ms), Latency(r.latency_p95_ms)});
  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto &row : cells)
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (size_t i = 0; i < cells.size(); ++i) {
    for (size_t c = 0; c < cells[i].size(); ++c) {
      const std::string &v = cells[i][c];
      // Text columns left aligned, numbers right aligned.
      if (c < 2)
        os << v << std::string(width[c] - v.size(), ' ');
      else
        os << std::string(width[c] - v.size(), ' ') << v;
      os << (c + 1 < cells[i].size() ? "  " : "\n");
    }
    if (i == 0) {
      size_t total = 0;
      for (size_t w : width) total += w;
      os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return os.str();
}

std::string RenderLatencySamplesCsv(const std::vector<LatencySample> &samples) {
  std::ostringstream os;
  os << "model,utterance_id,run,ms\n";
  char buf[64];
  for (const auto &s : samples) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.ms);
    os << s.model << ',' << s.utterance_id << ',' << s.run << ',' << buf << '\n';
  }
  return os.str();
}

void WriteText(const std::filesystem::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void WriteReport(const std::filesystem::path &dir, const std::vector<ReportRow> &rows,
                 const std::vector<LatencySample> &samples) {
  WriteText(dir / "report.csv", RenderReportCsv(rows));
  WriteText(dir / "report.txt", RenderReportTable(rows));
  if (!samples.empty()) WriteText(dir / "latency_samples.csv", RenderLatencySamplesCsv(samples));
}

}  // namespace bargein
