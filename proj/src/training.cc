// src/training.cc

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

#include "training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "corpus.h"
#include "error.h"
#include "metrics.h"

namespace bargein {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (threads <= 0) throw ConfigError("threads must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
}

nn::Mat DropoutMask(int rows, int cols, double rate, uint64_t seed) {
  nn::Mat m = nn::Mat::Ones(rows, cols);
  if (rate <= 0.0) return m;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = keep(rng) ? scale : 0.0;
  return m;
}

void ParallelFor(size_t n, int threads, const std::function<void(size_t)> &fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  const size_t workers = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t k = w; k < n; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<BargeInLabel> PredictSplit(const Trainee &model, const Corpus &corpus,
                                       Split split) {
  std::vector<BargeInLabel> out;
  for (size_t i : corpus.SplitIndices(split)) out.push_back(model.Predict(corpus, i));
  return out;
}

std::vector<EpochMetrics> RunSupervisedTraining(Trainee *model, const Corpus &corpus,
                                                const TrainConfig &cfg) {
  cfg.Validate();
  const std::vector<size_t> train = corpus.SplitIndices(Split::kTrain);
  const std::vector<size_t> val = corpus.SplitIndices(Split::kValidation);
  if (train.empty()) throw ConfigError("training split is empty");
  if (val.empty()) throw ConfigError("validation split is empty");
  std::vector<EpochMetrics> log;
  if (cfg.epochs == 0) return log;

  model->Prepare(corpus, train);
  model->Prepare(corpus, val);
  std::vector<BargeInLabel> val_truth;
  for (size_t i : val) val_truth.push_back(corpus.turns[i].label);

  nn::ParamStore &store = model->params();
  auto optimizer = nn::MakeOptimizer(cfg.optimizer, cfg.learning_rate);
  std::mt19937_64 order_rng(MixSeed(cfg.seed, 0x5eed0));
  nn::ParamStore best = store;
  double best_f1 = -1.0;

  std::vector<size_t> order = train;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (size_t start = 0, batch_no = 0; start < order.size();
         start += cfg.batch_size, ++batch_no) {
      const size_t n = std::min<size_t>(cfg.batch_size, order.size() - start);
      std::vector<nn::GradBuffer> grads(n, nn::GradBuffer(store));
      std::vector<double> losses(n);
      ParallelFor(n, cfg.threads, [&](size_t k) {
        const uint64_t seed = MixSeed(cfg.seed, static_cast<uint64_t>(epoch), start + k);
        losses[k] = model->ExampleLossAndGrad(corpus, order[start + k], cfg.dropout, seed,
                                              &grads[k]);
      });
      nn::GradBuffer total(store);
      double batch_loss = 0.0;
      for (size_t k = 0; k < n; ++k) {
        total.AddFrom(grads[k]);
        batch_loss += losses[k];
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "non-finite loss in epoch " << epoch << ", batch " << batch_no
           << " (first turn " << corpus.turns[order[start]].id << ")";
        throw NumericError(os.str());
      }
      total.Scale(1.0 / static_cast<double>(n));
      if (cfg.clip_norm > 0.0) nn::ClipGlobalNorm(&total, cfg.clip_norm);
      optimizer->Step(&store, total);
      loss_sum += batch_loss;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(order.size());
    std::vector<BargeInLabel> pred = PredictSplit(*model, corpus, Split::kValidation);
    Metrics m = ComputeMetrics(pred, val_truth);
    em.val_recall = m.avg_recall;
    em.val_f1 = m.f1;
    log.push_back(em);
    if (m.f1 > best_f1) {
      best_f1 = m.f1;
      best = store;
    }
  }
  store = best;
  return log;
}

void WriteMetricsLog(const std::filesystem::path &path, const std::vector<EpochMetrics> &log) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "epoch,train_loss,val_recall,val_f1\n";
  char buf[128];
  for (const auto &e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.4f,%.4f\n", e.epoch, e.train_loss,
                  e.val_recall, e.val_f1);
    os << buf;
  }
}

}  // namespace bargein
