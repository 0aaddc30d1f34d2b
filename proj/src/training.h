// src/training.h

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

#ifndef BARGEIN_TRAINING_H_
#define BARGEIN_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "corpus.h"
#include "graph.h"
#include "optim.h"
#include "rng.h"

namespace bargein {

struct TrainConfig {
  nn::OptimizerKind optimizer = nn::OptimizerKind::kSgd;
  double learning_rate = 5e-4;
  double dropout = 0.2;
  int epochs = 20;
  int batch_size = 16;
  uint64_t seed = 1;
  bool fine_tune_speech = true;
  double clip_norm = 0.0;  // 0 disables clipping
  int threads = 1;

  void Validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_recall = 0.0;
  double val_f1 = 0.0;
};

// A binary barge-in classifier the supervised loop can drive.
class Trainee {
 public:
  virtual ~Trainee() = default;
  virtual nn::ParamStore &params() = 0;
  // Called once per split before use; lets frozen branches cache features.
  virtual void Prepare(const Corpus &, std::span<const size_t>) {}
  // Loss for one turn with gradients added to grads. `example_seed` drives
  // the dropout mask; rate 0 must reproduce inference.
  virtual double ExampleLossAndGrad(const Corpus &corpus, size_t turn, double dropout,
                                    uint64_t example_seed, nn::GradBuffer *grads) const = 0;
  virtual BargeInLabel Predict(const Corpus &corpus, size_t turn) const = 0;
};

// Shuffled mini-batch training with per-epoch validation. Leaves the trainee
// holding the parameters of the epoch with the best validation F1 (earliest
// on ties). Per-example gradients are reduced in batch order, so results are
// bit-identical for any thread count.
std::vector<EpochMetrics> RunSupervisedTraining(Trainee *model, const Corpus &corpus,
                                                const TrainConfig &cfg);

// Validation/test predictions for every turn of a split.
std::vector<BargeInLabel> PredictSplit(const Trainee &model, const Corpus &corpus,
                                       Split split);

// Runs fn(k) for k in [0, n) on up to `threads` workers.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)> &fn);

// Dropout keep-mask scaled by 1/(1-rate); all ones when rate is 0.
nn::Mat DropoutMask(int rows, int cols, double rate, uint64_t seed);

// CSV with header epoch,train_loss,val_recall,val_f1.
void WriteMetricsLog(const std::filesystem::path &path, const std::vector<EpochMetrics> &log);

}  // namespace bargein

#endif  // BARGEIN_TRAINING_H_
