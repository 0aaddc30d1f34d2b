// src/optim.h

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

#ifndef BARGEIN_OPTIM_H_
#define BARGEIN_OPTIM_H_

#include <memory>
#include <string>
#include <vector>

#include "graph.h"

namespace bargein::nn {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind ParseOptimizer(const std::string &name);
std::string OptimizerName(OptimizerKind kind);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Updates every trainable parameter with a touched gradient slot.
  virtual void Step(ParamStore *store, const GradBuffer &grads) = 0;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void Step(ParamStore *store, const GradBuffer &grads) override;

 private:
  double lr_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void Step(ParamStore *store, const GradBuffer &grads) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Mat> m_, v_;
};

std::unique_ptr<Optimizer> MakeOptimizer(OptimizerKind kind, double lr);

// Rescales grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double ClipGlobalNorm(GradBuffer *grads, double max_norm);

}  // namespace bargein::nn

#endif  // BARGEIN_OPTIM_H_
