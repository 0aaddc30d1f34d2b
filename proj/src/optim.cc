// src/optim.cc

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

#include "optim.h"

#include <cmath>

#include "error.h"

namespace bargein::nn {

OptimizerKind ParseOptimizer(const std::string &name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

void Sgd::Step(ParamStore *store, const GradBuffer &grads) {
  for (size_t i = 0; i < store->size(); ++i) {
    Parameter &p = store->at(static_cast<int>(i));
    if (!p.trainable || !grads.Touched(i)) continue;
    p.value -= lr_ * grads.at(i);
  }
}

void Adam::Step(ParamStore *store, const GradBuffer &grads) {
  if (m_.size() != store->size()) {
    m_.assign(store->size(), Mat());
    v_.assign(store->size(), Mat());
  }
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t i = 0; i < store->size(); ++i) {
    Parameter &p = store->at(static_cast<int>(i));
    if (!p.trainable || !grads.Touched(i)) continue;
    const Mat &g = grads.at(i);
    if (m_[i].size() == 0) {
      m_[i] = Mat::Zero(g.rows(), g.cols());
      v_[i] = Mat::Zero(g.rows(), g.cols());
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

std::unique_ptr<Optimizer> MakeOptimizer(OptimizerKind kind, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (kind == OptimizerKind::kSgd) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

double ClipGlobalNorm(GradBuffer *grads, double max_norm) {
  double norm = std::sqrt(grads->SquaredNorm());
  if (norm > max_norm && norm > 0.0) grads->Scale(max_norm / norm);
  return norm;
}

}  // namespace bargein::nn
