// src/metrics.cc

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

#include "metrics.h"

#include <cmath>

#include "error.h"

namespace bargein {

Confusion CountConfusion(std::span<const BargeInLabel> predictions,
                         std::span<const BargeInLabel> truths) {
  if (predictions.size() != truths.size())
    throw ValidationError("prediction and truth lists differ in length");
  Confusion c;
  for (size_t i = 0; i < truths.size(); ++i) {
    const bool pred_true = predictions[i] == BargeInLabel::kTrue;
    const bool is_true = truths[i] == BargeInLabel::kTrue;
    if (pred_true && is_true) ++c.tp;
    else if (pred_true) ++c.fp;
    else if (is_true) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics ComputeMetrics(std::span<const BargeInLabel> predictions,
                       std::span<const BargeInLabel> truths) {
  if (truths.empty()) throw ValidationError("metrics over an empty set");
  const Confusion c = CountConfusion(predictions, truths);
  if (c.tp + c.fn == 0)
    throw ValidationError("no true barge-in in the reference labels; recall undefined");
  if (c.tn + c.fp == 0)
    throw ValidationError("no false barge-in in the reference labels; recall undefined");
  const double recall_true = static_cast<double>(c.tp) / (c.tp + c.fn);
  const double recall_false = static_cast<double>(c.tn) / (c.tn + c.fp);
  Metrics m;
  m.avg_recall = 50.0 * (recall_true + recall_false);
  if (c.tp > 0) {
    const double precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    m.f1 = 100.0 * 2.0 * precision * recall_true / (precision + recall_true);
  }
  return m;
}

double RoundOneDecimal(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace bargein
