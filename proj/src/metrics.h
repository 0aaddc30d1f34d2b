// src/metrics.h

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

#ifndef BARGEIN_METRICS_H_
#define BARGEIN_METRICS_H_

#include <span>

#include "corpus.h"

namespace bargein {

// Both values on a 0..100 scale.
struct Metrics {
  double avg_recall = 0.0;  // macro recall over {true, false}
  double f1 = 0.0;          // F1 of the true-barge-in class
};

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;  // true-barge-in is the positive class
};

Confusion CountConfusion(std::span<const BargeInLabel> predictions,
                         std::span<const BargeInLabel> truths);

// Throws ValidationError on length mismatch, empty input, or a class missing
// from truths (its recall would be undefined). F1 is 0 when there are no true
// positives.
Metrics ComputeMetrics(std::span<const BargeInLabel> predictions,
                       std::span<const BargeInLabel> truths);

// One decimal place, as reported in tables.
double RoundOneDecimal(double v);

}  // namespace bargein

#endif  // BARGEIN_METRICS_H_
