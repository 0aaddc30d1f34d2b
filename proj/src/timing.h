// src/timing.h

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

#ifndef BARGEIN_TIMING_H_
#define BARGEIN_TIMING_H_

#include <chrono>
#include <map>
#include <string>

namespace bargein {

// Milliseconds spent per named stage of a forward pass.
using StageTimes = std::map<std::string, double>;

// Adds the lifetime of the scope to (*times)[stage]; a null map disables it.
class StageTimer {
 public:
  StageTimer(StageTimes *times, const char *stage)
      : times_(times), stage_(stage), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    if (!times_) return;
    const auto d = std::chrono::steady_clock::now() - start_;
    (*times_)[stage_] += std::chrono::duration<double, std::milli>(d).count();
  }
  StageTimer(const StageTimer &) = delete;
  StageTimer &operator=(const StageTimer &) = delete;

 private:
  StageTimes *times_;
  const char *stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace bargein

#endif  // BARGEIN_TIMING_H_
