// src/datagen.h

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

#ifndef BARGEIN_DATAGEN_H_
#define BARGEIN_DATAGEN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corpus.h"
#include "json.hpp"

namespace bargein {

struct GenConfig {
  int n_train = 9000;
  int n_val = 1000;
  int n_test = 2000;
  uint64_t seed = 1;
  int sample_rate = 16000;
  int vocab_size = 48;
  double ambiguity_fraction = 0.2;
  std::optional<double> noise_snr_db;
  bool echo_contamination = false;
  double mean_duration = 2.4;  // seconds

  void Validate() const;
};

nlohmann::json ToJson(const GenConfig &c);

inline constexpr int kResponsesPerContext = 3;

// Pseudo-word vocabulary. Words [3c, 3c+3) are the expected responses of
// context c; every word past the response block is side talk.
class Vocabulary {
 public:
  explicit Vocabulary(int size);
  int size() const { return static_cast<int>(words_.size()); }
  const std::string &word(int i) const { return words_.at(i); }
  int Find(const std::string &w) const;  // -1 when absent
  std::vector<int> ResponseSet(int context) const;
  int num_response_words() const;
  // Words sharing the same ending segment have equal ending ids.
  static int EndingOf(int word) { return word % 4; }

 private:
  std::vector<std::string> words_;
};

// Bot prompts for a context label (two per label).
const std::vector<std::string> &PromptsFor(int context);

// Renders a word sequence to 16-bit-grid audio. Each word is a stem with its
// own fundamental and harmonic pattern followed by one of four shared ending
// segments. Returns the waveform and fills alignment.
std::vector<float> RenderWords(const std::vector<int> &words, const Vocabulary &vocab,
                               int sample_rate, double target_duration, uint64_t seed,
                               std::vector<WordAlignment> *alignment);

// Deterministic simulated barge-in corpus; per-turn RNG streams come from
// (seed, split, slot).
Corpus Generate(const GenConfig &cfg);

// Accuracy ceiling of any audio-only classifier: 1 - ambiguity/2.
double ExpectedAudioOnlyCeiling(const GenConfig &cfg);

}  // namespace bargein

#endif  // BARGEIN_DATAGEN_H_
