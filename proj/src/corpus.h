// src/corpus.h

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

#ifndef BARGEIN_CORPUS_H_
#define BARGEIN_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bargein {

enum class Split { kTrain, kValidation, kTest };

// Index convention used by every model head: 0 = true, 1 = false barge-in.
enum class BargeInLabel : int { kTrue = 0, kFalse = 1 };

std::string_view SplitName(Split s);
Split ParseSplit(std::string_view name);

struct WordAlignment {
  std::string word;
  double start_time = 0.0;  // seconds
  double end_time = 0.0;
  bool operator==(const WordAlignment &) const = default;
};

struct Utterance {
  std::vector<float> samples;  // mono, [-1, 1]
  int sample_rate = 16000;
  std::optional<std::vector<WordAlignment>> alignment;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  bool aligned() const { return alignment.has_value() && !alignment->empty(); }
  // Space-joined alignment words.
  std::string Transcript() const;
  // Throws ValidationError on a broken invariant.
  void Validate() const;
  bool operator==(const Utterance &) const = default;
};

struct DialogueContextLabel {
  int id = 0;
  std::string name;
  bool operator==(const DialogueContextLabel &) const = default;
};

// The d dialogue-context labels: intent_0..2 then slot_0..6.
class ContextRegistry {
 public:
  static const ContextRegistry &Default();
  int size() const { return static_cast<int>(labels_.size()); }
  const DialogueContextLabel &at(int id) const;
  const DialogueContextLabel &Find(std::string_view name) const;

 private:
  std::vector<DialogueContextLabel> labels_;
};

struct DialogueTurn {
  std::string id;
  Split split = Split::kTrain;
  std::string prompt_text;
  DialogueContextLabel context;
  Utterance user;
  BargeInLabel label = BargeInLabel::kTrue;

  void Validate() const;
  bool operator==(const DialogueTurn &) const = default;
};

struct Corpus {
  uint64_t seed = 0;
  std::vector<DialogueTurn> turns;

  std::vector<size_t> SplitIndices(Split s) const;
  size_t CountSplit(Split s) const { return SplitIndices(s).size(); }
  // Unique ids plus per-turn invariants.
  void Validate() const;
  bool operator==(const Corpus &) const = default;
};

// Label counts per split differ by at most one.
bool IsBalanced(const Corpus &c);

// Reads a line-delimited manifest plus the PCM files it references. Audio
// paths are relative to the manifest's directory.
Corpus LoadCorpus(const std::filesystem::path &manifest);
// Writes <dir>/manifest.jsonl and <dir>/audio/<id>.wav; returns the manifest.
std::filesystem::path SaveCorpus(const Corpus &c, const std::filesystem::path &dir);

// Shortest fixed-point rendering with at least six decimals that parses back
// to the same double.
std::string FormatSeconds(double t);

// 16-bit little-endian mono PCM.
Utterance ReadWav(const std::filesystem::path &path);
void WriteWav(const std::filesystem::path &path, const std::vector<float> &samples,
              int sample_rate);
// Snaps a sample to the 16-bit grid so file round trips are exact.
float QuantizePcm16(double x);

}  // namespace bargein

#endif  // BARGEIN_CORPUS_H_
