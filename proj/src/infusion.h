// src/infusion.h

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

#ifndef BARGEIN_INFUSION_H_
#define BARGEIN_INFUSION_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corpus.h"
#include "encoders.h"
#include "graph.h"
#include "json.hpp"
#include "optim.h"

namespace bargein {

struct InfusionConfig {
  SpeechEncoderConfig speech;
  int language_layers = 0;  // L in {0, 2, 4}
  TextEncoderConfig text;
  uint64_t seed = 1;
};

nlohmann::json ToJson(const InfusionConfig &c);
InfusionConfig InfusionConfigFromJson(const nlohmann::json &j);

struct PretrainConfig {
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double learning_rate = 2e-4;
  double clip_norm = 5.0;
  long steps = 800000;
  int batch_size = 16;
  uint64_t seed = 1;
  bool freeze_speech = false;  // only meaningful when L > 0
  int threads = 1;

  void Validate() const;
};

struct WordTarget {
  std::string word;
  Mat embed;          // 1 x text width
  int end_frame = 0;  // in [0, M)
};

// round-half-up(end_time / stride) clamped to [0, M-1].
int WordEndFrame(double end_time, double frame_stride, int num_frames);

// Mean of a word's subword hidden states with the word run through the
// encoder in isolation. Throws ValidationError when the word has no pieces.
Mat WordEmbedding(const PromptEncoder &enc, const nn::ParamStore &store,
                  std::string_view word);

// Contextual targets: the whole transcript (words in time order) goes through
// the text encoder and each aligned word gets the mean of its own pieces.
// Results are indexed like `words`.
std::vector<Mat> ContextualWordEmbeddings(const PromptEncoder &enc, const nn::ParamStore &store,
                                          const std::vector<WordAlignment> &words);

// Speech encoder + L language layers + prediction head, with a frozen text
// encoder supplying targets.
class InfusionModel {
 public:
  explicit InfusionModel(const InfusionConfig &cfg);

  const InfusionConfig &config() const { return cfg_; }
  nn::ParamStore &params() { return store_; }
  const nn::ParamStore &params() const { return store_; }
  const LexicalSpeechEncoder &speech() const { return speech_; }
  const HashTextEncoder &text() const { return text_; }
  int language_layers() const { return speech_.language_layers(); }
  int head_w() const { return head_w_; }
  int head_b() const { return head_b_; }

  std::vector<WordTarget> Targets(const Utterance &u) const;

  // Sum over words of ||p(f_tw) - embed_w||^2 as a graph node. The utterance
  // must be aligned.
  nn::Var UtteranceLoss(nn::Graph &g, const Utterance &u) const;
  double Loss(const Utterance &u) const;

  // [language | encoder] when L > 0, encoder output otherwise.
  EncoderOutput Represent(const Utterance &u) const;

 private:
  InfusionConfig cfg_;
  nn::ParamStore store_;
  LexicalSpeechEncoder speech_;
  HashTextEncoder text_;
  int head_w_ = -1, head_b_ = -1;
};

struct PretrainResult {
  std::vector<double> loss_curve;  // mean batch loss per step
  size_t skipped_unaligned = 0;
};

// Adam/SGD on the mean utterance loss with global-norm clipping. Unaligned
// turns are skipped and counted; throws ConfigError when none are aligned.
PretrainResult Pretrain(InfusionModel *model, const Corpus &corpus,
                        std::span<const size_t> turns, const PretrainConfig &cfg);

// Trailing moving average with the given window (shorter at the start).
std::vector<double> SmoothCurve(std::span<const double> curve, int window);

struct ProbeConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  uint64_t seed = 1;
};

struct ProbeExample {
  Mat feature;  // 1 x width
  int label = 0;
};

// Features at word-end frames, labelled by the word's index in `vocab`
// (words missing from vocab are dropped).
std::vector<ProbeExample> WordEndFeatures(const EncoderOutput &rep,
                                          const std::vector<WordAlignment> &words,
                                          const std::vector<std::string> &vocab);

// Multinomial logistic regression on standardized features (full-batch Adam);
// returns test accuracy in percent.
double LinearProbeAccuracy(const std::vector<ProbeExample> &train,
                           const std::vector<ProbeExample> &test, int num_classes,
                           const ProbeConfig &cfg);

}  // namespace bargein

#endif  // BARGEIN_INFUSION_H_
