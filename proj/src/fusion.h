// src/fusion.h

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

#ifndef BARGEIN_FUSION_H_
#define BARGEIN_FUSION_H_

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "corpus.h"
#include "encoders.h"
#include "graph.h"
#include "json.hpp"
#include "timing.h"
#include "training.h"

namespace bargein {

struct FusionConfig {
  SpeechEncoderConfig speech;
  int language_layers = 0;  // > 0 when the speech branch carries infusion layers
  TextEncoderConfig text;
  int context_dim = 64;     // m
  int proj_dim = 128;       // k
  int fusion_dim = 128;     // c_out
  bool use_prompt = true;
  bool use_context = true;
  uint64_t seed = 1;

  int num_branches() const { return 1 + (use_prompt ? 1 : 0) + (use_context ? 1 : 0); }
};

nlohmann::json ToJson(const FusionConfig &c);
FusionConfig FusionConfigFromJson(const nlohmann::json &j);

// Speech (+ optional prompt, + optional context) branches, each projected to
// width k without bias, concatenated in that order, then
// r_c = tanh(W^c concat + b^c) and softmax(W^y r_c + b^y).
class FusionModel : public Trainee {
 public:
  explicit FusionModel(const FusionConfig &cfg);
  // Speech branch backed by an external adapter (frozen, parameter-free).
  FusionModel(const FusionConfig &cfg, std::shared_ptr<const SpeechEncoder> speech);

  const FusionConfig &config() const { return cfg_; }
  nn::ParamStore &params() override { return store_; }
  const nn::ParamStore &params() const { return store_; }
  const SpeechEncoder &speech_encoder() const { return *speech_; }
  const HashTextEncoder *prompt_encoder() const { return text_.get(); }
  const std::optional<ContextEmbedding> &context_embedding() const { return context_; }

  int speech_proj() const { return proj_speech_; }
  int prompt_proj() const { return proj_prompt_; }
  int fusion_w() const { return fusion_w_; }
  int fusion_b() const { return fusion_b_; }
  int head_w() const { return head_w_; }
  int head_b() const { return head_b_; }

  // Freezes or unfreezes the speech encoder (and any language layers).
  void SetSpeechTrainable(bool trainable);

  // Branch representations concatenated in fixed order, 1 x (branches * k).
  // pooled_speech, when given, replaces running the speech encoder.
  nn::Var Concat(nn::Graph &g, const DialogueTurn &turn, const Mat *pooled_speech = nullptr,
                 StageTimes *times = nullptr) const;
  // Logits 1x2; mask (same shape as the concatenation) applies dropout.
  nn::Var Logits(nn::Graph &g, const DialogueTurn &turn, const Mat *dropout_mask = nullptr,
                 const Mat *pooled_speech = nullptr, StageTimes *times = nullptr) const;

  // Inference probabilities [p_true, p_false]; times, when given, receives
  // the speech/prompt/context/head breakdown.
  Mat Forward(const DialogueTurn &turn, StageTimes *times = nullptr) const;
  // Mean cross entropy over a non-empty batch.
  double Loss(std::span<const DialogueTurn> batch) const;

  // Trainee.
  void Prepare(const Corpus &corpus, std::span<const size_t> turns) override;
  double ExampleLossAndGrad(const Corpus &corpus, size_t turn, double dropout,
                            uint64_t example_seed, nn::GradBuffer *grads) const override;
  BargeInLabel Predict(const Corpus &corpus, size_t turn) const override;
  BargeInLabel Predict(const DialogueTurn &turn) const;

  // Copies speech.* and language.* values from an infusion model's store.
  void LoadSpeechWeights(const nn::ParamStore &source);

 private:
  void Build(std::mt19937_64 &rng);

  FusionConfig cfg_;
  nn::ParamStore store_;
  std::shared_ptr<const SpeechEncoder> speech_;
  std::shared_ptr<const HashTextEncoder> text_;
  std::optional<ContextEmbedding> context_;
  int proj_speech_ = -1, proj_prompt_ = -1;
  int fusion_w_ = -1, fusion_b_ = -1, head_w_ = -1, head_b_ = -1;
  // Pooled frozen-speech features keyed by turn id; only filled when the
  // speech encoder is not trainable.
  std::map<std::string, Mat> speech_cache_;
};

struct FusionTrainResult {
  FusionModel model;
  std::vector<EpochMetrics> log;
};

// Trains a copy of `init`; returns the best-validation-F1 checkpoint.
FusionTrainResult TrainFusion(const FusionModel &init, const Corpus &corpus,
                              const TrainConfig &cfg);

}  // namespace bargein

#endif  // BARGEIN_FUSION_H_
