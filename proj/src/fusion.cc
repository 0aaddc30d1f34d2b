// src/fusion.cc

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

#include "fusion.h"

#include <cmath>

#include "error.h"

namespace bargein {

using nn::Graph;
using nn::Var;

nlohmann::json ToJson(const FusionConfig &c) {
  return {{"speech", ToJson(c.speech)},
          {"language_layers", c.language_layers},
          {"text", ToJson(c.text)},
          {"context_dim", c.context_dim},
          {"proj_dim", c.proj_dim},
          {"fusion_dim", c.fusion_dim},
          {"use_prompt", c.use_prompt},
          {"use_context", c.use_context},
          {"seed", c.seed}};
}

FusionConfig FusionConfigFromJson(const nlohmann::json &j) {
  FusionConfig c;
  c.speech = SpeechEncoderConfigFromJson(j.at("speech"));
  c.language_layers = j.at("language_layers");
  c.text = TextEncoderConfigFromJson(j.at("text"));
  c.context_dim = j.at("context_dim");
  c.proj_dim = j.at("proj_dim");
  c.fusion_dim = j.at("fusion_dim");
  c.use_prompt = j.at("use_prompt");
  c.use_context = j.at("use_context");
  c.seed = j.at("seed");
  return c;
}

FusionModel::FusionModel(const FusionConfig &cfg) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.seed);
  speech_ = std::make_shared<LexicalSpeechEncoder>(&store_, cfg.speech, cfg.language_layers,
                                                   rng);
  Build(rng);
}

FusionModel::FusionModel(const FusionConfig &cfg, std::shared_ptr<const SpeechEncoder> speech)
    : cfg_(cfg), speech_(std::move(speech)) {
  std::mt19937_64 rng(cfg.seed);
  Build(rng);
}

void FusionModel::Build(std::mt19937_64 &rng) {
  if (cfg_.proj_dim <= 0 || cfg_.fusion_dim <= 0)
    throw ConfigError("projection and fusion widths must be positive");
  const int k = cfg_.proj_dim;
  proj_speech_ = store_.Add("proj.speech", FanInUniform(k, speech_->hidden_width(), rng));
  if (cfg_.use_prompt) {
    text_ = std::make_shared<HashTextEncoder>(&store_, "text.", cfg_.text, rng);
    proj_prompt_ = store_.Add("proj.prompt", FanInUniform(k, cfg_.text.hidden, rng));
  }
  if (cfg_.use_context)
    context_.emplace(&store_, "context.", ContextRegistry::Default().size(),
                     cfg_.context_dim, k, rng);
  const int in = cfg_.num_branches() * k;
  fusion_w_ = store_.Add("fusion.w", FanInUniform(cfg_.fusion_dim, in, rng));
  fusion_b_ = store_.Add("fusion.b", Mat::Zero(1, cfg_.fusion_dim));
  head_w_ = store_.Add("head.w", FanInUniform(2, cfg_.fusion_dim, rng));
  head_b_ = store_.Add("head.b", Mat::Zero(1, 2));
}

void FusionModel::SetSpeechTrainable(bool trainable) {
  store_.SetTrainable("speech.", trainable);
  store_.SetTrainable("language.", trainable);
  if (trainable) speech_cache_.clear();
}

void FusionModel::LoadSpeechWeights(const nn::ParamStore &source) {
  for (const auto &p : source) {
    const bool speech = p.name.rfind("speech.", 0) == 0 || p.name.rfind("language.", 0) == 0;
    if (!speech) continue;
    int idx = store_.Find(p.name);
    if (idx < 0)
      throw ValidationError("speech weight " + p.name + " has no slot in the classifier");
    nn::Parameter &dst = store_.at(idx);
    if (dst.value.rows() != p.value.rows() || dst.value.cols() != p.value.cols())
      throw ValidationError("shape mismatch for " + p.name);
    dst.value = p.value;
  }
  speech_cache_.clear();
}

Var FusionModel::Concat(Graph &g, const DialogueTurn &turn, const Mat *pooled_speech,
                        StageTimes *times) const {
  std::vector<Var> parts;
  {
    StageTimer timer(times, "speech");
    Var pooled;
    if (pooled_speech) {
      pooled = g.Constant(*pooled_speech);
    } else {
      if (turn.user.samples.empty())
        throw ValidationError("turn " + turn.id + ": speech branch needs audio");
      speech_->CheckRate(turn.user);
      pooled = nn::MeanRows(g, speech_->Forward(g, store_, turn.user.samples));
    }
    parts.push_back(nn::Linear(g, pooled, g.Param(store_, proj_speech_), Var{}));
  }
  if (cfg_.use_prompt) {
    StageTimer timer(times, "prompt");
    if (turn.prompt_text.empty())
      throw ValidationError("turn " + turn.id + ": prompt branch needs prompt text");
    Var pp = g.Constant(PooledPrompt(*text_, store_, turn.prompt_text));
    parts.push_back(nn::Linear(g, pp, g.Param(store_, proj_prompt_), Var{}));
  }
  if (cfg_.use_context) {
    StageTimer timer(times, "context");
    parts.push_back(context_->Forward(g, store_, turn.context));
  }
  return parts.size() == 1 ? parts[0] : nn::ConcatCols(g, parts);
}

Var FusionModel::Logits(Graph &g, const DialogueTurn &turn, const Mat *dropout_mask,
                        const Mat *pooled_speech, StageTimes *times) const {
  Var c = Concat(g, turn, pooled_speech, times);
  StageTimer timer(times, "head");
  if (dropout_mask) c = nn::Mul(g, c, g.Constant(*dropout_mask));
  Var rc = nn::Tanh(g, nn::Linear(g, c, g.Param(store_, fusion_w_), g.Param(store_, fusion_b_)));
  return nn::Linear(g, rc, g.Param(store_, head_w_), g.Param(store_, head_b_));
}

Mat FusionModel::Forward(const DialogueTurn &turn, StageTimes *times) const {
  Graph g;
  Var logits = Logits(g, turn, nullptr, nullptr, times);
  StageTimer timer(times, "head");
  return nn::Softmax(g.value(logits));
}

double FusionModel::Loss(std::span<const DialogueTurn> batch) const {
  if (batch.empty()) throw ValidationError("loss over an empty batch");
  double total = 0.0;
  for (const auto &t : batch) {
    Graph g;
    total += g.value(nn::CrossEntropy(g, Logits(g, t), static_cast<int>(t.label)))(0, 0);
  }
  return total / static_cast<double>(batch.size());
}

void FusionModel::Prepare(const Corpus &corpus, std::span<const size_t> turns) {
  for (const auto &p : store_)
    if ((p.name.rfind("speech.", 0) == 0 || p.name.rfind("language.", 0) == 0) &&
        p.trainable)
      return;
  for (size_t i : turns) {
    const DialogueTurn &t = corpus.turns[i];
    if (speech_cache_.count(t.id)) continue;
    speech_cache_.emplace(t.id, MeanPool(speech_->Encode(store_, t.user).hidden));
  }
}

double FusionModel::ExampleLossAndGrad(const Corpus &corpus, size_t turn, double dropout,
                                       uint64_t example_seed, nn::GradBuffer *grads) const {
  const DialogueTurn &t = corpus.turns[turn];
  auto it = speech_cache_.find(t.id);
  const Mat *pooled = it == speech_cache_.end() ? nullptr : &it->second;
  Graph g(grads);
  Mat mask;
  if (dropout > 0.0) {
    const int width = cfg_.num_branches() * cfg_.proj_dim;
    mask = DropoutMask(1, width, dropout, example_seed);
  }
  Var logits = Logits(g, t, dropout > 0.0 ? &mask : nullptr, pooled);
  Var loss = nn::CrossEntropy(g, logits, static_cast<int>(t.label));
  g.Backward(loss);
  return g.value(loss)(0, 0);
}

BargeInLabel FusionModel::Predict(const DialogueTurn &turn) const {
  Mat p = Forward(turn);
  return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
}

BargeInLabel FusionModel::Predict(const Corpus &corpus, size_t turn) const {
  const DialogueTurn &t = corpus.turns[turn];
  auto it = speech_cache_.find(t.id);
  if (it == speech_cache_.end()) return Predict(t);
  Graph g;
  Mat p = nn::Softmax(g.value(Logits(g, t, nullptr, &it->second)));
  return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
}

FusionTrainResult TrainFusion(const FusionModel &init, const Corpus &corpus,
                              const TrainConfig &cfg) {
  FusionTrainResult r{init, {}};
  r.model.SetSpeechTrainable(cfg.fine_tune_speech);
  r.log = RunSupervisedTraining(&r.model, corpus, cfg);
  r.model.SetSpeechTrainable(true);
  return r;
}

}  // namespace bargein
