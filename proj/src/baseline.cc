// src/baseline.cc

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

#include "baseline.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "encoders.h"
#include "error.h"

namespace bargein {

using nn::Graph;
using nn::Var;

namespace {

// FFTW planning is not thread safe; execution on new arrays is.
std::mutex &PlanMutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void FilterbankConfig::Validate() const {
  if (num_mels < 1) throw ConfigError("num_mels must be >= 1");
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (!(hop > 0.0) || hop > window) throw ConfigError("need 0 < hop <= window");
  if (window_samples() < 2 || hop_samples() < 1)
    throw ConfigError("window/hop too short for the sample rate");
}

int FilterbankConfig::window_samples() const {
  return static_cast<int>(std::lround(window * sample_rate));
}

int FilterbankConfig::hop_samples() const {
  return static_cast<int>(std::lround(hop * sample_rate));
}

nlohmann::json ToJson(const FilterbankConfig &c) {
  return {{"num_mels", c.num_mels}, {"window", c.window}, {"hop", c.hop},
          {"sample_rate", c.sample_rate}};
}

FilterbankConfig FilterbankConfigFromJson(const nlohmann::json &j) {
  FilterbankConfig c;
  c.num_mels = j.at("num_mels");
  c.window = j.at("window");
  c.hop = j.at("hop");
  c.sample_rate = j.at("sample_rate");
  return c;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Filterbank::Filterbank(const FilterbankConfig &cfg) : cfg_(cfg) {
  cfg.Validate();
  win_ = cfg.window_samples();
  hop_ = cfg.hop_samples();
  fft_size_ = 1;
  while (fft_size_ < win_) fft_size_ *= 2;
  window_.resize(win_);
  for (int n = 0; n < win_; ++n)
    window_[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (win_ - 1));

  const int bins = fft_size_ / 2 + 1;
  const double top = HzToMel(cfg.sample_rate / 2.0);
  std::vector<double> edges(cfg.num_mels + 2);
  for (int i = 0; i < cfg.num_mels + 2; ++i) edges[i] = MelToHz(top * i / (cfg.num_mels + 1));
  mel_ = Mat::Zero(cfg.num_mels, bins);
  for (int m = 0; m < cfg.num_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    centers_.push_back(mid);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / fft_size_;
      if (f > lo && f < mid)
        mel_(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        mel_(m, k) = (hi - f) / (hi - mid);
    }
  }

  std::lock_guard<std::mutex> lock(PlanMutex());
  double *in = fftw_alloc_real(fft_size_);
  fftw_complex *out = fftw_alloc_complex(bins);
  plan_ = fftw_plan_dft_r2c_1d(fft_size_, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  if (!plan_) throw Error(ErrorKind::kRuntime, "FFTW planning failed");
}

Filterbank::~Filterbank() {
  std::lock_guard<std::mutex> lock(PlanMutex());
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

int Filterbank::FrameCount(size_t num_samples) const {
  if (num_samples < static_cast<size_t>(win_)) return 0;
  return static_cast<int>((num_samples - win_) / hop_) + 1;
}

Mat Filterbank::Compute(const Utterance &u) const {
  if (u.sample_rate != cfg_.sample_rate)
    throw ValidationError("filterbank expects " + std::to_string(cfg_.sample_rate) +
                          " Hz audio, got " + std::to_string(u.sample_rate));
  return Compute(u.samples);
}

Mat Filterbank::Compute(std::span<const float> samples) const {
  const int frames = FrameCount(samples.size());
  if (frames == 0) throw ValidationError("audio is shorter than one analysis window");
  const int bins = fft_size_ / 2 + 1;
  double *in = fftw_alloc_real(fft_size_);
  fftw_complex *out = fftw_alloc_complex(bins);
  Mat power(frames, bins);
  for (int t = 0; t < frames; ++t) {
    const size_t s0 = static_cast<size_t>(t) * hop_;
    for (int n = 0; n < fft_size_; ++n) in[n] = n < win_ ? samples[s0 + n] * window_[n] : 0.0;
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_), in, out);
    for (int k = 0; k < bins; ++k) power(t, k) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
  fftw_free(in);
  fftw_free(out);
  Mat e = power * mel_.transpose();
  return e.array().max(kLogFloor).log().matrix();
}

nlohmann::json ToJson(const BaselineConfig &c) {
  return {{"fbank", ToJson(c.fbank)}, {"layers", c.layers}, {"hidden", c.hidden},
          {"seed", c.seed}};
}

BaselineConfig BaselineConfigFromJson(const nlohmann::json &j) {
  BaselineConfig c;
  c.fbank = FilterbankConfigFromJson(j.at("fbank"));
  c.layers = j.at("layers");
  c.hidden = j.at("hidden");
  c.seed = j.at("seed");
  return c;
}

RecurrentBaseline::RecurrentBaseline(const BaselineConfig &cfg)
    : cfg_(cfg), fbank_(std::make_shared<Filterbank>(cfg.fbank)) {
  if (cfg.layers < 1 || cfg.hidden < 1) throw ConfigError("baseline needs >= 1 layer of width >= 1");
  std::mt19937_64 rng(cfg.seed);
  const int h = cfg.hidden;
  int in = cfg.fbank.num_mels;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "lstm.layer" + std::to_string(l) + ".";
    Layer layer;
    layer.wx = store_.Add(p + "wx", FanInUniform(4 * h, in, rng) * std::sqrt(in / double(h)));
    layer.wh = store_.Add(p + "wh", FanInUniform(4 * h, h, rng));
    Mat b = Mat::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();  // forget gate
    layer.b = store_.Add(p + "b", std::move(b));
    layers_.push_back(layer);
    in = h;
  }
  head_w_ = store_.Add("head.w", FanInUniform(2, h, rng));
  head_b_ = store_.Add("head.b", Mat::Zero(1, 2));
}

Var RecurrentBaseline::Logits(Graph &g, const Mat &features, const Mat *dropout_mask) const {
  const int h = cfg_.hidden;
  Var seq = g.Constant(features);
  const int steps = static_cast<int>(features.rows());
  Var last;
  for (const Layer &layer : layers_) {
    Var xw = nn::Linear(g, seq, g.Param(store_, layer.wx), g.Param(store_, layer.b));
    Var wh = g.Param(store_, layer.wh);
    Var hs = g.Constant(Mat::Zero(1, h)), cs = g.Constant(Mat::Zero(1, h));
    std::vector<Var> outputs;
    outputs.reserve(steps);
    for (int t = 0; t < steps; ++t) {
      Var gates = nn::Add(g, nn::GatherRows(g, xw, {t}), nn::MatMulNT(g, hs, wh));
      Var i = nn::Sigmoid(g, nn::SliceCols(g, gates, 0, h));
      Var f = nn::Sigmoid(g, nn::SliceCols(g, gates, h, h));
      Var c = nn::Tanh(g, nn::SliceCols(g, gates, 2 * h, h));
      Var o = nn::Sigmoid(g, nn::SliceCols(g, gates, 3 * h, h));
      cs = nn::Add(g, nn::Mul(g, f, cs), nn::Mul(g, i, c));
      hs = nn::Mul(g, o, nn::Tanh(g, cs));
      outputs.push_back(hs);
    }
    last = hs;
    if (&layer != &layers_.back()) seq = nn::ConcatRows(g, outputs);
  }
  if (dropout_mask) last = nn::Mul(g, last, g.Constant(*dropout_mask));
  return nn::Linear(g, last, g.Param(store_, head_w_), g.Param(store_, head_b_));
}

Mat RecurrentBaseline::Forward(const Utterance &u, StageTimes *times) const {
  Mat features;
  {
    StageTimer timer(times, "filterbank");
    features = fbank_->Compute(u);
  }
  StageTimer timer(times, "lstm");
  Graph g;
  return nn::Softmax(g.value(Logits(g, features)));
}

void RecurrentBaseline::Prepare(const Corpus &corpus, std::span<const size_t> turns) {
  for (size_t i : turns) {
    const DialogueTurn &t = corpus.turns[i];
    if (!cache_.count(t.id)) cache_.emplace(t.id, fbank_->Compute(t.user));
  }
}

const Mat &RecurrentBaseline::Features(const Corpus &corpus, size_t turn, Mat *scratch) const {
  auto it = cache_.find(corpus.turns[turn].id);
  if (it != cache_.end()) return it->second;
  *scratch = fbank_->Compute(corpus.turns[turn].user);
  return *scratch;
}

double RecurrentBaseline::ExampleLossAndGrad(const Corpus &corpus, size_t turn, double dropout,
                                             uint64_t example_seed, nn::GradBuffer *grads) const {
  Mat scratch;
  const Mat &x = Features(corpus, turn, &scratch);
  Graph g(grads);
  Mat mask;
  if (dropout > 0.0) mask = DropoutMask(1, cfg_.hidden, dropout, example_seed);
  Var logits = Logits(g, x, dropout > 0.0 ? &mask : nullptr);
  Var loss = nn::CrossEntropy(g, logits, static_cast<int>(corpus.turns[turn].label));
  g.Backward(loss);
  return g.value(loss)(0, 0);
}

BargeInLabel RecurrentBaseline::Predict(const Utterance &u) const {
  Mat p = Forward(u);
  return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
}

BargeInLabel RecurrentBaseline::Predict(const Corpus &corpus, size_t turn) const {
  Mat scratch;
  const Mat &x = Features(corpus, turn, &scratch);
  Graph g;
  Mat p = nn::Softmax(g.value(Logits(g, x)));
  return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
}

BaselineTrainResult TrainBaseline(const RecurrentBaseline &init, const Corpus &corpus,
                                  const TrainConfig &cfg) {
  BaselineTrainResult r{init, {}};
  r.log = RunSupervisedTraining(&r.model, corpus, cfg);
  return r;
}

}  // namespace bargein
