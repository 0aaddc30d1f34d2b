// src/baseline.h

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

#ifndef BARGEIN_BASELINE_H_
#define BARGEIN_BASELINE_H_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "corpus.h"
#include "graph.h"
#include "json.hpp"
#include "timing.h"
#include "training.h"

namespace bargein {

using nn::Mat;

struct FilterbankConfig {
  int num_mels = 40;
  double window = 0.025;  // seconds
  double hop = 0.010;     // seconds
  int sample_rate = 16000;

  void Validate() const;
  int window_samples() const;
  int hop_samples() const;
};

nlohmann::json ToJson(const FilterbankConfig &c);
FilterbankConfig FilterbankConfigFromJson(const nlohmann::json &j);

inline constexpr double kLogFloor = 1e-10;

// Log-mel energies of Hamming-windowed power spectra (HTK mel scale,
// triangular filters up to Nyquist). Frame count is
// floor((len - window) / hop) + 1.
class Filterbank {
 public:
  explicit Filterbank(const FilterbankConfig &cfg);
  ~Filterbank();
  Filterbank(const Filterbank &) = delete;
  Filterbank &operator=(const Filterbank &) = delete;

  Mat Compute(std::span<const float> samples) const;
  Mat Compute(const Utterance &u) const;
  int FrameCount(size_t num_samples) const;
  int fft_size() const { return fft_size_; }
  // num_mels x (fft_size/2 + 1) triangular weights.
  const Mat &mel_weights() const { return mel_; }
  // Center frequency of each band in Hz.
  const std::vector<double> &centers() const { return centers_; }
  const FilterbankConfig &config() const { return cfg_; }

 private:
  FilterbankConfig cfg_;
  int win_ = 0, hop_ = 0, fft_size_ = 0;
  std::vector<double> window_;
  std::vector<double> centers_;
  Mat mel_;
  void *plan_ = nullptr;
};

double HzToMel(double hz);
double MelToHz(double mel);

struct BaselineConfig {
  FilterbankConfig fbank;
  int layers = 2;
  int hidden = 128;
  uint64_t seed = 1;
};

nlohmann::json ToJson(const BaselineConfig &c);
BaselineConfig BaselineConfigFromJson(const nlohmann::json &j);

// Stacked LSTM over filterbank frames; the head reads the last hidden state.
class RecurrentBaseline : public Trainee {
 public:
  explicit RecurrentBaseline(const BaselineConfig &cfg);

  const BaselineConfig &config() const { return cfg_; }
  nn::ParamStore &params() override { return store_; }
  const nn::ParamStore &params() const { return store_; }
  const Filterbank &filterbank() const { return *fbank_; }

  // Logits 1x2 for a feature matrix (frames x mels); mask (1 x hidden)
  // applies dropout to the final hidden state.
  nn::Var Logits(nn::Graph &g, const Mat &features, const Mat *dropout_mask = nullptr) const;
  // [p_true, p_false]; times receives the filterbank/lstm breakdown.
  Mat Forward(const Utterance &u, StageTimes *times = nullptr) const;

  void Prepare(const Corpus &corpus, std::span<const size_t> turns) override;
  double ExampleLossAndGrad(const Corpus &corpus, size_t turn, double dropout,
                            uint64_t example_seed, nn::GradBuffer *grads) const override;
  BargeInLabel Predict(const Corpus &corpus, size_t turn) const override;
  BargeInLabel Predict(const Utterance &u) const;

 private:
  struct Layer {
    int wx, wh, b;
  };
  const Mat &Features(const Corpus &corpus, size_t turn, Mat *scratch) const;

  BaselineConfig cfg_;
  nn::ParamStore store_;
  std::shared_ptr<const Filterbank> fbank_;
  std::vector<Layer> layers_;
  int head_w_ = -1, head_b_ = -1;
  std::map<std::string, Mat> cache_;
};

struct BaselineTrainResult {
  RecurrentBaseline model;
  std::vector<EpochMetrics> log;
};

BaselineTrainResult TrainBaseline(const RecurrentBaseline &init, const Corpus &corpus,
                                  const TrainConfig &cfg);

}  // namespace bargein

#endif  // BARGEIN_BASELINE_H_
