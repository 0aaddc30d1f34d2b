// src/encoders.h

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

#ifndef BARGEIN_ENCODERS_H_
#define BARGEIN_ENCODERS_H_

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.h"
#include "graph.h"
#include "json.hpp"

namespace bargein {

using nn::Mat;

struct EncoderOutput {
  Mat hidden;                // frames x width
  double frame_stride = 0.0; // seconds per frame
};

// Column means of an M x h matrix; M must be >= 1.
Mat MeanPool(const Mat &hidden);

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for an out x in weight matrix.
Mat FanInUniform(int out, int in, std::mt19937_64 &rng);

// Pre-LayerNorm transformer layers with bidirectional multi-head attention
// and a final LayerNorm. An empty stack is the identity.
class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(nn::ParamStore *store, const std::string &prefix, int layers,
                   int width, int heads, int ff, std::mt19937_64 &rng);

  nn::Var Forward(nn::Graph &g, const nn::ParamStore &store, nn::Var x) const;
  int layers() const { return static_cast<int>(layers_.size()); }

 private:
  struct Layer {
    int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  std::vector<Layer> layers_;
  int lnf_g_ = -1, lnf_b_ = -1;
  int heads_ = 1;
};

// Speech encoder contract: samples at a fixed rate in, frame-major hidden
// states out. Implementations read their weights from a ParamStore owned by
// the enclosing model.
class SpeechEncoder {
 public:
  virtual ~SpeechEncoder() = default;
  virtual int sample_rate() const = 0;
  virtual int hidden_width() const = 0;
  virtual double frame_stride() const = 0;
  virtual int FrameCount(size_t num_samples) const = 0;
  virtual nn::Var Forward(nn::Graph &g, const nn::ParamStore &store,
                          std::span<const float> samples) const = 0;

  // Inference-mode encode; throws ConfigError on a sample-rate mismatch.
  EncoderOutput Encode(const nn::ParamStore &store, const Utterance &u) const;
  void CheckRate(const Utterance &u) const;
};

struct SpeechEncoderConfig {
  int sample_rate = 16000;
  int window = 400;   // samples per analysis frame
  int stride = 320;   // 20 ms at 16 kHz
  int bands = 40;     // front-end filter pairs
  int hidden = 768;
  int layers = 12;
  int heads = 12;
  int ff = 3072;
  double min_freq = 60.0;
  double max_freq = 4000.0;
};

nlohmann::json ToJson(const SpeechEncoderConfig &c);
SpeechEncoderConfig SpeechEncoderConfigFromJson(const nlohmann::json &j);

// Strided convolution front-end (quadrature filter pairs initialized as
// Hann-windowed sinusoids on a mel grid, log pair energy) followed by a
// linear lift to the hidden width, sinusoidal positions and a transformer.
// Frame count is ceil(num_samples / stride); the last window is zero padded.
class ConvTransformerEncoder : public SpeechEncoder {
 public:
  ConvTransformerEncoder(nn::ParamStore *store, const std::string &prefix,
                         const SpeechEncoderConfig &cfg, std::mt19937_64 &rng);

  int sample_rate() const override { return cfg_.sample_rate; }
  int hidden_width() const override { return cfg_.hidden; }
  double frame_stride() const override {
    return static_cast<double>(cfg_.stride) / cfg_.sample_rate;
  }
  int FrameCount(size_t num_samples) const override;
  nn::Var Forward(nn::Graph &g, const nn::ParamStore &store,
                  std::span<const float> samples) const override;
  const SpeechEncoderConfig &config() const { return cfg_; }

 private:
  SpeechEncoderConfig cfg_;
  int kernel_ = -1, lift_w_ = -1, lift_b_ = -1, ln_g_ = -1, ln_b_ = -1;
  Mat pairing_;
  TransformerStack stack_;
};

// Speech encoder followed by L extra transformer ("language") layers. With
// L > 0 the representation is [language output | encoder output] per frame
// (width 2h); with L = 0 it is the encoder output itself.
class LexicalSpeechEncoder : public SpeechEncoder {
 public:
  LexicalSpeechEncoder(nn::ParamStore *store, const SpeechEncoderConfig &cfg,
                       int language_layers, std::mt19937_64 &rng);

  int sample_rate() const override { return base_.sample_rate(); }
  int hidden_width() const override {
    return language_.layers() > 0 ? 2 * base_.hidden_width() : base_.hidden_width();
  }
  double frame_stride() const override { return base_.frame_stride(); }
  int FrameCount(size_t n) const override { return base_.FrameCount(n); }
  nn::Var Forward(nn::Graph &g, const nn::ParamStore &store,
                  std::span<const float> samples) const override;

  struct Streams {
    nn::Var encoder;   // final speech-encoder layer
    nn::Var language;  // final language layer (== encoder when L = 0)
  };
  Streams ForwardStreams(nn::Graph &g, const nn::ParamStore &store,
                         std::span<const float> samples) const;
  int language_layers() const { return language_.layers(); }
  int base_width() const { return base_.hidden_width(); }
  const SpeechEncoderConfig &config() const { return base_.config(); }

 private:
  ConvTransformerEncoder base_;
  TransformerStack language_;
};

// Wraps an external feature extractor (e.g. a pretrained checkpoint served
// elsewhere) behind the speech encoder contract. Always frozen.
class ExternalSpeechAdapter : public SpeechEncoder {
 public:
  using Fn = std::function<EncoderOutput(std::span<const float>, int)>;
  ExternalSpeechAdapter(Fn fn, int sample_rate, int width, double stride,
                        std::function<int(size_t)> frame_count)
      : fn_(std::move(fn)), rate_(sample_rate), width_(width), stride_(stride),
        frame_count_(std::move(frame_count)) {}
  int sample_rate() const override { return rate_; }
  int hidden_width() const override { return width_; }
  double frame_stride() const override { return stride_; }
  int FrameCount(size_t n) const override { return frame_count_(n); }
  nn::Var Forward(nn::Graph &g, const nn::ParamStore &store,
                  std::span<const float> samples) const override;

 private:
  Fn fn_;
  int rate_, width_;
  double stride_;
  std::function<int(size_t)> frame_count_;
};

struct Token {
  int id = 0;
  std::string piece;
  int word = 0;  // index of the whitespace word the piece came from
};

class PromptEncoder {
 public:
  virtual ~PromptEncoder() = default;
  virtual std::vector<Token> Tokenize(std::string_view text) const = 0;
  virtual int hidden_width() const = 0;
  // N x h hidden states for a token sequence.
  virtual Mat Hidden(const nn::ParamStore &store, const std::vector<Token> &tokens) const = 0;
};

struct TextEncoderConfig {
  int buckets = 30522;
  int hidden = 768;
  int window = 1;            // neighbours on each side mixed into a token
  double context_weight = 0.5;
  int piece_len = 3;         // code points per subword piece
};

nlohmann::json ToJson(const TextEncoderConfig &c);
TextEncoderConfig TextEncoderConfigFromJson(const nlohmann::json &j);

// Rule-based subword tokenizer plus a frozen hash-bucket embedding table.
// Token i's hidden state is e_i + context_weight * mean(e_j, 0 < |i-j| <= window).
class HashTextEncoder : public PromptEncoder {
 public:
  HashTextEncoder(nn::ParamStore *store, const std::string &prefix,
                  const TextEncoderConfig &cfg, std::mt19937_64 &rng);
  std::vector<Token> Tokenize(std::string_view text) const override;
  int hidden_width() const override { return cfg_.hidden; }
  Mat Hidden(const nn::ParamStore &store, const std::vector<Token> &tokens) const override;
  const TextEncoderConfig &config() const { return cfg_; }

 private:
  TextEncoderConfig cfg_;
  int table_ = -1;
};

// d x m trainable table followed by a k x m projection; r_d = W^d row_id(E).
class ContextEmbedding {
 public:
  ContextEmbedding() = default;
  ContextEmbedding(nn::ParamStore *store, const std::string &prefix, int labels,
                   int dim, int proj, std::mt19937_64 &rng);
  nn::Var Forward(nn::Graph &g, const nn::ParamStore &store,
                  const DialogueContextLabel &label) const;
  int labels() const { return labels_; }
  int table_index() const { return table_; }
  int proj_index() const { return proj_; }

 private:
  int labels_ = 0, table_ = -1, proj_ = -1;
};

// Inference helpers for the three branch representations.
struct SpeechBranchResult {
  Mat r_x;  // 1 x k
  EncoderOutput out;
};
SpeechBranchResult EncodeSpeech(const SpeechEncoder &enc, const nn::ParamStore &store,
                                int projection, const Utterance &u);
Mat EncodePrompt(const PromptEncoder &enc, const nn::ParamStore &store, int projection,
                 std::string_view text);
Mat EncodeContext(const ContextEmbedding &ce, const nn::ParamStore &store,
                  const DialogueContextLabel &label);

// Mean of the prompt's token hidden states (before projection).
Mat PooledPrompt(const PromptEncoder &enc, const nn::ParamStore &store, std::string_view text);

}  // namespace bargein

#endif  // BARGEIN_ENCODERS_H_
