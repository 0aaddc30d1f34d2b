// src/config.cc

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

#include "config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "error.h"

namespace bargein {

namespace {

constexpr unsigned G = kGenData, P = kPretrainInfuse, T = kTrain, B = kTrainBaseline,
                   E = kEvaluate, L = kBenchLatency, A = kAblate;

std::string Trim(std::string_view s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<CommandSpec> &Commands() {
  static const std::vector<CommandSpec> cmds = {
      {"gen-data", kGenData, "generate a synthetic barge-in corpus"},
      {"pretrain-infuse", kPretrainInfuse,
       "lexical-infusion pretraining of the speech encoder on aligned train turns"},
      {"train", kTrain, "train a fusion classifier"},
      {"train-baseline", kTrainBaseline, "train the log-mel LSTM audio baseline"},
      {"evaluate", kEvaluate, "score trained checkpoints on a split"},
      {"bench-latency", kBenchLatency, "batch-1 single-thread latency benchmark"},
      {"ablate", kAblate, "train and score branch and infusion variants on one corpus"},
  };
  return cmds;
}

Command ParseCommand(std::string_view name) {
  for (const auto &c : Commands())
    if (name == c.name) return c.command;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view CommandName(Command c) {
  for (const auto &s : Commands())
    if (s.command == c) return s.name;
  return "?";
}

const std::vector<KeySpec> &ConfigKeys() {
  static const std::vector<KeySpec> keys = {
      {"seed", "1", G | P | T | B | A, "seed for data generation, initialisation and shuffling"},
      // gen-data
      {"n_train", "9000", G, "train turns"},
      {"n_val", "1000", G, "validation turns"},
      {"n_test", "2000", G, "test turns"},
      {"sample_rate", "16000", G, "audio sample rate in Hz"},
      {"vocab_size", "48", G, "vocabulary size (>= 31)"},
      {"ambiguity_fraction", "0.2", G,
       "fraction of turns in acoustically identical pairs with flipped labels"},
      {"noise_snr_db", "none", G, "additive white noise SNR in dB, or none"},
      {"echo_contamination", "false", G, "mix attenuated bot-voice residue into user audio"},
      {"mean_duration", "2.4", G, "mean utterance duration in seconds"},
      // inputs
      {"corpus", nullptr, P | T | B | E | L | A, "corpus manifest.jsonl or the directory holding it"},
      {"models", nullptr, E | L, "comma-separated checkpoint paths"},
      {"infusion_checkpoint", "none", T, "infusion checkpoint whose speech weights seed the model"},
      {"split", "test", E | L, "split to score: train, validation or test"},
      // speech encoder
      {"speech_hidden", "768", P | T | A, "speech encoder width h"},
      {"speech_layers", "12", P | T | A, "speech transformer layers"},
      {"speech_heads", "12", P | T | A, "attention heads"},
      {"speech_ff", "3072", P | T | A, "feed-forward width"},
      {"speech_bands", "40", P | T | A, "front-end filter pairs"},
      {"speech_window", "400", P | T | A, "front-end window in samples"},
      {"speech_stride", "320", P | T | A, "frame stride in samples"},
      // text encoder
      {"text_hidden", "768", P | T | A, "text encoder width"},
      {"text_buckets", "30522", P | T | A, "hash buckets of the text embedding table"},
      // fusion
      {"context_dim", "64", T | A, "context embedding width m"},
      {"proj_dim", "128", T | A, "branch projection width k"},
      {"fusion_dim", "128", T | A, "fusion layer width"},
      {"use_prompt", "true", T, "enable the bot prompt branch"},
      {"use_context", "true", T, "enable the dialogue context branch"},
      // supervised training
      {"optimizer", "sgd", T | B | A, "sgd or adam"},
      {"learning_rate", "5e-4", T | A, "classifier learning rate"},
      {"dropout", "0.2", T | B | A, "dropout rate on the fused representation"},
      {"epochs", "20", T | A, "classifier epochs"},
      {"batch_size", "16", T | B | A, "mini-batch size"},
      {"fine_tune_speech", "true", T | A, "update speech encoder weights during training"},
      {"clip_norm", "0", T | B | A, "gradient norm clip, 0 disables"},
      {"threads", "1", P | T | B | L | A, "worker threads (bench-latency requires 1)"},
      // infusion pretraining
      {"language_layers", "0", P, "extra language layers L"},
      {"pretrain_optimizer", "adam", P | A, "sgd or adam"},
      {"pretrain_learning_rate", "2e-4", P | A, "infusion learning rate"},
      {"pretrain_clip_norm", "5", P | A, "infusion gradient norm clip"},
      {"pretrain_steps", "800000", P | A, "infusion steps"},
      {"pretrain_batch_size", "16", P | A, "infusion batch size"},
      {"pretrain_utterances", "0", P | A, "aligned train turns used, 0 for all"},
      {"freeze_speech", "false", P | A, "with L > 0, train only the language layers"},
      // baseline
      {"num_mels", "40", B | A, "log-mel bands"},
      {"baseline_layers", "2", B | A, "LSTM layers"},
      {"baseline_hidden", "128", B | A, "LSTM width"},
      {"baseline_learning_rate", "5e-4", B | A, "baseline learning rate"},
      {"baseline_epochs", "20", B | A, "baseline epochs"},
      // reporting
      {"measure_latency", "false", E | A, "add latency columns (reports stop being reproducible)"},
      {"warmup", "10", E | L | A, "discarded warmup iterations"},
      {"runs_per_utterance", "3", E | L | A, "timed runs per utterance"},
      {"max_utterances", "0", E | L | A, "utterances timed, 0 for the whole split"},
      // ablation
      {"ablate_branches", "audio,audio+prompt,audio+context,audio+prompt+context", A,
       "branch combinations"},
      {"ablate_language_layers", "0,2,4", A, "infusion variants L, or none"},
      {"ablate_baseline", "false", A, "add the LSTM baseline row"},
  };
  return keys;
}

const KeySpec *FindKey(std::string_view name) {
  for (const auto &k : ConfigKeys())
    if (name == k.name) return &k;
  return nullptr;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  if (!FindKey(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = Trim(value);
}

void RunConfig::LoadFile(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (Trim(line).empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    try {
      Set(key, line.substr(eq + 1));
    } catch (const ConfigError &e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

bool RunConfig::IsSet(std::string_view key) const {
  return values_.count(std::string(key)) > 0;
}

std::string RunConfig::Get(std::string_view key) const {
  const KeySpec *spec = FindKey(key);
  if (!spec) throw ConfigError("unknown config key '" + std::string(key) + "'");
  auto it = values_.find(std::string(key));
  if (it != values_.end()) return it->second;
  if (!spec->default_value) throw ConfigError("missing required key '" + std::string(key) + "'");
  return spec->default_value;
}

namespace {

template <typename T>
T ParseNumber(std::string_view key, const std::string &v) {
  T out{};
  const char *end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty())
    throw ConfigError("key '" + std::string(key) + "' expects a number, got '" + v + "'");
  return out;
}

}  // namespace

int RunConfig::GetInt(std::string_view key) const { return ParseNumber<int>(key, Get(key)); }
long RunConfig::GetLong(std::string_view key) const { return ParseNumber<long>(key, Get(key)); }
uint64_t RunConfig::GetU64(std::string_view key) const {
  return ParseNumber<uint64_t>(key, Get(key));
}
double RunConfig::GetDouble(std::string_view key) const {
  return ParseNumber<double>(key, Get(key));
}

bool RunConfig::GetBool(std::string_view key) const {
  std::string v = Get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + std::string(key) + "' expects true or false, got '" + v + "'");
}

std::optional<double> RunConfig::GetOptionalDouble(std::string_view key) const {
  const std::string v = Get(key);
  if (v.empty() || v == "none") return std::nullopt;
  return ParseNumber<double>(key, v);
}

std::vector<std::string> RunConfig::GetList(std::string_view key) const {
  const std::string v = Get(key);
  std::vector<std::string> out;
  if (v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (std::string t = Trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::string RunConfig::Resolved(Command command) const {
  std::ostringstream os;
  for (const auto &k : ConfigKeys())
    if (k.commands & command) os << k.name << " = " << Get(k.name) << '\n';
  return os.str();
}

}  // namespace bargein
