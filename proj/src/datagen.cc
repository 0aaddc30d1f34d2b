// src/datagen.cc

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

#include "datagen.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "error.h"
#include "rng.h"

namespace bargein {

namespace {

constexpr const char *kConsonants = "bdgklmnprstvz";
constexpr const char *kVowels = "aeiou";
constexpr int kSyllables = 13 * 5;
constexpr int kMaxVocab = kSyllables * kSyllables;
constexpr int kHarmonics = 8;
constexpr double kRamp = 0.008;  // seconds

std::string Syllable(int i) {
  return std::string{kConsonants[i / 5], kVowels[i % 5]};
}

struct Timbre {
  double f0 = 0.0;
  double amp[kHarmonics] = {};
  double phase[kHarmonics] = {};
};

Timbre MakeTimbre(double f0, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.1, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  Timbre t;
  t.f0 = f0;
  double total = 0.0;
  for (int k = 0; k < kHarmonics; ++k) {
    t.amp[k] = amp(rng);
    t.phase[k] = ph(rng);
    total += t.amp[k];
  }
  for (double &a : t.amp) a /= total;
  return t;
}

// Stem timbre of a word: fundamentals on a log grid over 80-640 Hz in word
// order, so a response set occupies a contiguous pitch range.
Timbre StemTimbre(int word, int vocab_size) {
  const double frac = (word + 0.5) / vocab_size;
  return MakeTimbre(80.0 * std::pow(2.0, 3.0 * frac), MixSeed(0x57e3, word));
}

Timbre EndingTimbre(int ending) {
  static const double kF0[4] = {115.0, 155.0, 205.0, 265.0};
  return MakeTimbre(kF0[ending], MixSeed(0xe4d1, ending));
}

void AddSegment(std::vector<double> *buf, size_t start, size_t count, const Timbre &t,
                double f0_scale, double amplitude, int sample_rate) {
  const double ramp = kRamp * sample_rate;
  for (size_t n = 0; n < count && start + n < buf->size(); ++n) {
    const double time = static_cast<double>(n) / sample_rate;
    double env = 1.0;
    if (n < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
    if (count - n < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (count - n) / ramp));
    double s = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      const double f = (k + 1) * t.f0 * f0_scale;
      if (f >= 0.45 * sample_rate) break;
      s += t.amp[k] * std::sin(2.0 * std::numbers::pi * f * time + t.phase[k]);
    }
    (*buf)[start + n] += amplitude * env * s;
  }
}

const std::vector<std::vector<std::string>> &AllPrompts() {
  static const std::vector<std::vector<std::string>> prompts = {
      {"would you like to book a car", "shall i reserve a ride for you"},
      {"do you want to check your balance", "should i read your account summary"},
      {"can i help you with a new order", "would you like to place an order"},
      {"which car type would you like, sedan, suv or hatchback",
       "what kind of vehicle do you need"},
      {"what time should the pickup be", "when do you want to leave"},
      {"how many passengers are travelling", "how many seats do you need"},
      {"what is your destination city", "where are you heading today"},
      {"which payment method do you prefer", "how would you like to pay"},
      {"what date works best for you", "which day should i schedule"},
      {"please confirm your phone number", "what number can we reach you at"},
  };
  return prompts;
}

}  // namespace

void GenConfig::Validate() const {
  const int d = ContextRegistry::Default().size();
  if (n_train < 2 || n_val < 2 || n_test < 2)
    throw ConfigError("every split needs at least 2 turns");
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (vocab_size < kResponsesPerContext)
    throw ConfigError("vocab_size is smaller than an expected-response set");
  if (vocab_size < d * kResponsesPerContext + 1)
    throw ConfigError("vocab_size must be at least " +
                      std::to_string(d * kResponsesPerContext + 1) +
                      " (disjoint response sets plus side-talk words)");
  if (vocab_size > kMaxVocab)
    throw ConfigError("vocab_size must be at most " + std::to_string(kMaxVocab));
  if (ambiguity_fraction < 0.0 || ambiguity_fraction > 1.0)
    throw ConfigError("ambiguity_fraction must lie in [0, 1]");
  if (!(mean_duration > 0.0)) throw ConfigError("mean_duration must be positive");
}

nlohmann::json ToJson(const GenConfig &c) {
  nlohmann::json j = {{"n_train", c.n_train}, {"n_val", c.n_val}, {"n_test", c.n_test},
                      {"seed", c.seed}, {"sample_rate", c.sample_rate},
                      {"vocab_size", c.vocab_size},
                      {"ambiguity_fraction", c.ambiguity_fraction},
                      {"echo_contamination", c.echo_contamination},
                      {"mean_duration", c.mean_duration}};
  j["noise_snr_db"] = c.noise_snr_db ? nlohmann::json(*c.noise_snr_db) : nlohmann::json();
  return j;
}

Vocabulary::Vocabulary(int size) {
  if (size < 0 || size > kMaxVocab) throw ConfigError("vocabulary size out of range");
  for (int i = 0; i < size; ++i) {
    const int a = i % kSyllables;
    const int b = (i / kSyllables + 7 * a + 3) % kSyllables;
    words_.push_back(Syllable(a) + Syllable(b));
  }
}

int Vocabulary::Find(const std::string &w) const {
  auto it = std::find(words_.begin(), words_.end(), w);
  return it == words_.end() ? -1 : static_cast<int>(it - words_.begin());
}

std::vector<int> Vocabulary::ResponseSet(int context) const {
  std::vector<int> out;
  for (int j = 0; j < kResponsesPerContext; ++j) out.push_back(context * kResponsesPerContext + j);
  return out;
}

int Vocabulary::num_response_words() const {
  return ContextRegistry::Default().size() * kResponsesPerContext;
}

const std::vector<std::string> &PromptsFor(int context) { return AllPrompts().at(context); }

std::vector<float> RenderWords(const std::vector<int> &words, const Vocabulary &vocab,
                               int sample_rate, double target_duration, uint64_t seed,
                               std::vector<WordAlignment> *alignment) {
  std::mt19937_64 rng(seed);
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  struct Plan {
    double stem, ending, gap, amplitude, f0_scale;
  };
  const double lead = U(0.1, 0.3);
  std::vector<Plan> plan;
  double speech = 0.0;
  for (size_t i = 0; i < words.size(); ++i) {
    Plan p{U(0.16, 0.26), U(0.08, 0.12), i + 1 < words.size() ? U(0.04, 0.12) : 0.0,
           U(0.3, 0.6), U(0.99, 1.01)};
    speech += p.stem + p.ending + p.gap;
    plan.push_back(p);
  }
  const double duration = std::max(target_duration, lead + speech + 0.1);
  std::vector<double> buf(static_cast<size_t>(std::llround(duration * sample_rate)), 0.0);
  alignment->clear();
  double t = lead;
  for (size_t i = 0; i < words.size(); ++i) {
    const Plan &p = plan[i];
    const size_t s0 = static_cast<size_t>(std::llround(t * sample_rate));
    const size_t n_stem = static_cast<size_t>(std::llround(p.stem * sample_rate));
    const size_t n_end = static_cast<size_t>(std::llround(p.ending * sample_rate));
    AddSegment(&buf, s0, n_stem, StemTimbre(words[i], vocab.size()), p.f0_scale, p.amplitude, sample_rate);
    AddSegment(&buf, s0 + n_stem, n_end, EndingTimbre(Vocabulary::EndingOf(words[i])),
               p.f0_scale, p.amplitude, sample_rate);
    const size_t s1 = s0 + n_stem + n_end;
    alignment->push_back({vocab.word(words[i]), static_cast<double>(s0) / sample_rate,
                          static_cast<double>(s1) / sample_rate});
    t = static_cast<double>(s1) / sample_rate + p.gap;
  }
  std::vector<float> out(buf.size());
  for (size_t n = 0; n < buf.size(); ++n) out[n] = QuantizePcm16(buf[n]);
  return out;
}

double ExpectedAudioOnlyCeiling(const GenConfig &cfg) {
  return 1.0 - cfg.ambiguity_fraction / 2.0;
}

namespace {

enum class Kind { kPair, kTrueSingle, kFalseSingle };

void AddNoiseAndEcho(std::vector<float> *samples, const GenConfig &cfg, std::mt19937_64 &rng) {
  std::vector<double> x(samples->begin(), samples->end());
  if (cfg.echo_contamination) {
    // Attenuated residue of the bot voice over the first half second. The
    // bot timbre is fixed so paired turns keep identical audio.
    static const Timbre bot = MakeTimbre(130.0, 0xb07);
    const size_t n = std::min(x.size(), static_cast<size_t>(0.5 * cfg.sample_rate));
    std::vector<double> echo(x.size(), 0.0);
    AddSegment(&echo, 0, n, bot, 1.0, 0.08, cfg.sample_rate);
    for (size_t i = 0; i < x.size(); ++i) x[i] += echo[i];
  }
  if (cfg.noise_snr_db) {
    double power = 0.0;
    for (double v : x) power += v * v;
    power /= static_cast<double>(x.size());
    const double sigma = std::sqrt(power / std::pow(10.0, *cfg.noise_snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, sigma);
    for (double &v : x) v += noise(rng);
  }
  for (size_t i = 0; i < x.size(); ++i) (*samples)[i] = QuantizePcm16(x[i]);
}

}  // namespace

Corpus Generate(const GenConfig &cfg) {
  cfg.Validate();
  const Vocabulary vocab(cfg.vocab_size);
  const auto &reg = ContextRegistry::Default();
  const int d = reg.size();
  const int side_begin = vocab.num_response_words();
  Corpus corpus;
  corpus.seed = cfg.seed;

  const std::pair<Split, int> splits[] = {
      {Split::kTrain, cfg.n_train}, {Split::kValidation, cfg.n_val}, {Split::kTest, cfg.n_test}};
  for (int si = 0; si < 3; ++si) {
    const auto [split, n] = splits[si];
    const int n_true = n / 2, n_false = n - n_true;
    const int n_pairs = static_cast<int>(std::min<long>(
        {static_cast<long>(n_true), static_cast<long>(n_false),
         std::lround(cfg.ambiguity_fraction * n / 2.0)}));
    std::vector<Kind> kinds(n_pairs, Kind::kPair);
    kinds.insert(kinds.end(), n_true - n_pairs, Kind::kTrueSingle);
    kinds.insert(kinds.end(), n_false - n_pairs, Kind::kFalseSingle);

    std::vector<DialogueTurn> turns;
    for (size_t slot = 0; slot < kinds.size(); ++slot) {
      std::mt19937_64 rng(MixSeed(cfg.seed, static_cast<uint64_t>(si) + 1, slot));
      auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
      const int ctx = pick(0, d - 1);
      const int n_words = pick(1, 3);
      std::vector<int> words;
      for (int w = 0; w < n_words; ++w) {
        if (kinds[slot] == Kind::kFalseSingle)
          words.push_back(pick(side_begin, cfg.vocab_size - 1));
        else
          words.push_back(vocab.ResponseSet(ctx)[pick(0, kResponsesPerContext - 1)]);
      }
      const double target =
          cfg.mean_duration * std::uniform_real_distribution<double>(0.75, 1.25)(rng);
      DialogueTurn t;
      t.split = split;
      t.user.sample_rate = cfg.sample_rate;
      std::vector<WordAlignment> al;
      t.user.samples = RenderWords(words, vocab, cfg.sample_rate, target, rng(), &al);
      t.user.alignment = std::move(al);
      AddNoiseAndEcho(&t.user.samples, cfg, rng);
      t.context = reg.at(ctx);
      t.prompt_text = PromptsFor(ctx)[pick(0, 1)];
      t.label = kinds[slot] == Kind::kFalseSingle ? BargeInLabel::kFalse : BargeInLabel::kTrue;
      if (kinds[slot] == Kind::kPair) {
        DialogueTurn flipped = t;
        int other = pick(0, d - 2);
        if (other >= ctx) ++other;
        flipped.context = reg.at(other);
        flipped.prompt_text = PromptsFor(other)[pick(0, 1)];
        flipped.label = BargeInLabel::kFalse;
        turns.push_back(std::move(t));
        turns.push_back(std::move(flipped));
      } else {
        turns.push_back(std::move(t));
      }
    }
    std::mt19937_64 order(MixSeed(cfg.seed, static_cast<uint64_t>(si) + 1, ~0ULL));
    std::shuffle(turns.begin(), turns.end(), order);
    char id[64];
    for (size_t i = 0; i < turns.size(); ++i) {
      std::snprintf(id, sizeof(id), "%s-%05zu", std::string(SplitName(split)).c_str(), i);
      turns[i].id = id;
      corpus.turns.push_back(std::move(turns[i]));
    }
  }
  return corpus;
}

}  // namespace bargein
