// tests/test_datagen.cc

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

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "corpus.h"
#include "datagen.h"
#include "doctest.h"
#include "error.h"

using namespace bargein;
namespace fs = std::filesystem;

namespace {

GenConfig Small(double ambiguity = 0.2, uint64_t seed = 3) {
  GenConfig c;
  c.n_train = 60;
  c.n_val = 20;
  c.n_test = 21;
  c.seed = seed;
  c.ambiguity_fraction = ambiguity;
  c.mean_duration = 0.5;
  return c;
}

fs::path TempDir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("bargein-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("vocabulary layout") {
  Vocabulary v(48);
  std::set<std::string> words;
  for (int i = 0; i < v.size(); ++i) words.insert(v.word(i));
  CHECK(words.size() == 48);
  CHECK(v.num_response_words() == 30);
  for (int c = 0; c < 10; ++c) {
    const auto set = v.ResponseSet(c);
    REQUIRE(set.size() == 3);
    for (int w : set) CHECK(w / 3 == c);
  }
  CHECK(v.Find(v.word(17)) == 17);
  CHECK(v.Find("nosuchword") == -1);
}

TEST_CASE("split sizes and balance") {
  const Corpus c = Generate(Small());
  CHECK(c.CountSplit(Split::kTrain) == 60);
  CHECK(c.CountSplit(Split::kValidation) == 20);
  CHECK(c.CountSplit(Split::kTest) == 21);
  CHECK(IsBalanced(c));
  c.Validate();
  std::set<std::string> ids;
  for (const auto &t : c.turns) ids.insert(t.id);
  CHECK(ids.size() == c.turns.size());
}

TEST_CASE("paired turns share audio with flipped context and label") {
  const Corpus c = Generate(Small(0.4));
  std::map<std::vector<float>, std::vector<const DialogueTurn *>> by_audio;
  for (const auto &t : c.turns) by_audio[t.user.samples].push_back(&t);
  int pairs = 0;
  for (const auto &[audio, turns] : by_audio) {
    REQUIRE(turns.size() <= 2);
    if (turns.size() < 2) continue;
    ++pairs;
    CHECK(turns[0]->split == turns[1]->split);
    CHECK(turns[0]->label != turns[1]->label);
    CHECK(turns[0]->context.id != turns[1]->context.id);
  }
  // round(0.4 * n / 2) pairs per split.
  CHECK(pairs == 12 + 4 + 4);
}

TEST_CASE("no shared audio without ambiguity") {
  const Corpus c = Generate(Small(0.0));
  std::set<std::vector<float>> audio;
  for (const auto &t : c.turns) audio.insert(t.user.samples);
  CHECK(audio.size() == c.turns.size());
}

TEST_CASE("labels follow the words spoken") {
  const GenConfig cfg = Small(0.0);
  const Corpus c = Generate(cfg);
  const Vocabulary v(cfg.vocab_size);
  for (const auto &t : c.turns) {
    REQUIRE(t.user.aligned());
    const auto set = v.ResponseSet(t.context.id);
    for (const auto &w : *t.user.alignment) {
      const int idx = v.Find(w.word);
      REQUIRE(idx >= 0);
      const bool expected = std::find(set.begin(), set.end(), idx) != set.end();
      CHECK(expected == (t.label == BargeInLabel::kTrue));
      CHECK(w.start_time < w.end_time);
      CHECK(w.end_time <= t.user.duration() + 1e-9);
    }
  }
}

TEST_CASE("audio-only ceiling") {
  GenConfig c;
  c.ambiguity_fraction = 0.0;
  CHECK(ExpectedAudioOnlyCeiling(c) == doctest::Approx(1.0));
  c.ambiguity_fraction = 1.0;
  CHECK(ExpectedAudioOnlyCeiling(c) == doctest::Approx(0.5));
  c.ambiguity_fraction = 0.2;
  CHECK(ExpectedAudioOnlyCeiling(c) == doctest::Approx(0.9));
}

TEST_CASE("generation is deterministic in the seed") {
  CHECK(Generate(Small()) == Generate(Small()));
  CHECK_FALSE(Generate(Small(0.2, 3)) == Generate(Small(0.2, 4)));
}

TEST_CASE("samples sit on the 16-bit grid") {
  const Corpus c = Generate(Small());
  for (const auto &t : c.turns)
    for (float s : t.user.samples) CHECK(QuantizePcm16(s) == s);
}

TEST_CASE("noise and echo keep pairs identical") {
  GenConfig cfg = Small(0.4);
  cfg.noise_snr_db = 10.0;
  cfg.echo_contamination = true;
  const Corpus noisy = Generate(cfg);
  const Corpus clean = Generate(Small(0.4));
  std::map<std::vector<float>, int> counts;
  for (const auto &t : noisy.turns) ++counts[t.user.samples];
  int pairs = 0;
  for (const auto &[audio, n] : counts) pairs += n == 2;
  CHECK(pairs == 20);
  CHECK(noisy.turns[0].user.samples != clean.turns[0].user.samples);
}

TEST_CASE("generator config validation") {
  GenConfig c = Small();
  c.vocab_size = 30;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = Small();
  c.ambiguity_fraction = 1.5;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = Small();
  c.n_test = 1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  CHECK_THROWS_AS(Generate(c), ConfigError);
}

TEST_CASE("manifest round trip") {
  const fs::path dir = TempDir("manifest");
  const Corpus c = Generate(Small());
  const fs::path manifest = SaveCorpus(c, dir);
  CHECK(fs::exists(manifest));
  const Corpus back = LoadCorpus(manifest);
  REQUIRE(back.turns.size() == c.turns.size());
  for (size_t i = 0; i < c.turns.size(); ++i) {
    CHECK(back.turns[i].id == c.turns[i].id);
    CHECK(back.turns[i].label == c.turns[i].label);
    CHECK(back.turns[i].context == c.turns[i].context);
    CHECK(back.turns[i].prompt_text == c.turns[i].prompt_text);
    CHECK(back.turns[i].user.samples == c.turns[i].user.samples);
    REQUIRE(back.turns[i].user.alignment.has_value());
    CHECK(back.turns[i].user.alignment->size() == c.turns[i].user.alignment->size());
  }
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  const fs::path dir = TempDir("manifest-bad");
  CHECK_THROWS_AS(LoadCorpus(dir / "missing.jsonl"), IoError);
  {
    std::ofstream os(dir / "manifest.jsonl");
    os << "{not json\n";
  }
  CHECK_THROWS_AS(LoadCorpus(dir / "manifest.jsonl"), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("wav round trip") {
  const fs::path dir = TempDir("wav");
  std::vector<float> x;
  for (int i = 0; i < 400; ++i) x.push_back(QuantizePcm16(0.4 * std::sin(0.05 * i)));
  WriteWav(dir / "a.wav", x, 16000);
  const Utterance u = ReadWav(dir / "a.wav");
  CHECK(u.sample_rate == 16000);
  CHECK(u.samples == x);
  fs::remove_all(dir);
}
