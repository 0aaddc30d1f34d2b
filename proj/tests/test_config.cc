// tests/test_config.cc

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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "config.h"
#include "doctest.h"
#include "error.h"
#include "evaluate.h"
#include "pipeline.h"

using namespace bargein;
namespace fs = std::filesystem;

namespace {

fs::path TempDir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("bargein-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void WriteFile(const fs::path &p, const std::string &text) {
  std::ofstream os(p);
  os << text;
}

std::string Slurp(const fs::path &p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Small enough for a unit test to train every model.
RunConfig Tiny() {
  RunConfig c;
  for (auto [k, v] : std::initializer_list<std::pair<const char *, const char *>>{
           {"n_train", "24"}, {"n_val", "8"}, {"n_test", "8"}, {"mean_duration", "0.3"},
           {"speech_hidden", "8"}, {"speech_layers", "1"}, {"speech_heads", "2"},
           {"speech_ff", "12"}, {"speech_bands", "4"}, {"text_hidden", "6"},
           {"text_buckets", "64"}, {"context_dim", "3"}, {"proj_dim", "4"}, {"fusion_dim", "5"},
           {"epochs", "1"}, {"batch_size", "8"}, {"baseline_hidden", "4"}, {"num_mels", "8"},
           {"baseline_epochs", "1"}, {"pretrain_steps", "3"}, {"pretrain_batch_size", "2"}})
    c.Set(k, v);
  return c;
}

}  // namespace

TEST_CASE("defaults, required keys and unknown keys") {
  RunConfig c;
  CHECK(c.GetInt("n_train") == 9000);
  CHECK(c.GetDouble("learning_rate") == doctest::Approx(5e-4));
  CHECK(c.Get("optimizer") == "sgd");
  CHECK_FALSE(c.GetOptionalDouble("noise_snr_db").has_value());
  CHECK(c.GetList("ablate_language_layers") == std::vector<std::string>{"0", "2", "4"});
  try {
    c.Get("corpus");
    FAIL("expected a ConfigError");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("corpus") != std::string::npos);
  }
  CHECK_THROWS_AS(c.Set("no_such_key", "1"), ConfigError);
  c.Set("epochs", "many");
  CHECK_THROWS_AS(c.GetInt("epochs"), ConfigError);
  c.Set("fine_tune_speech", "maybe");
  CHECK_THROWS_AS(c.GetBool("fine_tune_speech"), ConfigError);
  c.Set("fine_tune_speech", "off");
  CHECK_FALSE(c.GetBool("fine_tune_speech"));
}

TEST_CASE("file loading and precedence") {
  const fs::path dir = TempDir("config-file");
  WriteFile(dir / "a.cfg", "# comment\nepochs = 7\n\nlearning_rate=0.01  # trailing\n");
  RunConfig c;
  c.LoadFile(dir / "a.cfg");
  CHECK(c.GetInt("epochs") == 7);
  CHECK(c.GetDouble("learning_rate") == doctest::Approx(0.01));
  c.Set("epochs", "9");
  CHECK(c.GetInt("epochs") == 9);

  WriteFile(dir / "bad.cfg", "epochs = 3\nthis line has no equals\n");
  try {
    RunConfig b;
    b.LoadFile(dir / "bad.cfg");
    FAIL("expected a ConfigError");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  WriteFile(dir / "unknown.cfg", "epoch = 3\n");
  CHECK_THROWS_AS(RunConfig().LoadFile(dir / "unknown.cfg"), ConfigError);
  CHECK_THROWS_AS(RunConfig().LoadFile(dir / "missing.cfg"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("resolved config lists only the command's keys") {
  RunConfig c;
  c.Set("corpus", "/data/c");
  const std::string r = c.Resolved(kTrainBaseline);
  CHECK(r.find("corpus = /data/c\n") != std::string::npos);
  CHECK(r.find("baseline_hidden = 128\n") != std::string::npos);
  CHECK(r.find("fusion_dim") == std::string::npos);
  CHECK_THROWS_AS(RunConfig().Resolved(kTrain), ConfigError);
  for (const auto &k : ConfigKeys()) {
    CHECK(k.commands != 0u);
    CHECK(FindKey(k.name) == &k);
  }
}

TEST_CASE("commands") {
  CHECK(ParseCommand("gen-data") == kGenData);
  CHECK(CommandName(kBenchLatency) == "bench-latency");
  CHECK_THROWS_AS(ParseCommand("fly"), ConfigError);
  CHECK(Commands().size() == 7);
}

TEST_CASE("branch spelling and model names") {
  FusionConfig f;
  for (const char *s : {"audio", "audio+prompt", "audio+context", "audio+prompt+context"}) {
    ApplyBranchInputs(s, &f);
    CHECK(BranchInputs(f) == s);
  }
  CHECK_THROWS_AS(ApplyBranchInputs("prompt", &f), ConfigError);
  ApplyBranchInputs("audio+context", &f);
  CHECK(FusionName(f, false) == "fusion-audio+context");
  f.language_layers = 2;
  CHECK(FusionName(f, true) == "li2-fusion-audio+context");
}

TEST_CASE("typed views validate") {
  RunConfig c;
  c.Set("dropout", "1.5");
  CHECK_THROWS_AS(TrainConfigFrom(c), ConfigError);
  c = RunConfig();
  c.Set("threads", "2");
  CHECK_THROWS_AS(BenchConfigFrom(c, Split::kTest), ConfigError);
  c = RunConfig();
  c.Set("optimizer", "rmsprop");
  CHECK_THROWS_AS(TrainConfigFrom(c), ConfigError);
  c = RunConfig();
  c.Set("speech_hidden", "10");
  c.Set("speech_heads", "3");
  CHECK_THROWS_AS(FusionConfigFrom(c), ConfigError);
}

TEST_CASE("fresh run directories") {
  const fs::path dir = TempDir("rundir");
  RunConfig c;
  CHECK(FreshRunDirectory(kGenData, c, dir / "out") == dir / "out");
  WriteFile(dir / "out" / "x", "x");
  CHECK_THROWS_AS(FreshRunDirectory(kGenData, c, dir / "out"), ConfigError);

  setenv("BARGEIN_RUN_ROOT", (dir / "root").c_str(), 1);
  const fs::path a = FreshRunDirectory(kGenData, c, {});
  const fs::path b = FreshRunDirectory(kGenData, c, {});
  CHECK(a.parent_path() == dir / "root");
  CHECK(a.filename().string().rfind("gen-data-", 0) == 0);
  CHECK(b.string() == a.string() + ".2");
  unsetenv("BARGEIN_RUN_ROOT");
  fs::remove_all(dir);
}

TEST_CASE("config errors surface before a run directory exists") {
  const fs::path dir = TempDir("precheck");
  RunConfig c;
  CHECK_THROWS_AS(RunCommand(kTrain, c, dir / "train"), ConfigError);
  CHECK_FALSE(fs::exists(dir / "train"));
  c.Set("corpus", (dir / "nowhere").string());
  c.Set("batch_size", "0");
  CHECK_THROWS_AS(RunCommand(kTrain, c, dir / "train"), ConfigError);
  CHECK_FALSE(fs::exists(dir / "train"));
  fs::remove_all(dir);
}

TEST_CASE("small pipeline through every command") {
  const fs::path dir = TempDir("pipeline");
  SetLogStream(nullptr);
  RunConfig c = Tiny();
  const fs::path data = RunCommand(kGenData, c, dir / "data");
  CHECK(fs::exists(data / "corpus" / "manifest.jsonl"));
  CHECK(fs::exists(data / "resolved.cfg"));
  c.Set("corpus", (data / "corpus").string());

  c.Set("language_layers", "2");
  const fs::path pre = RunCommand(kPretrainInfuse, c, dir / "pre");
  CHECK(fs::exists(pre / "infusion.ckpt"));
  const std::string curve = Slurp(pre / "loss_curve.csv");
  CHECK(curve.rfind("step,loss,smoothed\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 4);

  c.Set("infusion_checkpoint", (pre / "infusion.ckpt").string());
  c.Set("use_prompt", "false");
  const fs::path tr = RunCommand(kTrain, c, dir / "train");
  CHECK(fs::exists(tr / "model.ckpt"));
  CHECK(fs::exists(tr / "train_log.csv"));
  const fs::path bl = RunCommand(kTrainBaseline, c, dir / "baseline");

  c.Set("models", (tr / "model.ckpt").string() + "," + (bl / "model.ckpt").string());
  c.Set("measure_latency", "true");
  c.Set("warmup", "0");
  c.Set("runs_per_utterance", "1");
  c.Set("max_utterances", "2");
  const fs::path ev = RunCommand(kEvaluate, c, dir / "eval");
  const std::string report = Slurp(ev / "report.csv");
  CHECK(report.find("li2-fusion-audio+context,audio+context,") != std::string::npos);
  CHECK(report.find("lstm-baseline,audio,") != std::string::npos);
  CHECK(report.find("NA") == std::string::npos);
  CHECK(fs::exists(ev / "report.txt"));

  const fs::path bench = RunCommand(kBenchLatency, c, dir / "bench");
  CHECK(fs::exists(bench / "latency_samples.csv"));
  CHECK(fs::exists(bench / "latency_stages.csv"));

  const NamedClassifier loaded = LoadClassifier(tr / "model.ckpt");
  CHECK(loaded.name == "li2-fusion-audio+context");
  CHECK(loaded.inputs == "audio+context");
  SetLogStream(&std::clog);
  fs::remove_all(dir);
}

TEST_CASE("ablation writes one row per variant") {
  const fs::path dir = TempDir("ablate");
  SetLogStream(nullptr);
  RunConfig c = Tiny();
  const fs::path data = RunCommand(kGenData, c, dir / "data");
  c.Set("corpus", (data / "corpus").string());
  c.Set("ablate_branches", "audio,audio+context");
  c.Set("ablate_language_layers", "0,2");
  c.Set("ablate_baseline", "true");
  const fs::path ab = RunCommand(kAblate, c, dir / "ablate");
  const std::string report = Slurp(ab / "report.csv");
  for (const char *name : {"fusion-audio,", "fusion-audio+context,", "li0-fusion-audio,",
                           "li0-fusion-audio+context,", "li2-fusion-audio,",
                           "li2-fusion-audio+context,", "lstm-baseline,"})
    CHECK(report.find(std::string("\n") + name) != std::string::npos);
  CHECK(std::count(report.begin(), report.end(), '\n') == 8);
  CHECK(fs::exists(ab / "infusion-L0" / "infusion.ckpt"));
  CHECK(fs::exists(ab / "infusion-L2" / "loss_curve.csv"));
  SetLogStream(&std::clog);
  fs::remove_all(dir);
}
