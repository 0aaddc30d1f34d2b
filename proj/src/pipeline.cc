// src/pipeline.cc

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

#include "pipeline.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include "checkpoint.h"
#include "error.h"

namespace bargein {

namespace fs = std::filesystem;

namespace {

std::ostream *g_log = &std::clog;

void Log(const std::string &msg) {
  if (g_log) *g_log << msg << std::endl;
}

std::string Fmt(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void SetLogStream(std::ostream *os) { g_log = os; }

namespace {

Split SplitFrom(const RunConfig &c) {
  try {
    return ParseSplit(c.Get("split"));
  } catch (const ValidationError &e) {
    throw ConfigError(std::string("key 'split': ") + e.what());
  }
}

std::vector<int> AblationLayers(const RunConfig &cfg) {
  std::vector<int> layers;
  for (const auto &l : cfg.GetList("ablate_language_layers")) {
    RunConfig tmp;
    tmp.Set("language_layers", l);
    layers.push_back(tmp.GetInt("language_layers"));
    if (layers.back() < 0) throw ConfigError("ablate_language_layers entries must be >= 0");
  }
  return layers;
}

std::vector<FusionConfig> AblationVariants(const RunConfig &cfg) {
  std::vector<FusionConfig> variants;
  for (const auto &b : cfg.GetList("ablate_branches")) {
    FusionConfig fc = FusionConfigFrom(cfg);
    ApplyBranchInputs(b, &fc);
    variants.push_back(fc);
  }
  return variants;
}

// Parses every setting the command will read so config mistakes surface
// before a run directory is created.
void Precheck(Command command, const RunConfig &cfg) {
  switch (command) {
    case kGenData: GenConfigFrom(cfg).Validate(); break;
    case kPretrainInfuse:
      cfg.Get("corpus");
      PretrainConfigFrom(cfg);
      if (cfg.GetInt("language_layers") < 0) throw ConfigError("language_layers must be >= 0");
      break;
    case kTrain:
      cfg.Get("corpus");
      FusionConfigFrom(cfg);
      TrainConfigFrom(cfg);
      break;
    case kTrainBaseline:
      cfg.Get("corpus");
      BaselineConfigFrom(cfg).fbank.Validate();
      BaselineTrainConfigFrom(cfg);
      break;
    case kEvaluate:
    case kBenchLatency:
      cfg.Get("corpus");
      if (cfg.GetList("models").empty()) throw ConfigError("key 'models' lists no checkpoints");
      cfg.GetBool("measure_latency");
      if (command == kBenchLatency || cfg.GetBool("measure_latency"))
        BenchConfigFrom(cfg, SplitFrom(cfg));
      else
        SplitFrom(cfg);
      break;
    case kAblate:
      cfg.Get("corpus");
      TrainConfigFrom(cfg);
      if (AblationVariants(cfg).empty() && !cfg.GetBool("ablate_baseline"))
        throw ConfigError("ablation has nothing to run");
      AblationLayers(cfg);
      if (!AblationLayers(cfg).empty()) PretrainConfigFrom(cfg);
      if (cfg.GetBool("ablate_baseline")) BaselineTrainConfigFrom(cfg);
      if (cfg.GetBool("measure_latency")) BenchConfigFrom(cfg, Split::kTest);
      break;
  }
}

}  // namespace

GenConfig GenConfigFrom(const RunConfig &c) {
  GenConfig g;
  g.n_train = c.GetInt("n_train");
  g.n_val = c.GetInt("n_val");
  g.n_test = c.GetInt("n_test");
  g.seed = c.GetU64("seed");
  g.sample_rate = c.GetInt("sample_rate");
  g.vocab_size = c.GetInt("vocab_size");
  g.ambiguity_fraction = c.GetDouble("ambiguity_fraction");
  g.noise_snr_db = c.GetOptionalDouble("noise_snr_db");
  g.echo_contamination = c.GetBool("echo_contamination");
  g.mean_duration = c.GetDouble("mean_duration");
  return g;
}

SpeechEncoderConfig SpeechConfigFrom(const RunConfig &c) {
  SpeechEncoderConfig s;
  s.hidden = c.GetInt("speech_hidden");
  s.layers = c.GetInt("speech_layers");
  s.heads = c.GetInt("speech_heads");
  s.ff = c.GetInt("speech_ff");
  s.bands = c.GetInt("speech_bands");
  s.window = c.GetInt("speech_window");
  s.stride = c.GetInt("speech_stride");
  for (int v : {s.hidden, s.heads, s.ff, s.bands, s.window, s.stride})
    if (v <= 0) throw ConfigError("speech encoder sizes must be positive");
  if (s.layers < 0) throw ConfigError("speech_layers must be >= 0");
  if (s.hidden % s.heads != 0)
    throw ConfigError("speech_hidden must be divisible by speech_heads");
  return s;
}

TextEncoderConfig TextConfigFrom(const RunConfig &c) {
  TextEncoderConfig t;
  t.hidden = c.GetInt("text_hidden");
  t.buckets = c.GetInt("text_buckets");
  return t;
}

FusionConfig FusionConfigFrom(const RunConfig &c) {
  FusionConfig f;
  f.speech = SpeechConfigFrom(c);
  f.text = TextConfigFrom(c);
  f.context_dim = c.GetInt("context_dim");
  f.proj_dim = c.GetInt("proj_dim");
  f.fusion_dim = c.GetInt("fusion_dim");
  f.use_prompt = c.GetBool("use_prompt");
  f.use_context = c.GetBool("use_context");
  f.seed = c.GetU64("seed");
  return f;
}

TrainConfig TrainConfigFrom(const RunConfig &c) {
  TrainConfig t;
  t.optimizer = nn::ParseOptimizer(c.Get("optimizer"));
  t.learning_rate = c.GetDouble("learning_rate");
  t.dropout = c.GetDouble("dropout");
  t.epochs = c.GetInt("epochs");
  t.batch_size = c.GetInt("batch_size");
  t.seed = c.GetU64("seed");
  t.fine_tune_speech = c.GetBool("fine_tune_speech");
  t.clip_norm = c.GetDouble("clip_norm");
  t.threads = c.GetInt("threads");
  t.Validate();
  return t;
}

InfusionConfig InfusionConfigFrom(const RunConfig &c, int language_layers) {
  InfusionConfig i;
  i.speech = SpeechConfigFrom(c);
  i.text = TextConfigFrom(c);
  i.language_layers = language_layers;
  i.seed = c.GetU64("seed");
  return i;
}

PretrainConfig PretrainConfigFrom(const RunConfig &c) {
  PretrainConfig p;
  p.optimizer = nn::ParseOptimizer(c.Get("pretrain_optimizer"));
  p.learning_rate = c.GetDouble("pretrain_learning_rate");
  p.clip_norm = c.GetDouble("pretrain_clip_norm");
  p.steps = c.GetLong("pretrain_steps");
  p.batch_size = c.GetInt("pretrain_batch_size");
  p.seed = c.GetU64("seed");
  p.freeze_speech = c.GetBool("freeze_speech");
  p.threads = c.GetInt("threads");
  p.Validate();
  return p;
}

BaselineConfig BaselineConfigFrom(const RunConfig &c) {
  BaselineConfig b;
  b.fbank.num_mels = c.GetInt("num_mels");
  b.layers = c.GetInt("baseline_layers");
  b.hidden = c.GetInt("baseline_hidden");
  b.seed = c.GetU64("seed");
  return b;
}

TrainConfig BaselineTrainConfigFrom(const RunConfig &c) {
  TrainConfig t;
  t.optimizer = nn::ParseOptimizer(c.Get("optimizer"));
  t.learning_rate = c.GetDouble("baseline_learning_rate");
  t.dropout = c.GetDouble("dropout");
  t.epochs = c.GetInt("baseline_epochs");
  t.batch_size = c.GetInt("batch_size");
  t.seed = c.GetU64("seed");
  t.clip_norm = c.GetDouble("clip_norm");
  t.threads = c.GetInt("threads");
  t.Validate();
  return t;
}

BenchConfig BenchConfigFrom(const RunConfig &c, Split split) {
  BenchConfig b;
  b.warmup = c.GetInt("warmup");
  b.runs_per_utterance = c.GetInt("runs_per_utterance");
  b.max_utterances = c.GetU64("max_utterances");
  b.threads = c.GetInt("threads");
  b.split = split;
  b.Validate();
  return b;
}

std::string BranchInputs(const FusionConfig &c) {
  std::string s = "audio";
  if (c.use_prompt) s += "+prompt";
  if (c.use_context) s += "+context";
  return s;
}

void ApplyBranchInputs(const std::string &inputs, FusionConfig *c) {
  if (inputs == "audio") {
    c->use_prompt = c->use_context = false;
  } else if (inputs == "audio+prompt") {
    c->use_prompt = true;
    c->use_context = false;
  } else if (inputs == "audio+context") {
    c->use_prompt = false;
    c->use_context = true;
  } else if (inputs == "audio+prompt+context") {
    c->use_prompt = c->use_context = true;
  } else {
    throw ConfigError("unknown branch combination '" + inputs + "'");
  }
}

std::string FusionName(const FusionConfig &c, bool infused) {
  std::string s = "fusion-" + BranchInputs(c);
  if (infused) s = "li" + std::to_string(c.language_layers) + "-" + s;
  return s;
}

Corpus LoadCorpusFrom(const fs::path &path) {
  if (fs::is_directory(path)) return LoadCorpus(path / "manifest.jsonl");
  return LoadCorpus(path);
}

std::vector<size_t> PretrainTurns(const Corpus &corpus, size_t limit) {
  std::vector<size_t> out;
  for (size_t i : corpus.SplitIndices(Split::kTrain)) {
    if (!corpus.turns[i].user.aligned()) continue;
    out.push_back(i);
    if (limit > 0 && out.size() == limit) break;
  }
  return out;
}

FusionModel BuildFusion(const FusionConfig &cfg, const InfusionModel *infused) {
  if (!infused) return FusionModel(cfg);
  FusionConfig c = cfg;
  c.speech = infused->config().speech;
  c.language_layers = infused->language_layers();
  FusionModel m(c);
  m.LoadSpeechWeights(infused->params());
  return m;
}

NamedClassifier MakeClassifier(std::shared_ptr<const FusionModel> m, const std::string &name) {
  NamedClassifier nc;
  nc.name = name;
  nc.inputs = BranchInputs(m->config());
  nc.classify = [m](const DialogueTurn &t, StageTimes *times) {
    Mat p = m->Forward(t, times);
    return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
  };
  return nc;
}

NamedClassifier MakeClassifier(std::shared_ptr<const RecurrentBaseline> m,
                               const std::string &name) {
  NamedClassifier nc;
  nc.name = name;
  nc.inputs = "audio";
  nc.classify = [m](const DialogueTurn &t, StageTimes *times) {
    Mat p = m->Forward(t.user, times);
    return p(0, 0) >= p(0, 1) ? BargeInLabel::kTrue : BargeInLabel::kFalse;
  };
  return nc;
}

NamedClassifier LoadClassifier(const fs::path &checkpoint) {
  const std::string kind = ArchiveKind(checkpoint);
  if (kind == "fusion") {
    nlohmann::json meta;
    auto m = std::make_shared<const FusionModel>(LoadFusion(checkpoint, &meta));
    return MakeClassifier(m, meta.value("name", FusionName(m->config(), meta.value("infused", false))));
  }
  if (kind == "baseline")
    return MakeClassifier(std::make_shared<const RecurrentBaseline>(LoadBaseline(checkpoint)),
                          "lstm-baseline");
  throw ValidationError(checkpoint.string() + " holds a " + kind +
                        " checkpoint, which cannot classify turns");
}

fs::path FreshRunDirectory(Command command, const RunConfig &cfg, const fs::path &out) {
  std::error_code ec;
  fs::path dir = out;
  if (!dir.empty()) {
    if (fs::exists(dir) && !fs::is_empty(dir))
      throw ConfigError("run directory " + dir.string() +
                        " already exists and is not empty; choose a fresh --out");
  } else {
    const char *root = std::getenv("BARGEIN_RUN_ROOT");
    const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%08llx",
                  static_cast<unsigned long long>(Fnv1a(cfg.Resolved(command)) & 0xffffffffULL));
    const std::string stem = std::string(CommandName(command)) + "-" + tag;
    dir = base / stem;
    for (int k = 2; fs::exists(dir); ++k) dir = base / (stem + "." + std::to_string(k));
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

namespace {

ReportRow RowFor(const std::string &name, const std::string &inputs, const Metrics &m) {
  ReportRow r;
  r.model = name;
  r.inputs = inputs;
  r.avg_recall = m.avg_recall;
  r.f1 = m.f1;
  r.latency_median_ms = r.latency_p95_ms = std::numeric_limits<double>::quiet_NaN();
  return r;
}

// Scores every classifier on a split and optionally fills latency columns.
void Score(const std::vector<NamedClassifier> &models, const Corpus &corpus, Split split,
           const RunConfig &cfg, bool latency, const fs::path &dir) {
  std::vector<ReportRow> rows;
  for (const auto &m : models) {
    rows.push_back(RowFor(m.name, m.inputs, EvaluateSplit(m, corpus, split)));
    Log(m.name + " [" + m.inputs + "]: recall " + Fmt("%.1f", rows.back().avg_recall) + " f1 " +
        Fmt("%.1f", rows.back().f1));
  }
  std::vector<LatencySample> samples;
  if (latency) {
    LatencyResult lr = BenchmarkLatency(models, corpus, BenchConfigFrom(cfg, split));
    std::string stages = "model,stage,median_ms\n";
    for (size_t k = 0; k < models.size(); ++k) {
      rows[k].latency_median_ms = lr.summaries[k].median_ms;
      rows[k].latency_p95_ms = lr.summaries[k].p95_ms;
      for (const auto &[stage, ms] : lr.summaries[k].stage_median_ms)
        stages += models[k].name + "," + stage + "," + Fmt("%.6f", ms) + "\n";
      Log(models[k].name + ": median " + Fmt("%.3f", lr.summaries[k].median_ms) + " ms");
    }
    WriteText(dir / "latency_stages.csv", stages);
    samples = std::move(lr.samples);
  }
  WriteReport(dir, rows, samples);
}

void GenData(const RunConfig &cfg, const fs::path &dir) {
  GenConfig gc = GenConfigFrom(cfg);
  Corpus c = Generate(gc);
  const fs::path manifest = SaveCorpus(c, dir / "corpus");
  Log("wrote " + std::to_string(c.turns.size()) + " turns to " + manifest.string());
}

InfusionModel DoPretrain(const RunConfig &cfg, const Corpus &corpus, int layers,
                         const fs::path &dir) {
  InfusionModel m(InfusionConfigFrom(cfg, layers));
  const auto turns = PretrainTurns(corpus, cfg.GetU64("pretrain_utterances"));
  PretrainResult r = Pretrain(&m, corpus, turns, PretrainConfigFrom(cfg));
  std::string curve = "step,loss,smoothed\n";
  const auto smooth = SmoothCurve(r.loss_curve, 50);
  for (size_t i = 0; i < r.loss_curve.size(); ++i)
    curve += std::to_string(i + 1) + "," + Fmt("%.17g", r.loss_curve[i]) + "," +
             Fmt("%.17g", smooth[i]) + "\n";
  fs::create_directories(dir);
  WriteText(dir / "loss_curve.csv", curve);
  SaveInfusion(dir / "infusion.ckpt", m);
  if (!smooth.empty())
    Log("infusion L=" + std::to_string(layers) + ": smoothed loss " + Fmt("%.4f", smooth.front()) +
        " -> " + Fmt("%.4f", smooth.back()) + " over " + std::to_string(turns.size()) + " turns");
  return m;
}

// Trains one fusion variant, saves it under dir/<name>.ckpt with its log and
// returns the trained model.
FusionModel DoTrain(const FusionConfig &fc, const TrainConfig &tc, const Corpus &corpus,
                    const InfusionModel *infused, const fs::path &ckpt, const fs::path &log) {
  FusionModel init = BuildFusion(fc, infused);
  const std::string name = FusionName(init.config(), infused != nullptr);
  Log("training " + name);
  FusionTrainResult r = TrainFusion(init, corpus, tc);
  WriteMetricsLog(log, r.log);
  SaveFusion(ckpt, r.model, {{"name", name}, {"infused", infused != nullptr}});
  return std::move(r.model);
}

void Train(const RunConfig &cfg, const fs::path &dir) {
  const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
  const std::string ickpt = cfg.Get("infusion_checkpoint");
  std::unique_ptr<InfusionModel> infused;
  if (!ickpt.empty() && ickpt != "none")
    infused = std::make_unique<InfusionModel>(LoadInfusion(ickpt));
  DoTrain(FusionConfigFrom(cfg), TrainConfigFrom(cfg), corpus, infused.get(),
          dir / "model.ckpt", dir / "train_log.csv");
  Score({LoadClassifier(dir / "model.ckpt")}, corpus, Split::kTest, cfg, false, dir);
}

void TrainBaselineCmd(const RunConfig &cfg, const fs::path &dir) {
  const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
  BaselineTrainResult r =
      TrainBaseline(RecurrentBaseline(BaselineConfigFrom(cfg)), corpus, BaselineTrainConfigFrom(cfg));
  WriteMetricsLog(dir / "train_log.csv", r.log);
  SaveBaseline(dir / "model.ckpt", r.model);
  Score({LoadClassifier(dir / "model.ckpt")}, corpus, Split::kTest, cfg, false, dir);
}

std::vector<NamedClassifier> LoadModels(const RunConfig &cfg) {
  const auto paths = cfg.GetList("models");
  if (paths.empty()) throw ConfigError("key 'models' lists no checkpoints");
  std::vector<NamedClassifier> models;
  for (const auto &p : paths) models.push_back(LoadClassifier(p));
  return models;
}

void Evaluate(const RunConfig &cfg, const fs::path &dir) {
  const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
  Score(LoadModels(cfg), corpus, SplitFrom(cfg), cfg,
        cfg.GetBool("measure_latency"), dir);
}

void Bench(const RunConfig &cfg, const fs::path &dir) {
  const Split split = SplitFrom(cfg);
  const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
  Score(LoadModels(cfg), corpus, split, cfg, true, dir);
}

void Ablate(const RunConfig &cfg, const fs::path &dir) {
  const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
  const TrainConfig tc = TrainConfigFrom(cfg);
  const std::vector<int> layers = AblationLayers(cfg);
  const std::vector<FusionConfig> variants = AblationVariants(cfg);
  fs::create_directories(dir / "models");
  std::vector<fs::path> ckpts;
  if (cfg.GetBool("ablate_baseline")) {
    BaselineTrainResult r = TrainBaseline(RecurrentBaseline(BaselineConfigFrom(cfg)), corpus,
                                          BaselineTrainConfigFrom(cfg));
    ckpts.push_back(dir / "models" / "lstm-baseline.ckpt");
    SaveBaseline(ckpts.back(), r.model);
    WriteMetricsLog(dir / "models" / "lstm-baseline.log.csv", r.log);
  }
  auto train_all = [&](const InfusionModel *im) {
    for (const auto &fc : variants) {
      FusionConfig named = fc;
      if (im) named.language_layers = im->language_layers();
      const std::string name = FusionName(named, im != nullptr);
      ckpts.push_back(dir / "models" / (name + ".ckpt"));
      DoTrain(fc, tc, corpus, im, ckpts.back(), dir / "models" / (name + ".log.csv"));
    }
  };
  train_all(nullptr);
  for (int l : layers) {
    InfusionModel im = DoPretrain(cfg, corpus, l, dir / ("infusion-L" + std::to_string(l)));
    train_all(&im);
  }
  std::vector<NamedClassifier> models;
  for (const auto &p : ckpts) models.push_back(LoadClassifier(p));
  Score(models, corpus, Split::kTest, cfg, cfg.GetBool("measure_latency"), dir);
}

}  // namespace

fs::path RunCommand(Command command, const RunConfig &cfg, const fs::path &out) {
  // Resolve first so a missing required key fails before anything is created.
  const std::string resolved = cfg.Resolved(command);
  Precheck(command, cfg);
  const fs::path dir = FreshRunDirectory(command, cfg, out);
  WriteText(dir / "resolved.cfg", resolved);
  switch (command) {
    case kGenData: GenData(cfg, dir); break;
    case kPretrainInfuse: {
      const Corpus corpus = LoadCorpusFrom(cfg.Get("corpus"));
      DoPretrain(cfg, corpus, cfg.GetInt("language_layers"), dir);
      break;
    }
    case kTrain: Train(cfg, dir); break;
    case kTrainBaseline: TrainBaselineCmd(cfg, dir); break;
    case kEvaluate: Evaluate(cfg, dir); break;
    case kBenchLatency: Bench(cfg, dir); break;
    case kAblate: Ablate(cfg, dir); break;
  }
  return dir;
}

}  // namespace bargein
