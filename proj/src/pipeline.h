// src/pipeline.h

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

#ifndef BARGEIN_PIPELINE_H_
#define BARGEIN_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "baseline.h"
#include "config.h"
#include "datagen.h"
#include "evaluate.h"
#include "fusion.h"
#include "infusion.h"
#include "training.h"

namespace bargein {

// Typed views of a RunConfig.
GenConfig GenConfigFrom(const RunConfig &c);
SpeechEncoderConfig SpeechConfigFrom(const RunConfig &c);
TextEncoderConfig TextConfigFrom(const RunConfig &c);
FusionConfig FusionConfigFrom(const RunConfig &c);
TrainConfig TrainConfigFrom(const RunConfig &c);
InfusionConfig InfusionConfigFrom(const RunConfig &c, int language_layers);
PretrainConfig PretrainConfigFrom(const RunConfig &c);
BaselineConfig BaselineConfigFrom(const RunConfig &c);
TrainConfig BaselineTrainConfigFrom(const RunConfig &c);
BenchConfig BenchConfigFrom(const RunConfig &c, Split split);

// "audio", "audio+prompt", "audio+context" or "audio+prompt+context".
std::string BranchInputs(const FusionConfig &c);
// Parses the same spelling into the use_prompt/use_context flags of c.
void ApplyBranchInputs(const std::string &inputs, FusionConfig *c);
// "fusion-<inputs>", or "li<L>-fusion-<inputs>" for infused speech.
std::string FusionName(const FusionConfig &c, bool infused);

// Corpus from a manifest path or the directory holding manifest.jsonl.
Corpus LoadCorpusFrom(const std::filesystem::path &path);
// Aligned train turns in corpus order, at most `limit` of them (0: all).
std::vector<size_t> PretrainTurns(const Corpus &corpus, size_t limit);

// Fusion model, optionally with speech weights taken from an infusion model.
FusionModel BuildFusion(const FusionConfig &cfg, const InfusionModel *infused);

// Classifier views of in-memory models: the full inference path from a
// turn to a label.
NamedClassifier MakeClassifier(std::shared_ptr<const FusionModel> m, const std::string &name);
NamedClassifier MakeClassifier(std::shared_ptr<const RecurrentBaseline> m,
                               const std::string &name);

// A checkpoint of any kind wrapped for scoring and timing.
NamedClassifier LoadClassifier(const std::filesystem::path &checkpoint);

// Picks a fresh directory: `out` itself when given (it must not exist or be
// empty), else <BARGEIN_RUN_ROOT or ./runs>/<command>-<hash of the resolved
// config>, suffixed when taken. Creates it.
std::filesystem::path FreshRunDirectory(Command command, const RunConfig &cfg,
                                        const std::filesystem::path &out);

// Runs one command into a fresh run directory and returns it. The resolved
// config goes to <dir>/resolved.cfg.
std::filesystem::path RunCommand(Command command, const RunConfig &cfg,
                                 const std::filesystem::path &out);

// Progress messages; nullptr silences them. Defaults to std::clog.
void SetLogStream(std::ostream *os);

}  // namespace bargein

#endif  // BARGEIN_PIPELINE_H_
