// src/checkpoint.h

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

#ifndef BARGEIN_CHECKPOINT_H_
#define BARGEIN_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>

#include "baseline.h"
#include "fusion.h"
#include "graph.h"
#include "infusion.h"
#include "json.hpp"

namespace bargein {

// Archive layout: "BARGEIN1", u32 version, u64 header length, a JSON header
// {kind, config, meta, tensors: [{name, rows, cols, trainable, offset}]},
// then raw little-endian float64 tensor data.
inline constexpr uint32_t kArchiveVersion = 1;

struct Archive {
  std::string kind;
  nlohmann::json config;
  nlohmann::json meta = nlohmann::json::object();
  nn::ParamStore tensors;
};

void WriteArchive(const std::filesystem::path &path, const Archive &a);
Archive ReadArchive(const std::filesystem::path &path);

// Copies every tensor of `src` into the same-named parameter of `dst`;
// shapes must match and every parameter of dst must be present.
void RestoreParams(nn::ParamStore *dst, const nn::ParamStore &src);

// `meta` entries are stored alongside {language_layers: L}; LoadFusion hands
// them back when asked.
void SaveFusion(const std::filesystem::path &path, const FusionModel &m,
                const nlohmann::json &meta = nlohmann::json::object());
FusionModel LoadFusion(const std::filesystem::path &path, nlohmann::json *meta = nullptr);

// The manifest carries {language_layers: L}.
void SaveInfusion(const std::filesystem::path &path, const InfusionModel &m);
InfusionModel LoadInfusion(const std::filesystem::path &path);

void SaveBaseline(const std::filesystem::path &path, const RecurrentBaseline &m);
RecurrentBaseline LoadBaseline(const std::filesystem::path &path);

// Kind string stored in an archive ("fusion", "infusion" or "baseline").
std::string ArchiveKind(const std::filesystem::path &path);

}  // namespace bargein

#endif  // BARGEIN_CHECKPOINT_H_
