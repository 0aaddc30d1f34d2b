// src/checkpoint.cc

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

#include "checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "error.h"

namespace bargein {

namespace {

constexpr char kMagic[8] = {'B', 'A', 'R', 'G', 'E', 'I', 'N', '1'};

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

template <typename T>
void Put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T Get(std::istream &is, const std::filesystem::path &path) {
  T v{};
  if (!is.read(reinterpret_cast<char *>(&v), sizeof(T)))
    throw IoError("truncated archive " + path.string());
  return v;
}

}  // namespace

void WriteArchive(const std::filesystem::path &path, const Archive &a) {
  nlohmann::json header;
  header["kind"] = a.kind;
  header["config"] = a.config;
  header["meta"] = a.meta;
  header["tensors"] = nlohmann::json::array();
  uint64_t offset = 0;
  for (const nn::Parameter &p : a.tensors) {
    header["tensors"].push_back({{"name", p.name},
                                 {"rows", p.value.rows()},
                                 {"cols", p.value.cols()},
                                 {"trainable", p.trainable},
                                 {"offset", offset}});
    offset += static_cast<uint64_t>(p.value.size()) * sizeof(double);
  }
  const std::string text = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  Put<uint32_t>(os, kArchiveVersion);
  Put<uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const nn::Parameter &p : a.tensors) {
    // Row-major on disk.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p.value;
    os.write(reinterpret_cast<const char *>(rm.data()),
             static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing " + path.string());
}

Archive ReadArchive(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ValidationError(path.string() + " is not a bargein checkpoint");
  const uint32_t version = Get<uint32_t>(is, path);
  if (version != kArchiveVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  const uint64_t len = Get<uint64_t>(is, path);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len)))
    throw IoError("truncated archive " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  Archive a;
  const std::streamoff data_start = is.tellg();
  try {
    a.kind = header.at("kind");
    a.config = header.at("config");
    a.meta = header.value("meta", nlohmann::json::object());
    for (const auto &t : header.at("tensors")) {
      const Eigen::Index rows = t.at("rows"), cols = t.at("cols");
      const uint64_t offset = t.at("offset");
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
      is.seekg(data_start + static_cast<std::streamoff>(offset));
      if (!is.read(reinterpret_cast<char *>(rm.data()),
                   static_cast<std::streamsize>(rm.size() * sizeof(double))))
        throw IoError("truncated tensor data in " + path.string());
      a.tensors.Add(t.at("name"), Mat(rm), t.at("trainable"));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  return a;
}

void RestoreParams(nn::ParamStore *dst, const nn::ParamStore &src) {
  for (size_t i = 0; i < dst->size(); ++i) {
    nn::Parameter &p = dst->at(static_cast<int>(i));
    const int j = src.Find(p.name);
    if (j < 0) throw ValidationError("checkpoint is missing tensor " + p.name);
    const Mat &v = src.at(j).value;
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols())
      throw ValidationError("shape mismatch for tensor " + p.name);
    p.value = v;
    p.trainable = src.at(j).trainable;
  }
}

namespace {

Archive Expect(const std::filesystem::path &path, const std::string &kind) {
  Archive a = ReadArchive(path);
  if (a.kind != kind)
    throw ValidationError(path.string() + " holds a " + a.kind + " checkpoint, expected " + kind);
  return a;
}

template <typename Fn>
auto ParseConfig(const std::filesystem::path &path, Fn fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("bad model config in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void SaveFusion(const std::filesystem::path &path, const FusionModel &m,
                const nlohmann::json &meta) {
  nlohmann::json full = meta;
  full["language_layers"] = m.config().language_layers;
  WriteArchive(path, {"fusion", ToJson(m.config()), full, m.params()});
}

FusionModel LoadFusion(const std::filesystem::path &path, nlohmann::json *meta) {
  Archive a = Expect(path, "fusion");
  if (meta) *meta = a.meta;
  FusionModel m(ParseConfig(path, [&] { return FusionConfigFromJson(a.config); }));
  RestoreParams(&m.params(), a.tensors);
  return m;
}

void SaveInfusion(const std::filesystem::path &path, const InfusionModel &m) {
  WriteArchive(path, {"infusion", ToJson(m.config()),
                      {{"language_layers", m.language_layers()}}, m.params()});
}

InfusionModel LoadInfusion(const std::filesystem::path &path) {
  Archive a = Expect(path, "infusion");
  InfusionConfig cfg = ParseConfig(path, [&] { return InfusionConfigFromJson(a.config); });
  if (a.meta.value("language_layers", -1) != cfg.language_layers)
    throw ValidationError("language_layers flag disagrees with the config in " + path.string());
  InfusionModel m(cfg);
  RestoreParams(&m.params(), a.tensors);
  return m;
}

void SaveBaseline(const std::filesystem::path &path, const RecurrentBaseline &m) {
  WriteArchive(path, {"baseline", ToJson(m.config()), nlohmann::json::object(), m.params()});
}

RecurrentBaseline LoadBaseline(const std::filesystem::path &path) {
  Archive a = Expect(path, "baseline");
  RecurrentBaseline m(ParseConfig(path, [&] { return BaselineConfigFromJson(a.config); }));
  RestoreParams(&m.params(), a.tensors);
  return m;
}

std::string ArchiveKind(const std::filesystem::path &path) { return ReadArchive(path).kind; }

}  // namespace bargein
