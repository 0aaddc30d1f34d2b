// src/corpus.cc

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

#include "corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "error.h"
#include "json.hpp"

namespace bargein {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "val") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

std::string Utterance::Transcript() const {
  std::string out;
  if (!alignment) return out;
  for (const auto &w : *alignment) {
    if (!out.empty()) out += ' ';
    out += w.word;
  }
  return out;
}

void Utterance::Validate() const {
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  if (samples.empty()) throw ValidationError("utterance has no samples");
  if (!alignment) return;
  const double dur = duration();
  double prev_end = -1.0;
  for (const auto &w : *alignment) {
    if (w.word.empty()) throw ValidationError("alignment word is empty");
    if (!(w.start_time < w.end_time))
      throw ValidationError("alignment for '" + w.word + "' has start >= end");
    if (w.start_time < 0.0 || w.end_time > dur)
      throw ValidationError("alignment for '" + w.word + "' lies outside the audio");
    if (w.end_time < prev_end)
      throw ValidationError("alignment not sorted by end time");
    prev_end = w.end_time;
  }
}

const ContextRegistry &ContextRegistry::Default() {
  static const ContextRegistry reg = [] {
    ContextRegistry r;
    for (int i = 0; i < 3; ++i)
      r.labels_.push_back({static_cast<int>(r.labels_.size()), "intent_" + std::to_string(i)});
    for (int i = 0; i < 7; ++i)
      r.labels_.push_back({static_cast<int>(r.labels_.size()), "slot_" + std::to_string(i)});
    return r;
  }();
  return reg;
}

const DialogueContextLabel &ContextRegistry::at(int id) const {
  if (id < 0 || id >= size())
    throw ValidationError("unknown dialogue context id " + std::to_string(id));
  return labels_[id];
}

const DialogueContextLabel &ContextRegistry::Find(std::string_view name) const {
  for (const auto &l : labels_)
    if (l.name == name) return l;
  throw ValidationError("unknown dialogue context '" + std::string(name) + "'");
}

void DialogueTurn::Validate() const {
  if (prompt_text.empty())
    throw ValidationError("turn " + id + ": empty prompt text");
  const auto &reg = ContextRegistry::Default();
  if (reg.at(context.id).name != context.name)
    throw ValidationError("turn " + id + ": context id/name mismatch");
  try {
    user.Validate();
  } catch (const ValidationError &e) {
    throw ValidationError("turn " + id + ": " + e.what());
  }
}

std::vector<size_t> Corpus::SplitIndices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < turns.size(); ++i)
    if (turns[i].split == s) out.push_back(i);
  return out;
}

void Corpus::Validate() const {
  std::set<std::string> ids;
  for (const auto &t : turns) {
    if (!ids.insert(t.id).second)
      throw ValidationError("duplicate turn id " + t.id);
    t.Validate();
  }
}

bool IsBalanced(const Corpus &c) {
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    long diff = 0;
    for (size_t i : c.SplitIndices(s))
      diff += c.turns[i].label == BargeInLabel::kTrue ? 1 : -1;
    if (std::labs(diff) > 1) return false;
  }
  return true;
}

std::string FormatSeconds(double t) {
  char buf[64];
  for (int p = 6; p <= 17; ++p) {
    auto r = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::fixed, p);
    double back = 0.0;
    std::from_chars(buf, r.ptr, back);
    if (back == t) return std::string(buf, r.ptr);
  }
  auto r = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::fixed, 17);
  return std::string(buf, r.ptr);
}

float QuantizePcm16(double x) {
  long q = std::lround(x * 32768.0);
  q = std::clamp(q, -32768L, 32767L);
  return static_cast<float>(q) / 32768.0f;
}

namespace {

void PutU32(std::ostream &os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char *>(b), 4);
}
void PutU16(std::ostream &os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char *>(b), 2);
}
uint32_t GetU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t GetU16(const unsigned char *p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void WriteWav(const fs::path &path, const std::vector<float> &samples, int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  PutU32(os, 16);
  PutU16(os, 1);  // PCM
  PutU16(os, 1);  // mono
  PutU32(os, static_cast<uint32_t>(sample_rate));
  PutU32(os, static_cast<uint32_t>(sample_rate) * 2);
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  std::vector<unsigned char> buf(samples.size() * 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    long q = std::clamp(std::lround(static_cast<double>(samples[i]) * 32768.0), -32768L, 32767L);
    auto u = static_cast<uint16_t>(static_cast<int16_t>(q));
    buf[2 * i] = static_cast<unsigned char>(u);
    buf[2 * i + 1] = static_cast<unsigned char>(u >> 8);
  }
  os.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("short write to " + path.string());
}

Utterance ReadWav(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open audio file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError(path.string() + ": not a RIFF/WAVE file");
  Utterance u;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    uint32_t size = GetU32(chunk + 4);
    if (pos + 8 + size > bytes.size()) throw IoError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(path.string() + ": bad fmt chunk");
      uint16_t format = GetU16(chunk + 8), channels = GetU16(chunk + 10);
      uint16_t bits = GetU16(chunk + 22);
      if (format != 1 || channels != 1 || bits != 16)
        throw IoError(path.string() + ": only 16-bit mono PCM is supported");
      u.sample_rate = static_cast<int>(GetU32(chunk + 12));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw IoError(path.string() + ": data before fmt");
      u.samples.resize(size / 2);
      for (size_t i = 0; i < u.samples.size(); ++i) {
        auto v = static_cast<int16_t>(GetU16(chunk + 8 + 2 * i));
        u.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return u;
    }
    pos += 8 + size + (size & 1);
  }
  throw IoError(path.string() + ": no data chunk");
}

namespace {

constexpr const char *kManifestFormat = "bargein-manifest";

std::string RecordLine(const DialogueTurn &t, const std::string &audio_rel) {
  std::ostringstream os;
  os << "{\"id\":" << json(t.id).dump() << ",\"split\":\"" << SplitName(t.split)
     << "\",\"prompt_text\":" << json(t.prompt_text).dump()
     << ",\"context_name\":" << json(t.context.name).dump() << ",\"label\":\""
     << (t.label == BargeInLabel::kTrue ? "true" : "false")
     << "\",\"audio_path\":" << json(audio_rel).dump() << ",\"alignment\":";
  if (!t.user.alignment) {
    os << "null";
  } else {
    os << '[';
    for (size_t i = 0; i < t.user.alignment->size(); ++i) {
      const auto &w = (*t.user.alignment)[i];
      if (i) os << ',';
      os << '[' << json(w.word).dump() << ',' << FormatSeconds(w.start_time) << ','
         << FormatSeconds(w.end_time) << ']';
    }
    os << ']';
  }
  os << '}';
  return os.str();
}

}  // namespace

fs::path SaveCorpus(const Corpus &c, const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir / "audio", ec);
  if (ec) throw IoError("cannot create " + (dir / "audio").string() + ": " + ec.message());
  const fs::path manifest = dir / "manifest.jsonl";
  std::ofstream os(manifest, std::ios::binary);
  if (!os) throw IoError("cannot write " + manifest.string());
  os << "{\"format\":\"" << kManifestFormat << "\",\"version\":1,\"seed\":" << c.seed
     << "}\n";
  for (const auto &t : c.turns) {
    const std::string rel = "audio/" + t.id + ".wav";
    WriteWav(dir / rel, t.user.samples, t.user.sample_rate);
    os << RecordLine(t, rel) << '\n';
  }
  if (!os) throw IoError("short write to " + manifest.string());
  return manifest;
}

Corpus LoadCorpus(const fs::path &manifest) {
  std::ifstream is(manifest, std::ios::binary);
  if (!is) throw IoError("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  const auto &reg = ContextRegistry::Default();
  Corpus c;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception &e) {
      throw ValidationError(manifest.string() + ":" + std::to_string(lineno) +
                            ": malformed record: " + e.what());
    }
    if (rec.contains("format")) {
      if (rec.at("format") != kManifestFormat)
        throw ValidationError(manifest.string() + ": unknown manifest format");
      c.seed = rec.value("seed", uint64_t{0});
      continue;
    }
    DialogueTurn t;
    try {
      t.id = rec.at("id").get<std::string>();
      t.split = ParseSplit(rec.at("split").get<std::string>());
      t.prompt_text = rec.at("prompt_text").get<std::string>();
      t.context = reg.Find(rec.at("context_name").get<std::string>());
      const std::string label = rec.at("label").get<std::string>();
      if (label != "true" && label != "false")
        throw ValidationError("label must be \"true\" or \"false\"");
      t.label = label == "true" ? BargeInLabel::kTrue : BargeInLabel::kFalse;
      const json &al = rec.at("alignment");
      if (!al.is_null()) {
        std::vector<WordAlignment> words;
        for (const auto &w : al) {
          if (!w.is_array() || w.size() != 3)
            throw ValidationError("alignment entries are [word, start_s, end_s]");
          words.push_back({w[0].get<std::string>(), w[1].get<double>(), w[2].get<double>()});
        }
        t.user.alignment = std::move(words);
      }
    } catch (const json::exception &e) {
      throw ValidationError(manifest.string() + ":" + std::to_string(lineno) + ": " +
                            e.what());
    }
    const fs::path audio = base / rec.at("audio_path").get<std::string>();
    try {
      Utterance wav = ReadWav(audio);
      t.user.samples = std::move(wav.samples);
      t.user.sample_rate = wav.sample_rate;
    } catch (const IoError &e) {
      throw IoError("turn " + t.id + ": " + e.what());
    }
    t.Validate();
    c.turns.push_back(std::move(t));
  }
  c.Validate();
  return c;
}

}  // namespace bargein
