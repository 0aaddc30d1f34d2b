// src/config.h

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

#ifndef BARGEIN_CONFIG_H_
#define BARGEIN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bargein {

enum Command : unsigned {
  kGenData = 1u << 0,
  kPretrainInfuse = 1u << 1,
  kTrain = 1u << 2,
  kTrainBaseline = 1u << 3,
  kEvaluate = 1u << 4,
  kBenchLatency = 1u << 5,
  kAblate = 1u << 6,
};

struct CommandSpec {
  const char *name;
  Command command;
  const char *help;
};

const std::vector<CommandSpec> &Commands();
// Throws ConfigError for an unknown name.
Command ParseCommand(std::string_view name);
std::string_view CommandName(Command c);

struct KeySpec {
  const char *name;
  const char *default_value;  // nullptr: required
  unsigned commands;          // bitmask of Command
  const char *help;
};

const std::vector<KeySpec> &ConfigKeys();
const KeySpec *FindKey(std::string_view name);

// Flat key = value settings. Later Set calls override earlier ones, so
// loading a file and then applying flags gives flag precedence.
class RunConfig {
 public:
  // Unknown keys throw ConfigError.
  void Set(const std::string &key, const std::string &value);
  // Lines "key = value"; '#' starts a comment. Throws IoError when the file
  // cannot be read and ConfigError on a malformed line.
  void LoadFile(const std::filesystem::path &path);

  bool IsSet(std::string_view key) const;
  // Explicit value, else the default; a required key that was never set
  // throws ConfigError naming the key.
  std::string Get(std::string_view key) const;
  int GetInt(std::string_view key) const;
  long GetLong(std::string_view key) const;
  uint64_t GetU64(std::string_view key) const;
  double GetDouble(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  // "none" or empty maps to nullopt.
  std::optional<double> GetOptionalDouble(std::string_view key) const;
  // Comma separated, blanks trimmed, empty items dropped; "none" is empty.
  std::vector<std::string> GetList(std::string_view key) const;

  // Every key that applies to `command`, in registry order, as key = value
  // lines. Required keys that are unset throw.
  std::string Resolved(Command command) const;

  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bargein

#endif  // BARGEIN_CONFIG_H_
