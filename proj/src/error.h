// src/error.h

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

#ifndef BARGEIN_ERROR_H_
#define BARGEIN_ERROR_H_

#include <stdexcept>
#include <string>

namespace bargein {

enum class ErrorKind { kValidation, kConfig, kIo, kNumeric, kRuntime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string &m) : Error(ErrorKind::kValidation, m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string &m) : Error(ErrorKind::kConfig, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string &m) : Error(ErrorKind::kIo, m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string &m) : Error(ErrorKind::kNumeric, m) {}
};

}  // namespace bargein

#endif  // BARGEIN_ERROR_H_
