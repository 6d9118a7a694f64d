/*
 * Copyright 2026 The TAML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAML_ERROR_HPP_
#define TAML_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace taml {

enum class ErrorKind {
  kConfig,    // bad config, bad arguments, invalid specs
  kIo,        // unreadable / unwritable files
  kCorrupt,   // truncated or malformed checkpoint / log
  kMismatch,  // checkpoint bound to a different search space
  kNumeric,   // non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& what) {
  return Error(ErrorKind::kConfig, what);
}
inline Error IoError(const std::string& what) {
  return Error(ErrorKind::kIo, what);
}
inline Error CorruptError(const std::string& what) {
  return Error(ErrorKind::kCorrupt, what);
}
inline Error MismatchError(const std::string& what) {
  return Error(ErrorKind::kMismatch, what);
}
inline Error NumericError(const std::string& what) {
  return Error(ErrorKind::kNumeric, what);
}

// Process exit status for an error kind: config = 2, IO = 3, numeric = 4.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kMismatch:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kCorrupt:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
  }
  return 1;
}

}  // namespace taml

#endif  // TAML_ERROR_HPP_
