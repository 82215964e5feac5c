// Copyright 2026 The fpci Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpci {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Invalid problem/map/compressor/run configuration. `key()` names the
// offending setting (or constant) when one is known; `line()` is 1-based,
// 0 when the error did not originate from a config document.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {},
                       std::size_t line = 0)
      : Error(format(message, key, line)), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& message, const std::string& key,
                            std::size_t line) {
    std::string out;
    if (!key.empty()) out += "'" + key + "'";
    if (line != 0) out += (out.empty() ? "line " : " (line ") + std::to_string(line) + (key.empty() ? "" : ")");
    if (!out.empty()) out += ": ";
    return out + message;
  }

  std::string key_;
  std::size_t line_;
};

// Malformed input file; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An iteration produced a non-finite iterate or blew past the divergence
// threshold. `iteration()` is the k of the offending iterate x^k.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::size_t iteration)
      : Error("diverged at k=" + std::to_string(iteration) + ": " + message),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpci
