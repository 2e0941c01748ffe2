// Copyright 2026 The VolSeg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOLSEG_ERRORS_HPP_
#define VOLSEG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace volseg {

// Filesystem-level failures: missing files, unwritable paths, broken pipes.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A file exists and is readable but its contents violate the format contract
// (bad header, wrong dtype tag, truncated payload).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration schema violations: unknown keys, type mismatches, parse errors.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// The subprocess predictor wire protocol was violated or timed out.
class SubprocessError : public IoError {
 public:
  explicit SubprocessError(const std::string& msg) : IoError(msg) {}
};

}  // namespace volseg

#endif  // VOLSEG_ERRORS_HPP_
