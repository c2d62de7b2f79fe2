// Copyright 2026 The TILscore Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tilscore {

/// Failure categories. Each maps onto one CLI exit status.
enum class ErrorKind {
  kArgument,
  kConfig,
  kFormat,
  kIntegrity,
  kBounds,
  kParse,
  kIo,
  kEmptyTissue,
  kBackendUnavailable,
  kProtocol,
  kUndefinedMetric,
  kNoQuantifiedPatches,
  kDivergence,
  kPartialFailure,
};

std::string_view ToString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

/// Exit status convention of the command-line tool.
int ExitCodeFor(ErrorKind kind);

}  // namespace tilscore
