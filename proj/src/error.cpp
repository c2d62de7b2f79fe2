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

#include "tilscore/error.hpp"

namespace tilscore {

std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return "argument error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIntegrity: return "integrity error";
    case ErrorKind::kBounds: return "bounds error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kEmptyTissue: return "empty tissue";
    case ErrorKind::kBackendUnavailable: return "backend unavailable";
    case ErrorKind::kProtocol: return "protocol error";
    case ErrorKind::kUndefinedMetric: return "undefined metric";
    case ErrorKind::kNoQuantifiedPatches: return "no quantified patches";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kPartialFailure: return "partial failure";
  }
  return "error";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kBackendUnavailable:
    case ErrorKind::kProtocol:
      return 4;
    case ErrorKind::kPartialFailure:
      return 5;
    default:
      return 3;
  }
}

}  // namespace tilscore
