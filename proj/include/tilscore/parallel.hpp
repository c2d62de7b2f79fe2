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

#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "tilscore/error.hpp"

namespace tilscore {

struct IndexedFailure {
  std::size_t index = 0;
  std::exception_ptr error;

  std::string message() const;
  /// Kind of a tilscore::Error, kIo for anything else.
  ErrorKind kind() const;
};

/// Calls `fn(i)` for every i in [0, n) on at most `workers` threads, each
/// pulling the next unclaimed index. Results must be written by index so the
/// outcome does not depend on scheduling. Exceptions are collected instead of
/// aborting the remaining work and come back sorted by index.
std::vector<IndexedFailure> ParallelFor(
    std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Rethrows the lowest-index failure as an Error of the same kind, prefixed
/// with "<what> <index>: ". No-op when `failures` is empty.
void RaiseFirstFailure(const std::vector<IndexedFailure>& failures,
                       const std::string& what);

}  // namespace tilscore
