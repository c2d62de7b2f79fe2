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

#include "tilscore/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tilscore {

std::string IndexedFailure::message() const {
  try {
    if (error) std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
  return {};
}

ErrorKind IndexedFailure::kind() const {
  try {
    if (error) std::rethrow_exception(error);
  } catch (const Error& e) {
    return e.kind();
  } catch (...) {
  }
  return ErrorKind::kIo;
}

void RaiseFirstFailure(const std::vector<IndexedFailure>& failures,
                       const std::string& what) {
  if (failures.empty()) return;
  const IndexedFailure& f = failures.front();
  Fail(f.kind(), what + " " + std::to_string(f.index) + ": " + f.message());
}

std::vector<IndexedFailure> ParallelFor(
    std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<IndexedFailure> failures;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        failures.push_back({i, std::current_exception()});
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  std::sort(failures.begin(), failures.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return failures;
}

}  // namespace tilscore
