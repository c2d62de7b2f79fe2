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

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace tilscore {

/// PCG32 (XSH-RR variant, 64-bit LCG state, 32-bit output).
///
/// Multiplier 6364136223846793005, default stream 0xda3e39cb94b95bdb,
/// seeding as in the reference `pcg32_srandom_r`. Every random draw in the
/// pipeline goes through this generator so that outputs are identical across
/// compilers and standard libraries.
class Pcg32 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream);

  std::uint32_t next();

  /// Uniform integer in [0, bound) by rejection of the biased low range.
  std::uint32_t bounded(std::uint32_t bound);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform();

  /// Poisson draw by CDF inversion; means above 32 are split into chunks
  /// whose draws are summed.
  std::uint32_t poisson(double mean);

 private:
  std::uint32_t poisson_small(double mean);

  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

/// Order-dependent combination of seed material.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> parts);

std::uint64_t HashString(std::string_view text);

/// Bit pattern of a double, for hashing real-valued parameters.
std::uint64_t DoubleBits(double value);

}  // namespace tilscore
