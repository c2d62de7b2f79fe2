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

#include "tilscore/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace tilscore {

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) {
  state_ = 0;
  inc_ = (stream << 1u) | 1u;
  next();
  state_ += seed;
  next();
}

std::uint32_t Pcg32::next() {
  const std::uint64_t old = state_;
  state_ = old * kMultiplier + inc_;
  const auto xorshifted =
      static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return std::rotr(xorshifted, static_cast<int>(rot));
}

std::uint32_t Pcg32::bounded(std::uint32_t bound) {
  if (bound == 0) throw std::invalid_argument("Pcg32::bounded: bound is 0");
  const std::uint32_t threshold = (0u - bound) % bound;
  for (;;) {
    const std::uint32_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double Pcg32::uniform() {
  const std::uint64_t hi = next() >> 5;  // 27 bits
  const std::uint64_t lo = next() >> 6;  // 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

std::uint32_t Pcg32::poisson_small(double mean) {
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint32_t k = 0;
  // The tail cap keeps a pathological u near 1 from looping on rounding.
  while (u >= cdf && k < 10000) {
    ++k;
    p *= mean / k;
    cdf += p;
    if (p == 0.0) break;
  }
  return k;
}

std::uint32_t Pcg32::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("Pcg32::poisson: mean must be finite, >= 0");
  }
  if (mean == 0.0) return 0;
  constexpr double kChunk = 32.0;
  std::uint32_t total = 0;
  double rest = mean;
  while (rest > kChunk) {
    total += poisson_small(kChunk);
    rest -= kChunk;
  }
  return total + poisson_small(rest);
}

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = Mix64(base);
  for (std::uint64_t part : parts) h = Mix64(h ^ Mix64(part));
  return h;
}

std::uint64_t HashString(std::string_view text) {
  // FNV-1a 64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t DoubleBits(double value) {
  if (value == 0.0) value = 0.0;  // fold -0.0
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace tilscore
