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

#include <array>
#include <span>
#include <vector>

#include "tilscore/image.hpp"

namespace tilscore {

/// Stain vectors in optical-density space, one unit-norm row per stain in
/// the order hematoxylin, eosin, DAB, together with the matrix inverse.
class StainMatrix {
 public:
  /// Ruifrok & Johnston reference vectors H=(0.65, 0.70, 0.29),
  /// E=(0.07, 0.99, 0.11), D=(0.27, 0.57, 0.78), row-normalized.
  static const StainMatrix& RuifrokJohnston();

  /// Rows are normalized here; throws kArgument for zero rows or a singular
  /// matrix.
  explicit StainMatrix(std::span<const double, 9> rows);

  double at(int row, int col) const { return m_[3 * row + col]; }
  double inverse_at(int row, int col) const { return inv_[3 * row + col]; }
  const std::array<double, 9>& rows() const { return m_; }

 private:
  std::array<double, 9> m_{};
  std::array<double, 9> inv_{};
};

struct Hed {
  double h = 0.0;
  double e = 0.0;
  double d = 0.0;
};

struct HedBuffer {
  int width = 0;
  int height = 0;
  std::vector<Hed> values;

  const Hed& at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// Optical density -log10(max(I, 1) / 255) for an 8-bit intensity.
double OpticalDensity(std::uint8_t intensity);

Hed RgbToHed(Rgb pixel, const StainMatrix& m = StainMatrix::RuifrokJohnston());
Rgb HedToRgb(const Hed& hed,
             const StainMatrix& m = StainMatrix::RuifrokJohnston());

HedBuffer rgb_to_hed(const PixelBuffer& buf,
                     const StainMatrix& m = StainMatrix::RuifrokJohnston());
PixelBuffer hed_to_rgb(const HedBuffer& hed,
                       const StainMatrix& m = StainMatrix::RuifrokJohnston());

inline constexpr int kDefaultEvalDim = 96;
inline constexpr double kDefaultHThreshold = 0.017;

/// Mean hematoxylin concentration after box-downsampling so the longest side
/// equals `eval_dim` (buffers already that small are used as-is).
double hematoxylin_mean(const PixelBuffer& buf, int eval_dim = kDefaultEvalDim,
                        const StainMatrix& m = StainMatrix::RuifrokJohnston());

bool passes_h_filter(const PixelBuffer& buf,
                     double threshold = kDefaultHThreshold,
                     int eval_dim = kDefaultEvalDim,
                     const StainMatrix& m = StainMatrix::RuifrokJohnston());

}  // namespace tilscore
