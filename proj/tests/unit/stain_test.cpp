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

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"
#include "tilscore/stain.hpp"

namespace tilscore {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Independent oracle: normalized reference rows and an adjugate inverse.
Mat3 ReferenceRows() {
  Mat3 m = {{{0.65, 0.70, 0.29}, {0.07, 0.99, 0.11}, {0.27, 0.57, 0.78}}};
  for (auto& row : m) {
    const double n = std::sqrt(row[0] * row[0] + row[1] * row[1] + row[2] * row[2]);
    for (double& v : row) v /= n;
  }
  return m;
}

Mat3 AdjugateInverse(const Mat3& a) {
  Mat3 inv{};
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3;
      const int r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3;
      const int c1 = (i + 2) % 3;
      inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
    }
  }
  return inv;
}

TEST(StainMatrix, RowsAreUnitAndInverseIsExact) {
  const StainMatrix& m = StainMatrix::RuifrokJohnston();
  const Mat3 ref = ReferenceRows();
  for (int r = 0; r < 3; ++r) {
    double norm = 0.0;
    for (int c = 0; c < 3; ++c) {
      norm += m.at(r, c) * m.at(r, c);
      EXPECT_NEAR(m.at(r, c), ref[r][c], 1e-12);
    }
    EXPECT_NEAR(norm, 1.0, 1e-9);
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double prod = 0.0;
      for (int k = 0; k < 3; ++k) prod += m.at(r, k) * m.inverse_at(k, c);
      EXPECT_NEAR(prod, r == c ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST(StainMatrix, SingularOrZeroRowsAreRejected) {
  const std::array<double, 9> zero_row = {0, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::array<double, 9> repeated = {1, 0, 0, 2, 0, 0, 0, 0, 1};
  EXPECT_THROW(StainMatrix{zero_row}, Error);
  EXPECT_THROW(StainMatrix{repeated}, Error);
}

TEST(RgbToHed, WhiteIsZero) {
  const Hed w = RgbToHed({255, 255, 255});
  EXPECT_NEAR(w.h, 0.0, 1e-6);
  EXPECT_NEAR(w.e, 0.0, 1e-6);
  EXPECT_NEAR(w.d, 0.0, 1e-6);
}

TEST(RgbToHed, BlackMatchesLinearAlgebraOracle) {
  const double od = std::log10(255.0);
  EXPECT_NEAR(OpticalDensity(0), od, 1e-12);
  const Mat3 inv = AdjugateInverse(ReferenceRows());
  std::array<double, 3> expected{};
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) expected[j] += od * inv[i][j];
  }
  const Hed black = RgbToHed({0, 0, 0});
  EXPECT_NEAR(black.h, expected[0], 1e-9);
  EXPECT_NEAR(black.e, expected[1], 1e-9);
  EXPECT_NEAR(black.d, expected[2], 1e-9);
  EXPECT_TRUE(std::isfinite(black.h));
}

TEST(HedToRgb, ZeroAndNegativeConcentrationsGiveWhite) {
  EXPECT_EQ(HedToRgb({0, 0, 0}), (Rgb{255, 255, 255}));
  EXPECT_EQ(HedToRgb({-0.3, -1.0, -0.2}), (Rgb{255, 255, 255}));
}

TEST(HedToRgb, UnitHematoxylinRoundTrips) {
  const Hed back = RgbToHed(HedToRgb({1.0, 0.0, 0.0}));
  EXPECT_NEAR(back.h, 1.0, 1e-2);
  // Quantization to 8 bits bounds the error; the acceptance is per pixel.
  const Rgb px = HedToRgb({1.0, 0.0, 0.0});
  EXPECT_EQ(HedToRgb(RgbToHed(px)), px);
}

TEST(HedToRgb, RoundTripWithinTwoLevels) {
  Pcg32 rng(11);
  int worst = 0;
  for (int i = 0; i < 20000; ++i) {
    const Rgb p{static_cast<std::uint8_t>(16 + rng.bounded(240)),
                static_cast<std::uint8_t>(16 + rng.bounded(240)),
                static_cast<std::uint8_t>(16 + rng.bounded(240))};
    const Rgb q = HedToRgb(RgbToHed(p));
    worst = std::max({worst, std::abs(p.r - q.r), std::abs(p.g - q.g),
                      std::abs(p.b - q.b)});
  }
  EXPECT_LE(worst, 2);
}

TEST(HedBuffer, BufferConversionMatchesPerPixel) {
  PixelBuffer img(4, 3);
  Pcg32 rng(2);
  for (auto& b : img.mutable_bytes()) b = static_cast<std::uint8_t>(rng.next());
  const HedBuffer hed = rgb_to_hed(img);
  ASSERT_EQ(hed.width, 4);
  ASSERT_EQ(hed.height, 3);
  const Hed one = RgbToHed(img.at(2, 1));
  EXPECT_DOUBLE_EQ(hed.at(2, 1).h, one.h);
  EXPECT_EQ(hed_to_rgb(hed).at(3, 2), HedToRgb(hed.at(3, 2)));
}

PixelBuffer Uniform(int w, int h, Rgb c) { return PixelBuffer(w, h, c); }

TEST(HematoxylinMean, WhiteIsZeroAndFailsFilter) {
  const PixelBuffer white = Uniform(200, 120, {255, 255, 255});
  EXPECT_NEAR(hematoxylin_mean(white), 0.0, 1e-12);
  EXPECT_FALSE(passes_h_filter(white));
  EXPECT_TRUE(passes_h_filter(white, 0.0));
}

TEST(HematoxylinMean, RecoversPlantedConcentration) {
  const PixelBuffer patch = Uniform(768, 768, HedToRgb({0.05, 0.0, 0.0}));
  EXPECT_NEAR(hematoxylin_mean(patch), 0.05, 5e-3);
  EXPECT_TRUE(passes_h_filter(patch));
}

TEST(HematoxylinMean, DownsamplingIsTheMeanOfBlocks) {
  // Every 2x2 block lies inside one uniform half, so the box filter is exact.
  PixelBuffer img(192, 96, HedToRgb({0.08, 0.02, 0.0}));
  for (int y = 0; y < 96; ++y) {
    for (int x = 96; x < 192; ++x) img.set(x, y, {255, 255, 255});
  }
  const double full = hematoxylin_mean(img, 192);
  const double half = hematoxylin_mean(img, 96);
  EXPECT_NEAR(full, half, 1e-12);
  EXPECT_NEAR(full, RgbToHed(img.at(0, 0)).h / 2.0, 1e-12);
}

PixelBuffer Transform(const PixelBuffer& src, int mode) {
  const int w = src.width();
  const int h = src.height();
  PixelBuffer out(mode == 0 ? h : w, mode == 0 ? w : h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = src.at(x, y);
      if (mode == 0) out.set(h - 1 - y, x, c);        // rotate 90
      if (mode == 1) out.set(w - 1 - x, y, c);        // horizontal flip
      if (mode == 2) out.set(x, h - 1 - y, c);        // vertical flip
    }
  }
  return out;
}

TEST(HematoxylinMean, InvariantToRotationAndFlip) {
  Pcg32 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    // Side at most eval_dim so no resampling is involved.
    PixelBuffer img(64, 64);
    for (auto& b : img.mutable_bytes()) b = static_cast<std::uint8_t>(rng.next());
    const double base = hematoxylin_mean(img);
    for (int mode = 0; mode < 3; ++mode) {
      EXPECT_NEAR(hematoxylin_mean(Transform(img, mode)), base, 1e-12);
    }
  }
}

TEST(HematoxylinMean, DarkeningDoesNotDecreaseMeanOfStainedPatches) {
  // Scaling intensities by s < 1 adds -log10(s) to every OD channel, which
  // moves h by -log10(s) times the column sum of the inverse for h.
  const StainMatrix& m = StainMatrix::RuifrokJohnston();
  const double h_per_od = m.inverse_at(0, 0) + m.inverse_at(1, 0) + m.inverse_at(2, 0);
  ASSERT_GT(h_per_od, 0.0);
  Pcg32 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    PixelBuffer img(48, 48);
    for (auto& b : img.mutable_bytes()) {
      b = static_cast<std::uint8_t>(64 + rng.bounded(192));
    }
    const double s = 0.5 + 0.45 * rng.uniform();
    PixelBuffer dark = img;
    for (auto& b : dark.mutable_bytes()) {
      b = static_cast<std::uint8_t>(std::floor(b * s));
    }
    EXPECT_GE(hematoxylin_mean(dark), hematoxylin_mean(img) - 1e-12);
  }
}

}  // namespace
}  // namespace tilscore
