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

#include "tilscore/stain.hpp"

#include <algorithm>
#include <cmath>

#include "tilscore/error.hpp"

namespace tilscore {

namespace {

const std::array<double, 256>& OdTable() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      t[i] = -std::log10(std::max(i, 1) / 255.0);
    }
    return t;
  }();
  return table;
}

std::uint8_t ToIntensity(double od) {
  const double v = std::round(255.0 * std::pow(10.0, -od));
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

}  // namespace

const StainMatrix& StainMatrix::RuifrokJohnston() {
  static const StainMatrix m(std::array<double, 9>{
      0.65, 0.70, 0.29, 0.07, 0.99, 0.11, 0.27, 0.57, 0.78});
  return m;
}

StainMatrix::StainMatrix(std::span<const double, 9> rows) {
  for (int r = 0; r < 3; ++r) {
    const double norm = std::sqrt(rows[3 * r] * rows[3 * r] +
                                  rows[3 * r + 1] * rows[3 * r + 1] +
                                  rows[3 * r + 2] * rows[3 * r + 2]);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      Fail(ErrorKind::kArgument, "stain matrix row has zero norm");
    }
    for (int c = 0; c < 3; ++c) m_[3 * r + c] = rows[3 * r + c] / norm;
  }
  const auto& a = m_;
  const double c00 = a[4] * a[8] - a[5] * a[7];
  const double c01 = a[5] * a[6] - a[3] * a[8];
  const double c02 = a[3] * a[7] - a[4] * a[6];
  const double det = a[0] * c00 + a[1] * c01 + a[2] * c02;
  if (std::abs(det) < 1e-12) {
    Fail(ErrorKind::kArgument, "stain matrix is singular");
  }
  inv_ = {c00 / det,
          (a[2] * a[7] - a[1] * a[8]) / det,
          (a[1] * a[5] - a[2] * a[4]) / det,
          c01 / det,
          (a[0] * a[8] - a[2] * a[6]) / det,
          (a[2] * a[3] - a[0] * a[5]) / det,
          c02 / det,
          (a[1] * a[6] - a[0] * a[7]) / det,
          (a[0] * a[4] - a[1] * a[3]) / det};
}

double OpticalDensity(std::uint8_t intensity) { return OdTable()[intensity]; }

Hed RgbToHed(Rgb pixel, const StainMatrix& m) {
  const auto& od = OdTable();
  const double r = od[pixel.r];
  const double g = od[pixel.g];
  const double b = od[pixel.b];
  return {r * m.inverse_at(0, 0) + g * m.inverse_at(1, 0) + b * m.inverse_at(2, 0),
          r * m.inverse_at(0, 1) + g * m.inverse_at(1, 1) + b * m.inverse_at(2, 1),
          r * m.inverse_at(0, 2) + g * m.inverse_at(1, 2) + b * m.inverse_at(2, 2)};
}

Rgb HedToRgb(const Hed& hed, const StainMatrix& m) {
  double od[3];
  for (int c = 0; c < 3; ++c) {
    od[c] = hed.h * m.at(0, c) + hed.e * m.at(1, c) + hed.d * m.at(2, c);
  }
  return {ToIntensity(od[0]), ToIntensity(od[1]), ToIntensity(od[2])};
}

HedBuffer rgb_to_hed(const PixelBuffer& buf, const StainMatrix& m) {
  HedBuffer out{buf.width(), buf.height(), {}};
  out.values.reserve(static_cast<std::size_t>(buf.width()) * buf.height());
  for (int y = 0; y < buf.height(); ++y) {
    for (int x = 0; x < buf.width(); ++x) {
      out.values.push_back(RgbToHed(buf.at(x, y), m));
    }
  }
  return out;
}

PixelBuffer hed_to_rgb(const HedBuffer& hed, const StainMatrix& m) {
  PixelBuffer out(hed.width, hed.height);
  for (int y = 0; y < hed.height; ++y) {
    for (int x = 0; x < hed.width; ++x) {
      out.set(x, y, HedToRgb(hed.at(x, y), m));
    }
  }
  return out;
}

double hematoxylin_mean(const PixelBuffer& buf, int eval_dim,
                        const StainMatrix& m) {
  if (buf.empty()) Fail(ErrorKind::kArgument, "hematoxylin_mean: empty buffer");
  if (eval_dim < 16) {
    Fail(ErrorKind::kArgument, "hematoxylin_mean: eval_dim must be >= 16");
  }
  const auto [w, h] = FitWithin(buf.width(), buf.height(), eval_dim);
  const PixelBuffer small =
      (w == buf.width() && h == buf.height()) ? buf : BoxResize(buf, w, h);

  // h is linear in optical density, so accumulate per-channel OD sums.
  const auto& od = OdTable();
  double sum[3] = {0.0, 0.0, 0.0};
  const auto bytes = small.bytes();
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    sum[0] += od[bytes[i]];
    sum[1] += od[bytes[i + 1]];
    sum[2] += od[bytes[i + 2]];
  }
  const double n = static_cast<double>(bytes.size() / 3);
  return (sum[0] * m.inverse_at(0, 0) + sum[1] * m.inverse_at(1, 0) +
          sum[2] * m.inverse_at(2, 0)) /
         n;
}

bool passes_h_filter(const PixelBuffer& buf, double threshold, int eval_dim,
                     const StainMatrix& m) {
  if (!(threshold >= 0.0)) {
    Fail(ErrorKind::kArgument, "passes_h_filter: threshold must be >= 0");
  }
  return hematoxylin_mean(buf, eval_dim, m) >= threshold;
}

}  // namespace tilscore
