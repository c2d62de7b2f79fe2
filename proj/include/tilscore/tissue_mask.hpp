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
#include <cstdint>
#include <span>
#include <vector>

#include "tilscore/image.hpp"

namespace tilscore {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 1 = tissue, row-major

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(std::size_t(w) * h, 0) {}

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
};

enum class CoordinateSpace { kThumbnail, kLevel0 };

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed outline; the last vertex connects back to the first.
struct Polygon {
  std::vector<Point> vertices;
  CoordinateSpace space = CoordinateSpace::kThumbnail;

  bool empty() const { return vertices.size() < 3; }
  /// Absolute shoelace area.
  double area() const;
  /// (min_x, min_y, max_x, max_y).
  std::array<double, 4> bounds() const;
  /// Even-odd rule.
  bool contains(double x, double y) const;
};

/// HSV saturation scaled to 0..255, i.e. round(255 * (max - min) / max).
std::uint8_t Saturation(Rgb c);

/// Otsu threshold over a 256-bin histogram: the t maximizing between-class
/// variance for the split {v <= t} / {v > t}. Ties resolve to the smallest t.
int OtsuThreshold(std::span<const std::uint64_t, 256> histogram);

/// Each output pixel is the majority of the in-bounds 3x3 neighbourhood.
BinaryMask MajorityFilter3x3(const BinaryMask& mask);

/// Tissue = saturation above the Otsu threshold, then a 3x3 majority filter.
BinaryMask binarize_thumbnail(const PixelBuffer& thumb);

/// Pixel-edge outline of the largest 4-connected tissue component, traced
/// clockwise from the top-left corner of its first raster pixel. Vertices lie
/// on pixel corners, so a filled k x k square yields area k*k; holes are not
/// subtracted. Area ties go to the component found first in raster order.
/// Throws kEmptyTissue on an all-false mask.
Polygon extract_largest_contour(const BinaryMask& mask);

/// Scales thumbnail vertices by `scale_factor` and clamps them to
/// [0, width] x [0, height] of level 0.
Polygon project_to_level0(const Polygon& poly, double scale_factor,
                          int level0_width, int level0_height);

}  // namespace tilscore
