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
#include <string>
#include <utility>
#include <vector>

#include "tilscore/image.hpp"
#include "tilscore/sampler.hpp"
#include "tilscore/taxonomy.hpp"

namespace tilscore {

/// Piecewise-linear colour ramp over [0, 1].
struct ColorMap {
  std::vector<std::pair<double, Rgb>> stops;

  /// Five-stop blue, pale yellow, red ramp.
  static ColorMap Default();

  /// Throws kConfig unless the fractions increase strictly from 0 to 1.
  void validate() const;
  /// Colour at `fraction` (clamped to [0, 1]), channels rounded half-up.
  Rgb at(double fraction) const;
};

/// Fill colour of each patch class in the overlay.
Rgb ClassColor(PatchClass c);

inline constexpr double kOverlayAlpha = 0.6;

/// round(alpha * paint + (1 - alpha) * base) per channel, alpha = 0.6.
Rgb Blend(Rgb paint, Rgb base);

struct ThumbRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
};

/// Level-0 patch mapped to thumbnail pixels: each edge is coord / scale
/// rounded half-up. An edge may overshoot the thumbnail by one pixel from
/// rounding and is clipped; anything further is kArgument.
ThumbRect PatchRect(const Candidate& c, double scale_factor,
                    const PixelBuffer& thumb);

/// Blends colormap(min(d, clip) / clip) over every quantified patch.
PixelBuffer render_heatmap(const PixelBuffer& thumb,
                           const std::vector<Candidate>& candidates,
                           double scale_factor, double clip = 10000.0,
                           const ColorMap& colors = ColorMap::Default());

/// Fills each labelled patch with its class colour and draws a 1 px solid
/// outline. Unlabelled candidates are skipped.
PixelBuffer render_class_overlay(const PixelBuffer& thumb,
                                 const std::vector<Candidate>& candidates,
                                 double scale_factor);

/// Sidecar legend: clip, colormap stops, class palette, seed, config hash.
std::string LegendJson(double clip, const ColorMap& colors, std::uint64_t seed,
                       const std::string& config_hash);

}  // namespace tilscore
