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

#include "tilscore/viz.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tilscore/error.hpp"

namespace tilscore {

ColorMap ColorMap::Default() {
  return {{{0.00, {49, 54, 149}},
           {0.25, {116, 173, 209}},
           {0.50, {255, 255, 191}},
           {0.75, {244, 109, 67}},
           {1.00, {165, 0, 38}}}};
}

void ColorMap::validate() const {
  if (stops.size() < 2 || stops.front().first != 0.0 ||
      stops.back().first != 1.0) {
    Fail(ErrorKind::kConfig, "colormap must run from 0 to 1");
  }
  for (std::size_t i = 1; i < stops.size(); ++i) {
    if (!(stops[i].first > stops[i - 1].first)) {
      Fail(ErrorKind::kConfig, "colormap stops must increase strictly");
    }
  }
}

namespace {
std::uint8_t Lerp(std::uint8_t a, std::uint8_t b, double t) {
  return static_cast<std::uint8_t>(std::floor(a + (b - a) * t + 0.5));
}
}  // namespace

Rgb ColorMap::at(double fraction) const {
  const double f = std::clamp(fraction, 0.0, 1.0);
  std::size_t i = 1;
  while (i + 1 < stops.size() && f > stops[i].first) ++i;
  const auto& [f0, c0] = stops[i - 1];
  const auto& [f1, c1] = stops[i];
  const double t = (f - f0) / (f1 - f0);
  return {Lerp(c0.r, c1.r, t), Lerp(c0.g, c1.g, t), Lerp(c0.b, c1.b, t)};
}

Rgb ClassColor(PatchClass c) {
  switch (c) {
    case PatchClass::kNecrosis: return {220, 30, 30};
    case PatchClass::kStroma: return {30, 180, 60};
    case PatchClass::kNormalLung: return {40, 80, 220};
    case PatchClass::kTumor: return {240, 220, 30};
  }
  return {};
}

Rgb Blend(Rgb paint, Rgb base) {
  // Integer form of round(0.6 p + 0.4 b), halves rounded up.
  auto mix = [](int p, int b) {
    return static_cast<std::uint8_t>((6 * p + 4 * b + 5) / 10);
  };
  return {mix(paint.r, base.r), mix(paint.g, base.g), mix(paint.b, base.b)};
}

namespace {
int RoundHalfUp(double v) { return static_cast<int>(std::floor(v + 0.5)); }
}  // namespace

ThumbRect PatchRect(const Candidate& c, double scale_factor,
                    const PixelBuffer& thumb) {
  if (!(scale_factor > 0.0)) Fail(ErrorKind::kArgument, "scale must be > 0");
  ThumbRect r;
  r.x0 = RoundHalfUp(c.x / scale_factor);
  r.y0 = RoundHalfUp(c.y / scale_factor);
  r.x1 = RoundHalfUp((c.x + c.patch_size) / scale_factor);
  r.y1 = RoundHalfUp((c.y + c.patch_size) / scale_factor);
  if (r.x0 < 0 || r.y0 < 0 || r.x0 >= thumb.width() || r.y0 >= thumb.height() ||
      r.x1 > thumb.width() + 1 || r.y1 > thumb.height() + 1) {
    Fail(ErrorKind::kArgument,
         "patch " + PatchId(c) + " falls outside the thumbnail; scale mismatch");
  }
  r.x1 = std::max(std::min(r.x1, thumb.width()), r.x0 + 1);
  r.y1 = std::max(std::min(r.y1, thumb.height()), r.y0 + 1);
  return r;
}

PixelBuffer render_heatmap(const PixelBuffer& thumb,
                           const std::vector<Candidate>& candidates,
                           double scale_factor, double clip,
                           const ColorMap& colors) {
  if (!(clip > 0.0)) Fail(ErrorKind::kArgument, "clip must be > 0");
  colors.validate();
  PixelBuffer out = thumb;
  for (const Candidate& c : candidates) {
    if (!c.density_mm2) continue;
    const Rgb paint = colors.at(std::min(*c.density_mm2, clip) / clip);
    const ThumbRect r = PatchRect(c, scale_factor, thumb);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) out.set(x, y, Blend(paint, thumb.at(x, y)));
    }
  }
  return out;
}

PixelBuffer render_class_overlay(const PixelBuffer& thumb,
                                 const std::vector<Candidate>& candidates,
                                 double scale_factor) {
  PixelBuffer out = thumb;
  for (const Candidate& c : candidates) {
    if (!c.class_label) continue;
    const Rgb paint = ClassColor(*c.class_label);
    const ThumbRect r = PatchRect(c, scale_factor, thumb);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const bool edge =
            x == r.x0 || y == r.y0 || x == r.x1 - 1 || y == r.y1 - 1;
        if (edge) {
          out.set(x, y, paint);
        } else if (c.sampled) {
          out.set(x, y, Blend(paint, thumb.at(x, y)));
        }
      }
    }
  }
  return out;
}

std::string LegendJson(double clip, const ColorMap& colors, std::uint64_t seed,
                       const std::string& config_hash) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["clip"] = clip;
  j["alpha"] = kOverlayAlpha;
  ordered_json stops = ordered_json::array();
  for (const auto& [f, c] : colors.stops) {
    stops.push_back({{"fraction", f}, {"rgb", {c.r, c.g, c.b}}});
  }
  j["colormap"] = stops;
  ordered_json palette = ordered_json::object();
  for (PatchClass pc : kPatchClasses) {
    const Rgb c = ClassColor(pc);
    palette[std::string(Name(pc))] = {c.r, c.g, c.b};
  }
  j["palette"] = palette;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

}  // namespace tilscore
