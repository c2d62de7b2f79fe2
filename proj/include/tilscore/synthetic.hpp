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
#include <filesystem>
#include <string>
#include <vector>

#include "tilscore/slide_io.hpp"
#include "tilscore/stain.hpp"
#include "tilscore/taxonomy.hpp"

namespace tilscore {

/// Axis-aligned region of the planted truth, in level-0 pixels. Regions are
/// painted in list order; later regions cover earlier ones.
struct TruthRegion {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  TissueClass cls = TissueClass::kBackground;
  double density_per_mm2 = 0.0;  // planted TIL density
  /// Share of all nuclei that are inflammatory; the mock quantifier adds
  /// non-TIL nuclei so that TILs make up this fraction.
  double til_share = 1.0;

  bool contains(double px, double py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
};

/// Layout of a synthetic slide.
struct SyntheticSlideSpec {
  std::string slide_id = "synthetic";
  int width = 0;
  int height = 0;
  double mpp = 0.25;
  int max_levels = 3;
  int level_step = 4;  // downsample ratio between consecutive levels
  std::vector<TruthRegion> regions;
  double noise = 0.004;  // peak-to-peak concentration jitter per pixel

  void validate() const;
};

/// Planted ground truth: the region list at level 0 plus a rasterized class
/// map at `level`.
struct GroundTruthMap {
  std::string slide_id;
  std::uint64_t seed = 0;
  int width = 0;   // level-0 extent
  int height = 0;
  int level = 0;   // level of `classes`
  int level_width = 0;
  int level_height = 0;
  std::vector<std::uint8_t> classes;  // TissueClass per pixel at `level`
  std::vector<TruthRegion> regions;

  /// Topmost region covering the level-0 point, or nullptr for background.
  const TruthRegion* region_at(double x, double y) const;
  TissueClass class_at(double x, double y) const;
  double density_at(double x, double y) const;
  TissueClass class_at_level(int x, int y) const {
    return static_cast<TissueClass>(
        classes[static_cast<std::size_t>(y) * level_width + x]);
  }
  double background_fraction() const;
};

/// Mean concentrations used to render a class; also used by tests to derive
/// expectations.
Hed RenderConcentration(TissueClass cls, double density_per_mm2);

/// Writes a complete bundle (meta.json, level_<k>.png, truth.json,
/// truth_<k>.png) into `out_dir` and returns the level-0 truth. A pure
/// function of (spec, seed).
GroundTruthMap generate_synthetic_slide(const SyntheticSlideSpec& spec,
                                        std::uint64_t seed,
                                        const std::filesystem::path& out_dir);

/// Reads truth.json (and truth_<level>.png when present).
GroundTruthMap load_truth(const std::filesystem::path& bundle_dir,
                          int level = 0);

std::string SpecToJson(const SyntheticSlideSpec& spec);
SyntheticSlideSpec SpecFromJson(const std::string& text);

}  // namespace tilscore
