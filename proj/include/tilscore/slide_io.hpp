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

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tilscore/image.hpp"

namespace tilscore {

struct LevelInfo {
  int width = 0;
  int height = 0;
  double downsample = 1.0;
};

/// Pyramid description as stored in meta.json.
struct SlideMeta {
  std::string slide_id;
  double mpp = 0.0;  // microns per level-0 pixel
  std::vector<LevelInfo> levels;

  int level_count() const { return static_cast<int>(levels.size()); }
  int width() const { return levels.at(0).width; }
  int height() const { return levels.at(0).height; }

  /// Throws kFormat when the pyramid invariants do not hold.
  void validate() const;
};

std::string MetaToJson(const SlideMeta& meta);
SlideMeta MetaFromJson(const std::string& text);

/// Read-only view over one slide bundle.
///
/// Levels are decoded on first access and kept in memory. Copies share the
/// decoded levels, and `read_region` may be called from several threads at
/// once.
class SlideHandle {
 public:
  SlideHandle() = default;

  /// In-memory slide; `levels` must match `meta`.
  static SlideHandle FromLevels(SlideMeta meta, std::vector<PixelBuffer> levels);

  const SlideMeta& meta() const;
  const std::filesystem::path& path() const;

  /// Exact stored pixels of [x, x+w) x [y, y+h) at `level`.
  PixelBuffer read_region(int level, int x, int y, int w, int h) const;

  /// Whole decoded level.
  const PixelBuffer& level_pixels(int level) const;

 private:
  friend SlideHandle open_bundle(const std::filesystem::path& dir);
  struct State;
  std::shared_ptr<State> state_;
};

/// Opens a bundle directory: parses meta.json (kFormat on missing/corrupt)
/// and checks that every level PNG exists with the declared size
/// (kIntegrity otherwise).
SlideHandle open_bundle(const std::filesystem::path& dir);

struct Thumbnail {
  PixelBuffer image;
  /// level-0 longest side / thumbnail longest side.
  double scale_factor = 1.0;
};

/// Box-filtered overview whose longest side is at most `max_dim` (>= 16).
/// The source is the smallest stored level that is still at least as large
/// as the target.
Thumbnail make_thumbnail(const SlideHandle& slide, int max_dim);

}  // namespace tilscore
