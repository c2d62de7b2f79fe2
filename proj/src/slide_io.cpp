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

#include "tilscore/slide_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "json.hpp"

#include "tilscore/error.hpp"

namespace tilscore {

using nlohmann::json;

void SlideMeta::validate() const {
  if (slide_id.empty()) Fail(ErrorKind::kFormat, "meta: empty slide_id");
  if (!(mpp > 0.0) || !std::isfinite(mpp)) {
    Fail(ErrorKind::kFormat, "meta: mpp must be positive");
  }
  if (levels.empty()) Fail(ErrorKind::kFormat, "meta: no levels");
  if (levels[0].downsample != 1.0) {
    Fail(ErrorKind::kFormat, "meta: level 0 downsample must be 1.0");
  }
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const LevelInfo& l = levels[k];
    if (l.width < 1 || l.height < 1) {
      Fail(ErrorKind::kFormat, "meta: level dims must be positive");
    }
    if (k > 0) {
      const LevelInfo& p = levels[k - 1];
      if (l.width > p.width || l.height > p.height) {
        Fail(ErrorKind::kFormat, "meta: level dims must not increase");
      }
      if (!(l.downsample > p.downsample)) {
        Fail(ErrorKind::kFormat, "meta: downsample must strictly increase");
      }
    }
  }
}

std::string MetaToJson(const SlideMeta& meta) {
  json levels = json::array();
  for (std::size_t k = 0; k < meta.levels.size(); ++k) {
    levels.push_back({{"index", k},
                      {"width", meta.levels[k].width},
                      {"height", meta.levels[k].height},
                      {"downsample", meta.levels[k].downsample}});
  }
  json j = {{"slide_id", meta.slide_id}, {"mpp", meta.mpp}, {"levels", levels}};
  return j.dump(2) + "\n";
}

SlideMeta MetaFromJson(const std::string& text) {
  SlideMeta meta;
  try {
    const json j = json::parse(text);
    meta.slide_id = j.at("slide_id").get<std::string>();
    meta.mpp = j.at("mpp").get<double>();
    const json& levels = j.at("levels");
    meta.levels.resize(levels.size());
    std::vector<bool> seen(levels.size(), false);
    for (const json& l : levels) {
      const auto index = l.at("index").get<std::size_t>();
      if (index >= levels.size() || seen[index]) {
        Fail(ErrorKind::kFormat, "meta: bad level index");
      }
      seen[index] = true;
      meta.levels[index] = {l.at("width").get<int>(), l.at("height").get<int>(),
                            l.at("downsample").get<double>()};
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("meta.json: ") + e.what());
  }
  meta.validate();
  return meta;
}

struct SlideHandle::State {
  std::filesystem::path dir;
  SlideMeta meta;
  std::vector<PixelBuffer> levels;
  std::unique_ptr<std::once_flag[]> loaded;
};

SlideHandle SlideHandle::FromLevels(SlideMeta meta,
                                    std::vector<PixelBuffer> levels) {
  meta.validate();
  if (levels.size() != meta.levels.size()) {
    Fail(ErrorKind::kIntegrity, "level count does not match meta");
  }
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].width() != meta.levels[k].width ||
        levels[k].height() != meta.levels[k].height) {
      Fail(ErrorKind::kIntegrity, "level dims do not match meta");
    }
  }
  SlideHandle h;
  h.state_ = std::make_shared<State>();
  h.state_->meta = std::move(meta);
  h.state_->levels = std::move(levels);
  h.state_->loaded = std::make_unique<std::once_flag[]>(h.state_->levels.size());
  for (std::size_t k = 0; k < h.state_->levels.size(); ++k) {
    std::call_once(h.state_->loaded[k], [] {});
  }
  return h;
}

const SlideMeta& SlideHandle::meta() const {
  if (!state_) Fail(ErrorKind::kArgument, "slide handle is not open");
  return state_->meta;
}

const std::filesystem::path& SlideHandle::path() const {
  if (!state_) Fail(ErrorKind::kArgument, "slide handle is not open");
  return state_->dir;
}

const PixelBuffer& SlideHandle::level_pixels(int level) const {
  const SlideMeta& m = meta();
  if (level < 0 || level >= m.level_count()) {
    Fail(ErrorKind::kBounds, "level index out of range");
  }
  State& s = *state_;
  std::call_once(s.loaded[level], [&] {
    const auto file = s.dir / ("level_" + std::to_string(level) + ".png");
    PixelBuffer img = ReadPng(file);
    if (img.width() != m.levels[level].width ||
        img.height() != m.levels[level].height) {
      Fail(ErrorKind::kIntegrity, file.string() + " does not match meta");
    }
    s.levels[level] = std::move(img);
  });
  return s.levels[level];
}

PixelBuffer SlideHandle::read_region(int level, int x, int y, int w,
                                     int h) const {
  if (w < 1 || h < 1) {
    Fail(ErrorKind::kArgument, "read_region: width and height must be >= 1");
  }
  const SlideMeta& m = meta();
  if (level < 0 || level >= m.level_count()) {
    Fail(ErrorKind::kBounds, "read_region: level out of range");
  }
  const LevelInfo& info = m.levels[level];
  if (x < 0 || y < 0 || x > info.width - w || y > info.height - h) {
    Fail(ErrorKind::kBounds, "read_region: rectangle outside level " +
                                 std::to_string(level));
  }
  return level_pixels(level).crop(x, y, w, h);
}

SlideHandle open_bundle(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) Fail(ErrorKind::kFormat, "missing " + meta_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  SlideMeta meta = MetaFromJson(ss.str());

  for (int k = 0; k < meta.level_count(); ++k) {
    const auto file = dir / ("level_" + std::to_string(k) + ".png");
    if (!std::filesystem::exists(file)) {
      Fail(ErrorKind::kIntegrity, "meta declares " +
                                      std::to_string(meta.level_count()) +
                                      " levels but " + file.string() +
                                      " is missing");
    }
    std::pair<int, int> dims;
    try {
      dims = PngDimensions(file);
    } catch (const Error& e) {
      Fail(ErrorKind::kIntegrity, e.what());
    }
    if (dims.first != meta.levels[k].width ||
        dims.second != meta.levels[k].height) {
      Fail(ErrorKind::kIntegrity, file.string() + " is " +
                                      std::to_string(dims.first) + "x" +
                                      std::to_string(dims.second) +
                                      ", meta says otherwise");
    }
  }

  SlideHandle h;
  h.state_ = std::make_shared<SlideHandle::State>();
  h.state_->dir = dir;
  h.state_->levels.resize(meta.levels.size());
  h.state_->loaded = std::make_unique<std::once_flag[]>(meta.levels.size());
  h.state_->meta = std::move(meta);
  return h;
}

Thumbnail make_thumbnail(const SlideHandle& slide, int max_dim) {
  if (max_dim < 16) Fail(ErrorKind::kArgument, "make_thumbnail: max_dim < 16");
  const SlideMeta& m = slide.meta();
  const auto [tw, th] = FitWithin(m.width(), m.height(), max_dim);

  int source = 0;
  for (int k = m.level_count() - 1; k >= 0; --k) {
    if (m.levels[k].width >= tw && m.levels[k].height >= th) {
      source = k;
      break;
    }
  }
  Thumbnail out;
  out.image = BoxResize(slide.level_pixels(source), tw, th);
  out.scale_factor = static_cast<double>(std::max(m.width(), m.height())) /
                     static_cast<double>(std::max(tw, th));
  return out;
}

}  // namespace tilscore
