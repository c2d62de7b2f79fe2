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

#include "tilscore/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"

namespace tilscore {

using nlohmann::json;

void SyntheticSlideSpec::validate() const {
  if (slide_id.empty()) Fail(ErrorKind::kArgument, "synthetic: empty slide_id");
  if (width < 64 || height < 64) {
    Fail(ErrorKind::kArgument, "synthetic: slide must be at least 64x64");
  }
  if (!(mpp > 0.0)) Fail(ErrorKind::kArgument, "synthetic: mpp must be > 0");
  if (max_levels < 1 || level_step < 2) {
    Fail(ErrorKind::kArgument, "synthetic: bad pyramid parameters");
  }
  if (!(noise >= 0.0)) Fail(ErrorKind::kArgument, "synthetic: noise < 0");
  for (const TruthRegion& r : regions) {
    if (r.w < 1 || r.h < 1) {
      Fail(ErrorKind::kArgument, "synthetic: empty region");
    }
    if (!(r.density_per_mm2 >= 0.0) || !std::isfinite(r.density_per_mm2)) {
      Fail(ErrorKind::kArgument, "synthetic: density must be >= 0");
    }
    if (r.cls == TissueClass::kBackground && r.density_per_mm2 != 0.0) {
      Fail(ErrorKind::kArgument, "synthetic: background density must be 0");
    }
    if (!(r.til_share > 0.0 && r.til_share <= 1.0)) {
      Fail(ErrorKind::kArgument, "synthetic: til_share must be in (0, 1]");
    }
  }
}

const TruthRegion* GroundTruthMap::region_at(double x, double y) const {
  for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
    if (it->contains(x, y)) return &*it;
  }
  return nullptr;
}

TissueClass GroundTruthMap::class_at(double x, double y) const {
  const TruthRegion* r = region_at(x, y);
  return r ? r->cls : TissueClass::kBackground;
}

double GroundTruthMap::density_at(double x, double y) const {
  const TruthRegion* r = region_at(x, y);
  return r ? r->density_per_mm2 : 0.0;
}

double GroundTruthMap::background_fraction() const {
  if (classes.empty()) return 0.0;
  const auto n = std::count(classes.begin(), classes.end(),
                            static_cast<std::uint8_t>(TissueClass::kBackground));
  return static_cast<double>(n) / static_cast<double>(classes.size());
}

Hed RenderConcentration(TissueClass cls, double density_per_mm2) {
  constexpr double kHPerDensity = 1.2e-5;
  switch (cls) {
    case TissueClass::kBackground: return {0.002, 0.002, 0.0};
    case TissueClass::kNecrosis: return {0.030, 0.16, 0.06};
    case TissueClass::kStroma:
      return {0.022 + kHPerDensity * density_per_mm2, 0.22, 0.0};
    case TissueClass::kNormalLung: return {0.026, 0.05, 0.0};
    case TissueClass::kTumor:
      return {0.045 + kHPerDensity * density_per_mm2, 0.10, 0.0};
  }
  return {};
}

namespace {

/// Region index per pixel of one level (-1 = background); a level pixel
/// belongs to a region when its center, mapped to level 0, lies inside.
std::vector<int> PaintLevel(const std::vector<TruthRegion>& regions, int lw,
                            int lh, double ds) {
  std::vector<int> index(static_cast<std::size_t>(lw) * lh, -1);
  auto first_center_at_or_after = [ds](double edge, int limit) {
    const int v = static_cast<int>(std::ceil(edge / ds - 0.5));
    return std::clamp(v, 0, limit);
  };
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const TruthRegion& r = regions[i];
    const int x0 = first_center_at_or_after(r.x, lw);
    const int x1 = first_center_at_or_after(r.x + r.w, lw);
    const int y0 = first_center_at_or_after(r.y, lh);
    const int y1 = first_center_at_or_after(r.y + r.h, lh);
    for (int y = y0; y < y1; ++y) {
      std::fill_n(index.begin() + static_cast<std::ptrdiff_t>(y) * lw + x0,
                  std::max(0, x1 - x0), static_cast<int>(i));
    }
  }
  return index;
}

json RegionToJson(const TruthRegion& r) {
  return {{"x", r.x},
          {"y", r.y},
          {"w", r.w},
          {"h", r.h},
          {"class", std::string(Name(r.cls))},
          {"density_per_mm2", r.density_per_mm2},
          {"til_share", r.til_share}};
}

TruthRegion RegionFromJson(const json& j) {
  TruthRegion r;
  r.x = j.at("x").get<int>();
  r.y = j.at("y").get<int>();
  r.w = j.at("w").get<int>();
  r.h = j.at("h").get<int>();
  const auto cls = ParseTissueClass(j.at("class").get<std::string>());
  if (!cls) Fail(ErrorKind::kFormat, "unknown region class");
  r.cls = *cls;
  r.density_per_mm2 = j.at("density_per_mm2").get<double>();
  r.til_share = j.value("til_share", 1.0);
  return r;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

GroundTruthMap generate_synthetic_slide(const SyntheticSlideSpec& spec,
                                        std::uint64_t seed,
                                        const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  SlideMeta meta;
  meta.slide_id = spec.slide_id;
  meta.mpp = spec.mpp;
  double ds = 1.0;
  for (int k = 0; k < spec.max_levels; ++k) {
    const int lw = std::max(1, static_cast<int>(spec.width / ds));
    const int lh = std::max(1, static_cast<int>(spec.height / ds));
    if (k > 0 && std::max(lw, lh) < 16) break;
    meta.levels.push_back({lw, lh, ds});
    ds *= spec.level_step;
  }

  GroundTruthMap truth;
  truth.slide_id = spec.slide_id;
  truth.seed = seed;
  truth.width = spec.width;
  truth.height = spec.height;
  truth.regions = spec.regions;

  std::vector<Hed> base(spec.regions.size());
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    base[i] = RenderConcentration(spec.regions[i].cls,
                                  spec.regions[i].density_per_mm2);
  }
  const Hed background = RenderConcentration(TissueClass::kBackground, 0.0);

  for (int k = 0; k < meta.level_count(); ++k) {
    const LevelInfo& info = meta.levels[k];
    const std::vector<int> index =
        PaintLevel(spec.regions, info.width, info.height, info.downsample);

    PixelBuffer img(info.width, info.height);
    std::vector<std::uint8_t> classes(index.size());
    for (int y = 0; y < info.height; ++y) {
      Pcg32 rng(DeriveSeed(seed, {static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(y)}));
      for (int x = 0; x < info.width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * info.width + x;
        const int r = index[p];
        Hed c = r < 0 ? background : base[r];
        c.h = std::max(0.0, c.h + (rng.uniform() - 0.5) * spec.noise);
        c.e = std::max(0.0, c.e + (rng.uniform() - 0.5) * spec.noise);
        img.set(x, y, HedToRgb(c));
        classes[p] = static_cast<std::uint8_t>(
            r < 0 ? TissueClass::kBackground : spec.regions[r].cls);
      }
    }
    WritePng(out_dir / ("level_" + std::to_string(k) + ".png"), img);
    WriteGrayPng(out_dir / ("truth_" + std::to_string(k) + ".png"),
                 info.width, info.height, classes);
    if (k == 0) {
      truth.level = 0;
      truth.level_width = info.width;
      truth.level_height = info.height;
      truth.classes = std::move(classes);
    }
  }

  WriteText(out_dir / "meta.json", MetaToJson(meta));
  json regions = json::array();
  for (const TruthRegion& r : spec.regions) regions.push_back(RegionToJson(r));
  const json tj = {{"slide_id", spec.slide_id},
                   {"seed", seed},
                   {"width", spec.width},
                   {"height", spec.height},
                   {"regions", regions}};
  WriteText(out_dir / "truth.json", tj.dump(2) + "\n");
  return truth;
}

GroundTruthMap load_truth(const std::filesystem::path& bundle_dir, int level) {
  std::ifstream in(bundle_dir / "truth.json");
  if (!in) {
    Fail(ErrorKind::kFormat, "missing " + (bundle_dir / "truth.json").string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  GroundTruthMap truth;
  try {
    const json j = json::parse(ss.str());
    truth.slide_id = j.at("slide_id").get<std::string>();
    truth.seed = j.at("seed").get<std::uint64_t>();
    truth.width = j.at("width").get<int>();
    truth.height = j.at("height").get<int>();
    for (const json& r : j.at("regions")) {
      truth.regions.push_back(RegionFromJson(r));
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("truth.json: ") + e.what());
  }
  truth.level = level;
  const auto png = bundle_dir / ("truth_" + std::to_string(level) + ".png");
  if (std::filesystem::exists(png)) {
    truth.classes = ReadGrayPng(png, &truth.level_width, &truth.level_height);
  }
  return truth;
}

std::string SpecToJson(const SyntheticSlideSpec& spec) {
  json regions = json::array();
  for (const TruthRegion& r : spec.regions) regions.push_back(RegionToJson(r));
  const json j = {{"slide_id", spec.slide_id},   {"width", spec.width},
                  {"height", spec.height},       {"mpp", spec.mpp},
                  {"max_levels", spec.max_levels}, {"level_step", spec.level_step},
                  {"noise", spec.noise},         {"regions", regions}};
  return j.dump(2) + "\n";
}

SyntheticSlideSpec SpecFromJson(const std::string& text) {
  SyntheticSlideSpec spec;
  try {
    const json j = json::parse(text);
    spec.slide_id = j.at("slide_id").get<std::string>();
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.mpp = j.value("mpp", spec.mpp);
    spec.max_levels = j.value("max_levels", spec.max_levels);
    spec.level_step = j.value("level_step", spec.level_step);
    spec.noise = j.value("noise", spec.noise);
    for (const json& r : j.at("regions")) {
      spec.regions.push_back(RegionFromJson(r));
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kArgument, std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace tilscore
