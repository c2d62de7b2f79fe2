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

#include "tilscore/cohort.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"

namespace tilscore {

SyntheticSlideSpec CohortSlideSpec(const SyntheticCohortOptions& opt,
                                   const std::string& slide_id,
                                   double density, std::uint64_t seed) {
  SyntheticSlideSpec spec;
  spec.slide_id = slide_id;
  spec.width = opt.width;
  spec.height = opt.height;
  spec.mpp = opt.mpp;
  spec.max_levels = opt.max_levels;

  const double side = std::sqrt(opt.tissue_fraction);
  const int box_w = static_cast<int>(opt.width * side);
  const int box_h = static_cast<int>(opt.height * side);
  const int x0 = (opt.width - box_w) / 2;
  const int y0 = (opt.height - box_h) / 2;
  constexpr int kBlocks = 8;

  Pcg32 rng(DeriveSeed(seed, {HashString(slide_id), 0x6c61796f7574ULL}));
  for (int by = 0; by < kBlocks; ++by) {
    for (int bx = 0; bx < kBlocks; ++bx) {
      const int xa = x0 + box_w * bx / kBlocks;
      const int xb = x0 + box_w * (bx + 1) / kBlocks;
      const int ya = y0 + box_h * by / kBlocks;
      const int yb = y0 + box_h * (by + 1) / kBlocks;
      TruthRegion r;
      r.x = xa;
      r.y = ya;
      r.w = xb - xa;
      r.h = yb - ya;
      const double kind = rng.uniform();
      const double jitter = 1.0 + opt.block_jitter * (2.0 * rng.uniform() - 1.0);
      if (rng.uniform() < opt.discard_fraction) {
        r.cls = kind < 0.5 ? TissueClass::kNecrosis : TissueClass::kNormalLung;
        r.density_per_mm2 = 0.1 * density * jitter;
      } else if (kind < 0.5) {
        r.cls = TissueClass::kTumor;
        r.density_per_mm2 = density * opt.tumor_factor * jitter;
        r.til_share = opt.tumor_til_share;
      } else {
        r.cls = TissueClass::kStroma;
        r.density_per_mm2 = density * opt.stroma_factor * jitter;
        r.til_share = opt.stroma_til_share;
      }
      spec.regions.push_back(r);
    }
  }
  return spec;
}

SyntheticCohort generate_synthetic_cohort(const SyntheticCohortOptions& opt,
                                          std::uint64_t seed,
                                          const std::filesystem::path& out_dir) {
  if (opt.patients < 2) Fail(ErrorKind::kArgument, "cohort needs >= 2 patients");
  if (!(opt.density_min > 0.0 && opt.density_max >= opt.density_min)) {
    Fail(ErrorKind::kArgument, "cohort density range is invalid");
  }
  SyntheticCohort cohort;
  Pcg32 rng(DeriveSeed(seed, {0x636f686f7274ULL}));
  const double log_lo = std::log(opt.density_min);
  const double log_hi = std::log(opt.density_max);
  for (int p = 0; p < opt.patients; ++p) {
    char id[32];
    std::snprintf(id, sizeof(id), "P%03d", p);
    const double density = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
    const double hazard =
        opt.base_hazard *
        std::pow(opt.reference_density / density, opt.hazard_exponent);
    const double event_time = -std::log(1.0 - rng.uniform()) / hazard;
    const double censor_time = opt.censor_max_months * (1.0 - rng.uniform());
    CohortEntry e;
    e.patient_id = id;
    e.event = event_time <= censor_time;
    e.time_months = e.event ? event_time : censor_time;

    const auto dir = out_dir / id;
    generate_synthetic_slide(CohortSlideSpec(opt, id, density, seed), seed, dir);
    cohort.bundles.push_back(dir);
    cohort.slide_ids.push_back(id);
    cohort.planted_density.push_back(density);
    cohort.survival.push_back(e);
  }
  std::ofstream(out_dir / "cohort.csv", std::ios::binary)
      << CohortToCsv(cohort.survival);
  return cohort;
}

}  // namespace tilscore
