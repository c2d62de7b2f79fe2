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

#include "tilscore/survival.hpp"
#include "tilscore/synthetic.hpp"

namespace tilscore {

/// A cohort of one-slide patients whose survival depends on planted TIL
/// density: hazard = base_hazard * (reference_density / D)^hazard_exponent,
/// so denser infiltrates live longer.
struct SyntheticCohortOptions {
  int patients = 30;
  int width = 2560;
  int height = 2560;
  double mpp = 3.5;
  int max_levels = 3;
  double density_min = 200.0;  // patient densities are log-uniform
  double density_max = 3000.0;
  /// Tissue is an 8x8 grid of blocks inside a centred box covering
  /// `tissue_fraction` of the slide; each block is tumor or stroma.
  double tissue_fraction = 0.64;
  double tumor_factor = 1.3;  // block density multipliers around D
  double stroma_factor = 0.7;
  double block_jitter = 0.2;  // extra uniform factor in [1-j, 1+j]
  double discard_fraction = 0.0;  // share of blocks turned necrosis/normal
  double tumor_til_share = 0.25;
  double stroma_til_share = 0.5;
  double base_hazard = 0.02;  // per month at the reference density
  double reference_density = 1000.0;
  double hazard_exponent = 1.0;
  double censor_max_months = 120.0;  // censoring ~ U(0, max)
};

struct SyntheticCohort {
  std::vector<std::filesystem::path> bundles;
  std::vector<std::string> slide_ids;  // also the patient ids
  std::vector<double> planted_density;
  std::vector<CohortEntry> survival;  // scores left empty
};

/// Slide layout for one patient at planted density `density`; a pure function
/// of its arguments.
SyntheticSlideSpec CohortSlideSpec(const SyntheticCohortOptions& opt,
                                   const std::string& slide_id,
                                   double density, std::uint64_t seed);

/// Writes <out>/<slide_id>/ bundles and <out>/cohort.csv.
SyntheticCohort generate_synthetic_cohort(const SyntheticCohortOptions& opt,
                                          std::uint64_t seed,
                                          const std::filesystem::path& out_dir);

}  // namespace tilscore
