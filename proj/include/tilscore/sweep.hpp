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
#include <vector>

#include "tilscore/inference.hpp"
#include "tilscore/sampler.hpp"
#include "tilscore/slide_io.hpp"
#include "tilscore/survival.hpp"

namespace tilscore {

/// One slide of a sweep cohort with its eligibility already computed.
struct SweepSlide {
  std::string slide_id;
  std::string patient_id;
  SlideHandle handle;
  std::vector<Candidate> candidates;  // output of filter_by_hematoxylin
};

struct SweepRow {
  double ratio = 0.0;
  double c_index_mean = 0.0;
  double c_index_sd = 0.0;  // population
  double avg_patch_count = 0.0;  // sampled patches per slide
  int iterations = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> excluded_slides;  // no eligible patches
};

/// Seed of iteration `iteration` at `ratio`.
std::uint64_t IterationSeed(std::uint64_t base_seed, double ratio,
                            int iteration);

/// Monte-Carlo sampling-ratio sweep. Each iteration redraws only the
/// subsample; classification and quantification of a patch are computed once
/// and reused. A patient's score is the mean over its slides of the mean
/// relevant-patch density; patients without one in an iteration are left out
/// of that iteration's c-index. Risk is the negated score.
SweepResult ratio_sweep(const std::vector<SweepSlide>& slides,
                        const std::vector<CohortEntry>& survival,
                        const std::vector<double>& ratios, int iterations,
                        std::uint64_t base_seed, Backend& backend,
                        int workers = 1);

/// CSV "ratio,c_index_mean,c_index_sd,avg_patches".
std::string SweepToCsv(const std::vector<SweepRow>& rows);

}  // namespace tilscore
