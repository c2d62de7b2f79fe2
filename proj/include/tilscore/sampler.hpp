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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilscore/config.hpp"
#include "tilscore/slide_io.hpp"
#include "tilscore/taxonomy.hpp"
#include "tilscore/tissue_mask.hpp"

namespace tilscore {

/// One grid patch and everything the pipeline learns about it.
struct Candidate {
  std::string slide_id;
  int x = 0;  // level-0 top-left
  int y = 0;
  int patch_size = 0;
  std::optional<double> h_mean;
  bool eligible = false;
  bool sampled = false;
  std::optional<PatchClass> class_label;
  std::optional<std::array<double, kNumPatchClasses>> class_probs;
  std::optional<int> til_count;
  std::optional<double> density_mm2;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Identifier used on the wire and in error messages: "<slide>@<x>,<y>".
std::string PatchId(const Candidate& c);

/// Non-overlapping grid with stride patch_size anchored at the top-left of
/// the tissue bounding box. A cell is kept when at least `coverage_min` of
/// its 16x16 sample points fall inside the polygon and the cell lies fully
/// inside the slide. Row-major order.
std::vector<Candidate> enumerate_candidates(const SlideMeta& meta,
                                            const Polygon& tissue,
                                            const PipelineConfig& cfg);

/// Fraction of the cell's sample points inside `tissue`.
double CellCoverage(const Polygon& tissue, int x, int y, int size);

/// Reads every candidate at level 0 and flags eligibility by hematoxylin
/// mean. Runs on cfg.workers threads; output order equals input order.
std::vector<Candidate> filter_by_hematoxylin(const SlideHandle& slide,
                                             std::vector<Candidate> candidates,
                                             const PipelineConfig& cfg);

/// max(1, floor(ratio * n_eligible)), or 0 without eligible candidates. A
/// 1e-9 slack absorbs products such as 0.29 * 100 = 28.999999999999996.
std::size_t SampleCount(std::size_t n_eligible, double ratio);

/// Marks SampleCount(...) eligible candidates as sampled using a partial
/// Fisher-Yates shuffle of the eligible indices driven by Pcg32(seed). For a
/// fixed seed the sampled set at a smaller ratio is a subset of the set at a
/// larger one.
std::vector<Candidate> subsample(std::vector<Candidate> candidates,
                                 double ratio, std::uint64_t seed);

/// Per-slide sampling seed derived from the run seed.
std::uint64_t SlideSeed(std::uint64_t run_seed, const std::string& slide_id);

inline constexpr const char* kCandidateCsvHeader =
    "slide_id,x,y,patch_size,h_mean,eligible,sampled,class_label,p_necrosis,"
    "p_stroma,p_normal,p_tumor,til_count,density_mm2";

/// Reals are written with 6 significant digits, absent values as empty
/// fields, booleans as 0/1.
std::string CandidatesToCsv(const std::vector<Candidate>& candidates);
std::vector<Candidate> CandidatesFromCsv(const std::string& text);

void persist_candidates(const std::vector<Candidate>& candidates,
                        const std::filesystem::path& path);
std::vector<Candidate> load_candidates(const std::filesystem::path& path);

/// Formats with 6 significant digits ("%.6g").
std::string FormatReal(double v);

}  // namespace tilscore
