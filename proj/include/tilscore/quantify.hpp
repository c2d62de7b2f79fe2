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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tilscore/inference.hpp"
#include "tilscore/sampler.hpp"
#include "tilscore/slide_io.hpp"

namespace tilscore {

/// Number of inflammatory nuclei.
int til_count(const std::vector<CellInstance>& cells);

/// Cells per mm^2 for a square patch of `patch_size` px at `mpp` um/px.
double patch_density(double count, double patch_size, double mpp);

/// Mean of the patch densities of one slide; kNoQuantifiedPatches if empty.
double patient_score(std::span<const double> densities);

/// Mean over slides of the per-slide means. Every slide must contribute at
/// least one density.
double multi_slide_score(const std::vector<std::vector<double>>& per_slide);

double dice_score(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct ClassOverlap {
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;
};

/// Sum of intersections over sum of unions across classes.
double iou_score(const std::vector<ClassOverlap>& per_class);

double pq_score(const std::vector<double>& matched_ious, std::int64_t fp,
                std::int64_t fn);

struct SegmentationEval {
  // Foreground pixel counts; dice and iou come from these.
  std::int64_t pixel_tp = 0;
  std::int64_t pixel_fp = 0;
  std::int64_t pixel_fn = 0;
  // Instance counts after unique matching at IoU > 0.5; pq comes from these.
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double dice = 0.0;
  double iou = 0.0;
  double pq = 0.0;
  std::vector<double> matched_ious;
};

/// Compares two instance label maps of the same size (0 = background, any
/// other value = instance id).
SegmentationEval evaluate_segmentation(std::span<const std::int32_t> predicted,
                                       std::span<const std::int32_t> truth,
                                       int width, int height);

std::string SegmentationToJson(const SegmentationEval& eval);

struct QuantifyOutcome {
  std::vector<Candidate> candidates;
  std::vector<std::string> failures;  // "candidate <i>: <reason>"
};

/// Counts TILs on every sampled tumor/stroma row and converts to density
/// with the slide's mpp. Other rows pass through. Without
/// `tolerate_failures` any failed patch raises kPartialFailure listing all
/// failures; with it, failed rows are left without a count.
QuantifyOutcome quantify_candidates(Backend& backend, const SlideHandle& slide,
                                    std::vector<Candidate> candidates,
                                    int workers = 1,
                                    bool tolerate_failures = false);

struct SlideScore {
  std::string slide_id;
  std::vector<double> densities;
  double mean = 0.0;
};

struct PatientScore {
  std::string patient_id;
  std::vector<SlideScore> per_slide;
  double d_patient = 0.0;
};

/// slide_id -> patient_id. Slides missing from the map are their own patient.
using PatientMap = std::map<std::string, std::string>;

/// CSV with header "slide_id,patient_id".
PatientMap LoadPatientMap(const std::string& path);

/// Groups quantified candidates by patient and slide, sorted by id. A slide
/// that appears in `candidates` without any quantified row raises
/// kNoQuantifiedPatches.
std::vector<PatientScore> score_patients(const std::vector<Candidate>& candidates,
                                         const PatientMap& patients = {});

/// One row per (patient, slide): patient_id,slide_id,n_patches,d_patient.
std::string PatientScoresToCsv(const std::vector<PatientScore>& scores);

/// patient_id -> d_patient from a patient-scores CSV.
std::map<std::string, double> PatientScoresFromCsv(const std::string& text);

}  // namespace tilscore
