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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tilscore/config.hpp"
#include "tilscore/inference.hpp"
#include "tilscore/quantify.hpp"
#include "tilscore/sampler.hpp"
#include "tilscore/slide_io.hpp"

namespace tilscore {

inline constexpr const char* kVersion = "0.3.0";

struct SlideCounts {
  std::int64_t total = 0;
  std::int64_t eligible = 0;
  std::int64_t sampled = 0;
  std::int64_t relevant = 0;
  std::int64_t quantified = 0;

  friend bool operator==(const SlideCounts&, const SlideCounts&) = default;
};

/// Counts of one slide's candidate table at whatever stage it has reached.
SlideCounts CountCandidates(const std::vector<Candidate>& candidates);

/// Record of a run, merged across chained subcommands.
struct RunManifest {
  std::string version = kVersion;
  std::string config_json;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, double> durations_s;  // stage -> seconds
  std::map<std::string, SlideCounts> slides;
  std::map<std::string, std::string> artifacts;  // name -> path under out dir
  std::vector<std::string> failures;
  std::string status = "ok";
};

std::string ManifestToJson(const RunManifest& m);
RunManifest ManifestFromJson(const std::string& text);

/// Layout of the output directory shared by all stages.
struct RunPaths {
  std::filesystem::path out;

  std::filesystem::path slide_dir(const std::string& slide_id) const {
    return out / slide_id;
  }
  std::filesystem::path sampled_csv(const std::string& s) const {
    return slide_dir(s) / "candidates.csv";
  }
  std::filesystem::path classified_csv(const std::string& s) const {
    return slide_dir(s) / "classified.csv";
  }
  std::filesystem::path quantified_csv(const std::string& s) const {
    return slide_dir(s) / "quantified.csv";
  }
  std::filesystem::path heatmap_png(const std::string& s) const {
    return slide_dir(s) / "heatmap.png";
  }
  std::filesystem::path overlay_png(const std::string& s) const {
    return slide_dir(s) / "classes.png";
  }
  std::filesystem::path legend_json(const std::string& s) const {
    return slide_dir(s) / "legend.json";
  }
  std::filesystem::path patient_scores_csv() const {
    return out / "patient_scores.csv";
  }
  std::filesystem::path manifest_json() const { return out / "manifest.json"; }
};

/// Tissue detection, grid enumeration, hematoxylin filtering and the seeded
/// subsample for one slide.
std::vector<Candidate> sample_slide(const SlideHandle& slide,
                                    const PipelineConfig& cfg);

/// Mock backends load truth.json from every bundle; the others ignore the
/// bundles.
std::unique_ptr<Backend> MakeBackend(
    const PipelineConfig& cfg, const std::vector<std::filesystem::path>& bundles);

/// Inputs shared by every stage.
struct StageContext {
  PipelineConfig cfg;
  std::vector<std::filesystem::path> bundles;
  RunPaths paths;
  PatientMap patients;
};

/// Each stage reads the previous stage's CSVs from the output directory,
/// writes its own, and records counts, artifacts and wall time in `m`.
void stage_sample(const StageContext& ctx, RunManifest& m);
void stage_classify(const StageContext& ctx, Backend& backend, RunManifest& m);
void stage_quantify(const StageContext& ctx, Backend& backend, RunManifest& m);
void stage_score(const StageContext& ctx, RunManifest& m);
void stage_heatmap(const StageContext& ctx, RunManifest& m);

/// Manifest from a previous subcommand in the same directory, or a fresh
/// one. Config, hash and seed always come from `cfg`.
RunManifest OpenManifest(const StageContext& ctx);
void WriteManifest(const StageContext& ctx, const RunManifest& m);

/// sample -> classify -> quantify -> score -> heatmap, chained through the
/// persisted CSVs so the result equals running the subcommands one by one.
/// The caller owns `m` so that a failed stage can still be recorded.
void run_pipeline(const StageContext& ctx, Backend& backend, RunManifest& m);

}  // namespace tilscore
