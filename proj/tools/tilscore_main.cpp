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

// Command-line driver: one subcommand per pipeline stage plus `run`, the
// survival and sweep analyses, and a synthetic cohort generator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tilscore/cohort.hpp"
#include "tilscore/error.hpp"
#include "tilscore/pipeline.hpp"
#include "tilscore/quantify.hpp"
#include "tilscore/survival.hpp"
#include "tilscore/sweep.hpp"

namespace fs = std::filesystem;
using namespace tilscore;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<std::string> backend;
  std::string out = "tilscore_out";
  std::optional<int> workers;
  bool tolerate_failures = false;
  std::vector<std::string> bundles;
  std::string patient_map;
};

void AddCommon(CLI::App* cmd, CommonOptions& o, bool with_bundles = true) {
  cmd->add_option("--config", o.config, "Pipeline config JSON");
  cmd->add_option("--seed", o.seed, "Run seed (u64)");
  cmd->add_option("--ratio", o.ratio, "Sampling ratio in (0, 1]");
  cmd->add_option("--backend", o.backend,
                  "mock | subprocess:CMD | http:URL");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--workers", o.workers, "Worker threads");
  cmd->add_flag("--tolerate-failures", o.tolerate_failures,
                "Keep going when individual patches fail");
  if (with_bundles) cmd->add_option("slides", o.bundles, "Slide bundle dirs");
}

PipelineConfig ResolveConfig(const CommonOptions& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : LoadConfig(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.ratio) cfg.sampling_ratio = *o.ratio;
  if (o.backend) cfg.backend = BackendDescriptor::Parse(*o.backend);
  if (o.workers) cfg.workers = *o.workers;
  if (o.tolerate_failures) cfg.tolerate_failures = true;
  cfg.validate();
  return cfg;
}

StageContext MakeContext(const CommonOptions& o) {
  StageContext ctx;
  ctx.cfg = ResolveConfig(o);
  for (const auto& b : o.bundles) ctx.bundles.emplace_back(b);
  ctx.paths.out = o.out;
  if (!o.patient_map.empty()) ctx.patients = LoadPatientMap(o.patient_map);
  fs::create_directories(ctx.paths.out);
  return ctx;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
}

/// Runs one manifest-tracked command; failures are written to the manifest
/// before the exit code is returned.
template <typename Fn>
int Tracked(const CommonOptions& o, Fn fn) {
  StageContext ctx = MakeContext(o);
  RunManifest m = OpenManifest(ctx);
  m.status = "ok";
  m.failures.clear();
  try {
    fn(ctx, m);
  } catch (const Error& e) {
    m.status = "failed";
    m.failures.push_back(std::string(ToString(e.kind())) + ": " + e.what());
    WriteManifest(ctx, m);
    throw;
  }
  WriteManifest(ctx, m);
  return 0;
}

nlohmann::ordered_json KmJson(const KMCurve& km) {
  return {{"times", km.times}, {"survival", km.survival}};
}

int RunSurvival(const CommonOptions& o, const std::string& cohort_path,
                const std::string& scores_path) {
  const fs::path out = o.out;
  fs::create_directories(out);
  auto cohort = CohortFromCsv(ReadFile(cohort_path));
  const fs::path scores_file =
      scores_path.empty() ? out / "patient_scores.csv" : fs::path(scores_path);
  const bool need_scores = std::any_of(cohort.begin(), cohort.end(),
                                       [](const auto& e) { return !e.score; });
  if (need_scores) {
    const auto scores = PatientScoresFromCsv(ReadFile(scores_file));
    for (auto& e : cohort) {
      if (e.score) continue;
      const auto it = scores.find(e.patient_id);
      if (it == scores.end()) {
        spdlog::warn("survival: no score for patient {}; left out", e.patient_id);
        continue;
      }
      e.score = it->second;
    }
    std::erase_if(cohort, [](const auto& e) { return !e.score; });
  }
  auto records = RecordsFromScores(cohort);
  std::vector<double> scores;
  for (const auto& e : cohort) scores.push_back(*e.score);

  nlohmann::ordered_json report;
  report["patients"] = records.size();
  report["events"] = std::count_if(records.begin(), records.end(),
                                   [](const auto& r) { return r.event; });
  report["c_index"] = concordance_index(records);
  WriteFile(out / "km_all.csv", KmToCsv(kaplan_meier(records)));

  const QuartileSplit q = quantize_quartiles(scores);
  report["quartile_cutoffs"] = {q.c25, q.c50, q.c75};
  std::vector<std::vector<SurvivalRecord>> groups(4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].group = "Q" + std::to_string(q.groups[i]);
    groups[q.groups[i] - 1].push_back(records[i]);
  }
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  nlohmann::ordered_json km = nlohmann::ordered_json::object();
  for (const auto& g : groups) {
    const std::string name = *g.front().group;
    const KMCurve curve = kaplan_meier(g);
    WriteFile(out / ("km_" + name + ".csv"), KmToCsv(curve));
    km[name] = KmJson(curve);
  }
  report["km"] = km;
  try {
    const TestResult lr = log_rank_test(groups);
    report["log_rank"] = {{"statistic", lr.statistic}, {"df", lr.df}, {"p", lr.p}};
  } catch (const Error& e) {
    report["log_rank"] = {{"error", e.what()}};
  }
  try {
    const CoxFit fit = cox_ph_fit(records, "Q1");
    nlohmann::ordered_json terms = nlohmann::ordered_json::array();
    for (const CoxTerm& t : fit.terms) {
      terms.push_back({{"level", t.level},
                       {"beta", t.beta},
                       {"hazard_ratio", t.hazard_ratio},
                       {"ci95", {t.ci_low, t.ci_high}},
                       {"p", t.wald_p}});
    }
    report["cox"] = {{"reference", fit.reference},
                     {"terms", terms},
                     {"log_likelihood", fit.log_likelihood},
                     {"iterations", fit.iterations},
                     {"converged", fit.converged}};
  } catch (const Error& e) {
    report["cox"] = {{"error", e.what()}};
  }
  WriteFile(out / "survival.json", report.dump(2) + "\n");
  std::printf("c-index %.4f over %zu patients\n",
              report["c_index"].get<double>(), records.size());
  return 0;
}

int RunSweep(const CommonOptions& o, const std::string& cohort_path,
             const std::vector<double>& ratios, int iterations) {
  StageContext ctx = MakeContext(o);
  auto backend = MakeBackend(ctx.cfg, ctx.bundles);
  std::vector<SweepSlide> slides;
  for (const fs::path& dir : ctx.bundles) {
    SweepSlide s;
    s.handle = open_bundle(dir);
    s.slide_id = s.handle.meta().slide_id;
    const auto it = ctx.patients.find(s.slide_id);
    s.patient_id = it == ctx.patients.end() ? s.slide_id : it->second;
    s.candidates = sample_slide(s.handle, ctx.cfg);
    slides.push_back(std::move(s));
  }
  const auto cohort = CohortFromCsv(ReadFile(cohort_path));
  const SweepResult r = ratio_sweep(slides, cohort, ratios, iterations,
                                    ctx.cfg.seed, *backend, ctx.cfg.workers);
  const std::string csv = SweepToCsv(r.rows);
  WriteFile(ctx.paths.out / "sweep.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int RunSynth(const std::string& out, std::uint64_t seed,
             const SyntheticCohortOptions& opt) {
  const SyntheticCohort c = generate_synthetic_cohort(opt, seed, out);
  std::printf("wrote %zu slides and cohort.csv to %s\n", c.bundles.size(),
              out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_pattern("%^%l%$: %v");
  CLI::App app{"TIL density scoring for whole-slide images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions o;
  std::string cohort;
  std::string scores;
  std::vector<double> ratios = {0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  int iterations = 100;

  auto* sample = app.add_subcommand("sample", "Detect tissue, filter and subsample patches");
  auto* classify = app.add_subcommand("classify", "Classify sampled patches");
  auto* quantify = app.add_subcommand("quantify", "Count TILs on tumor/stroma patches");
  auto* score = app.add_subcommand("score", "Aggregate patch densities per patient");
  auto* heatmap = app.add_subcommand("heatmap", "Render density and class overlays");
  auto* run = app.add_subcommand("run", "All stages: sample to heatmap");
  auto* survival = app.add_subcommand("survival", "c-index, Kaplan-Meier, log-rank and Cox");
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sampling-ratio sweep");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");

  for (auto* cmd : {sample, classify, quantify, score, heatmap, run, sweep}) {
    AddCommon(cmd, o);
  }
  AddCommon(survival, o, false);
  for (auto* cmd : {score, run, sweep}) {
    cmd->add_option("--patient-map", o.patient_map, "CSV slide_id,patient_id");
  }
  survival->add_option("--cohort", cohort, "CSV patient_id,time_months,event,score")
      ->required();
  survival->add_option("--scores", scores,
                       "Patient scores CSV (default <out>/patient_scores.csv)");
  sweep->add_option("--cohort", cohort, "Survival CSV")->required();
  sweep->add_option("--ratios", ratios, "Sampling ratios")->delimiter(',');
  sweep->add_option("--iterations", iterations, "Iterations per ratio");

  SyntheticCohortOptions synth_opt;
  std::string synth_out = "synthetic_cohort";
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--patients", synth_opt.patients, "Number of patients");
  synth->add_option("--width", synth_opt.width, "Slide width (px)");
  synth->add_option("--height", synth_opt.height, "Slide height (px)");
  synth->add_option("--mpp", synth_opt.mpp, "Microns per pixel");
  synth->add_option("--discard", synth_opt.discard_fraction,
                    "Share of tissue blocks that are necrosis/normal lung");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sample->parsed()) {
      return Tracked(o, [](auto& ctx, auto& m) { stage_sample(ctx, m); });
    }
    if (classify->parsed() || quantify->parsed()) {
      const bool is_classify = classify->parsed();
      return Tracked(o, [&](auto& ctx, auto& m) {
        auto backend = MakeBackend(ctx.cfg, ctx.bundles);
        if (is_classify) {
          stage_classify(ctx, *backend, m);
        } else {
          stage_quantify(ctx, *backend, m);
        }
      });
    }
    if (score->parsed()) {
      return Tracked(o, [](auto& ctx, auto& m) { stage_score(ctx, m); });
    }
    if (heatmap->parsed()) {
      return Tracked(o, [](auto& ctx, auto& m) { stage_heatmap(ctx, m); });
    }
    if (run->parsed()) {
      return Tracked(o, [](auto& ctx, auto& m) {
        auto backend = MakeBackend(ctx.cfg, ctx.bundles);
        run_pipeline(ctx, *backend, m);
      });
    }
    if (survival->parsed()) return RunSurvival(o, cohort, scores);
    if (sweep->parsed()) return RunSweep(o, cohort, ratios, iterations);
    if (synth->parsed()) return RunSynth(synth_out, synth_seed, synth_opt);
  } catch (const Error& e) {
    spdlog::error("{}: {}", ToString(e.kind()), e.what());
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
  return 0;
}
