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

#include "tilscore/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "tilscore/classify.hpp"
#include "tilscore/error.hpp"
#include "tilscore/tissue_mask.hpp"
#include "tilscore/viz.hpp"

namespace tilscore {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

SlideCounts CountCandidates(const std::vector<Candidate>& candidates) {
  SlideCounts n;
  for (const Candidate& c : candidates) {
    ++n.total;
    n.eligible += c.eligible;
    n.sampled += c.sampled;
    n.relevant += c.sampled && c.class_label && IsRelevant(*c.class_label);
    n.quantified += c.til_count.has_value();
  }
  return n;
}

std::string ManifestToJson(const RunManifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["status"] = m.status;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  j["config"] = m.config_json.empty() ? ordered_json::object()
                                      : ordered_json::parse(m.config_json);
  j["durations_s"] = m.durations_s;
  ordered_json slides = ordered_json::object();
  for (const auto& [id, n] : m.slides) {
    slides[id] = {{"total", n.total},
                  {"eligible", n.eligible},
                  {"sampled", n.sampled},
                  {"relevant", n.relevant},
                  {"quantified", n.quantified}};
  }
  j["slides"] = slides;
  j["artifacts"] = m.artifacts;
  j["failures"] = m.failures;
  return j.dump(2) + "\n";
}

RunManifest ManifestFromJson(const std::string& text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_json = j.at("config").dump();
    m.durations_s = j.at("durations_s").get<std::map<std::string, double>>();
    for (const auto& [id, n] : j.at("slides").items()) {
      m.slides[id] = {n.at("total").get<std::int64_t>(),
                      n.at("eligible").get<std::int64_t>(),
                      n.at("sampled").get<std::int64_t>(),
                      n.at("relevant").get<std::int64_t>(),
                      n.at("quantified").get<std::int64_t>()};
    }
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.failures = j.at("failures").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, std::string("manifest: ") + e.what());
  }
  return m;
}

std::vector<Candidate> sample_slide(const SlideHandle& slide,
                                    const PipelineConfig& cfg) {
  const Thumbnail thumb = make_thumbnail(slide, cfg.thumbnail_max_dim);
  const Polygon tissue = project_to_level0(
      extract_largest_contour(binarize_thumbnail(thumb.image)),
      thumb.scale_factor, slide.meta().width(), slide.meta().height());
  auto candidates = enumerate_candidates(slide.meta(), tissue, cfg);
  candidates = filter_by_hematoxylin(slide, std::move(candidates), cfg);
  return subsample(std::move(candidates), cfg.sampling_ratio,
                   SlideSeed(cfg.seed, slide.meta().slide_id));
}

std::unique_ptr<Backend> MakeBackend(const PipelineConfig& cfg,
                                     const std::vector<fs::path>& bundles) {
  if (cfg.backend.kind != BackendDescriptor::Kind::kMock) {
    return MakeRemoteBackend(cfg.backend);
  }
  auto mock = std::make_unique<MockBackend>(cfg.seed);
  for (const fs::path& dir : bundles) {
    if (!fs::exists(dir / "truth.json")) {
      Fail(ErrorKind::kConfig,
           "mock backend needs " + (dir / "truth.json").string());
    }
    mock->add_slide(load_truth(dir));
  }
  return mock;
}

namespace {

class StageTimer {
 public:
  StageTimer(RunManifest& m, std::string stage)
      : m_(m), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start_;
    m_.durations_s[stage_] = dt.count();
  }

 private:
  RunManifest& m_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::string Relative(const StageContext& ctx, const fs::path& p) {
  return fs::relative(p, ctx.paths.out).generic_string();
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> SlideIds(const StageContext& ctx, const RunManifest& m) {
  std::vector<std::string> ids;
  for (const fs::path& dir : ctx.bundles) {
    ids.push_back(MetaFromJson(ReadText(dir / "meta.json")).slide_id);
  }
  if (ids.empty()) {
    for (const auto& [id, counts] : m.slides) ids.push_back(id);
  }
  if (ids.empty()) Fail(ErrorKind::kArgument, "no slides given");
  return ids;
}

/// Runs `fn(slide, candidates)` on every bundle's table from `in`, then
/// persists the result to `out` and refreshes the counts.
template <typename Fn>
void TransformTables(const StageContext& ctx, RunManifest& m,
                     fs::path (RunPaths::*in)(const std::string&) const,
                     fs::path (RunPaths::*out)(const std::string&) const,
                     const std::string& artifact, Fn fn) {
  for (const fs::path& dir : ctx.bundles) {
    const SlideHandle slide = open_bundle(dir);
    const std::string& id = slide.meta().slide_id;
    auto table = fn(slide, load_candidates((ctx.paths.*in)(id)));
    const fs::path path = (ctx.paths.*out)(id);
    persist_candidates(table, path);
    m.slides[id] = CountCandidates(table);
    m.artifacts[id + "/" + artifact] = Relative(ctx, path);
  }
}

}  // namespace

RunManifest OpenManifest(const StageContext& ctx) {
  RunManifest m;
  if (fs::exists(ctx.paths.manifest_json())) {
    m = ManifestFromJson(ReadText(ctx.paths.manifest_json()));
  }
  m.version = kVersion;
  m.config_json = ConfigToJson(ctx.cfg);
  m.config_hash = ConfigHash(ctx.cfg);
  m.seed = ctx.cfg.seed;
  return m;
}

void WriteManifest(const StageContext& ctx, const RunManifest& m) {
  WriteText(ctx.paths.manifest_json(), ManifestToJson(m));
}

void stage_sample(const StageContext& ctx, RunManifest& m) {
  StageTimer timer(m, "sample");
  if (ctx.bundles.empty()) Fail(ErrorKind::kArgument, "no slides given");
  for (const fs::path& dir : ctx.bundles) {
    const SlideHandle slide = open_bundle(dir);
    const std::string& id = slide.meta().slide_id;
    const auto table = sample_slide(slide, ctx.cfg);
    persist_candidates(table, ctx.paths.sampled_csv(id));
    m.slides[id] = CountCandidates(table);
    m.artifacts[id + "/candidates"] = Relative(ctx, ctx.paths.sampled_csv(id));
  }
}

void stage_classify(const StageContext& ctx, Backend& backend, RunManifest& m) {
  StageTimer timer(m, "classify");
  if (ctx.bundles.empty()) Fail(ErrorKind::kArgument, "no slides given");
  TransformTables(ctx, m, &RunPaths::sampled_csv, &RunPaths::classified_csv,
                  "classified", [&](const SlideHandle& slide, auto table) {
                    return classify_candidates(backend, slide, std::move(table),
                                               ctx.cfg.workers);
                  });
}

void stage_quantify(const StageContext& ctx, Backend& backend, RunManifest& m) {
  StageTimer timer(m, "quantify");
  if (ctx.bundles.empty()) Fail(ErrorKind::kArgument, "no slides given");
  TransformTables(
      ctx, m, &RunPaths::classified_csv, &RunPaths::quantified_csv, "quantified",
      [&](const SlideHandle& slide, auto table) {
        QuantifyOutcome q =
            quantify_candidates(backend, slide, std::move(table),
                                ctx.cfg.workers, ctx.cfg.tolerate_failures);
        for (const std::string& f : q.failures) {
          spdlog::warn("{}", f);
          m.failures.push_back(f);
          m.status = "partial";
        }
        return std::move(q.candidates);
      });
}

void stage_score(const StageContext& ctx, RunManifest& m) {
  StageTimer timer(m, "score");
  std::vector<Candidate> all;
  for (const std::string& id : SlideIds(ctx, m)) {
    auto table = load_candidates(ctx.paths.quantified_csv(id));
    all.insert(all.end(), table.begin(), table.end());
  }
  const auto scores = score_patients(all, ctx.patients);
  WriteText(ctx.paths.patient_scores_csv(), PatientScoresToCsv(scores));
  m.artifacts["patient_scores"] = Relative(ctx, ctx.paths.patient_scores_csv());
}

void stage_heatmap(const StageContext& ctx, RunManifest& m) {
  StageTimer timer(m, "heatmap");
  if (ctx.bundles.empty()) Fail(ErrorKind::kArgument, "no slides given");
  const std::string hash = ConfigHash(ctx.cfg);
  const PngText text = {{"tilscore:seed", std::to_string(ctx.cfg.seed)},
                        {"tilscore:config_hash", hash}};
  const ColorMap colors = ColorMap::Default();
  for (const fs::path& dir : ctx.bundles) {
    const SlideHandle slide = open_bundle(dir);
    const std::string& id = slide.meta().slide_id;
    const auto table = load_candidates(ctx.paths.quantified_csv(id));
    const Thumbnail thumb = make_thumbnail(slide, ctx.cfg.thumbnail_max_dim);
    WritePng(ctx.paths.heatmap_png(id),
             render_heatmap(thumb.image, table, thumb.scale_factor,
                            ctx.cfg.clip_density, colors),
             text);
    WritePng(ctx.paths.overlay_png(id),
             render_class_overlay(thumb.image, table, thumb.scale_factor), text);
    WriteText(ctx.paths.legend_json(id),
              LegendJson(ctx.cfg.clip_density, colors, ctx.cfg.seed, hash));
    m.artifacts[id + "/heatmap"] = Relative(ctx, ctx.paths.heatmap_png(id));
    m.artifacts[id + "/classes"] = Relative(ctx, ctx.paths.overlay_png(id));
    m.artifacts[id + "/legend"] = Relative(ctx, ctx.paths.legend_json(id));
  }
}

void run_pipeline(const StageContext& ctx, Backend& backend, RunManifest& m) {
  stage_sample(ctx, m);
  stage_classify(ctx, backend, m);
  stage_quantify(ctx, backend, m);
  stage_score(ctx, m);
  stage_heatmap(ctx, m);
}

}  // namespace tilscore
