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

#include <gtest/gtest.h>

#include <algorithm>

#include "json.hpp"
#include "test_support.hpp"
#include "tilscore/cohort.hpp"
#include "tilscore/error.hpp"
#include "tilscore/pipeline.hpp"

namespace tilscore {
namespace {

namespace fs = std::filesystem;
using testing::KindOf;

// Ten one-slide patients, 1024 px at 3.5 um/px, scored with 64 px patches
// at ratio 0.7: roughly 110 sampled patches per slide.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    SyntheticCohortOptions opt;
    opt.patients = 10;
    opt.width = 1024;
    opt.height = 1024;
    opt.max_levels = 2;
    cohort_ = new SyntheticCohort(generate_synthetic_cohort(opt, 31, dir_->path() / "cohort"));
  }
  static void TearDownTestSuite() {
    delete cohort_;
    delete dir_;
  }

  static StageContext Context(const std::string& out, int workers = 1) {
    StageContext ctx;
    ctx.cfg.patch_size = 64;
    ctx.cfg.sampling_ratio = 0.7;
    ctx.cfg.seed = 5;
    ctx.cfg.thumbnail_max_dim = 256;
    ctx.cfg.workers = workers;
    ctx.bundles = cohort_->bundles;
    ctx.paths.out = dir_->path() / out;
    return ctx;
  }

  static RunManifest Run(const StageContext& ctx) {
    RunManifest m = OpenManifest(ctx);
    auto backend = MakeBackend(ctx.cfg, ctx.bundles);
    run_pipeline(ctx, *backend, m);
    WriteManifest(ctx, m);
    return m;
  }

  // Every artifact except the manifest, as relative path -> bytes.
  static std::map<std::string, std::string> Artifacts(const fs::path& out) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
      files[fs::relative(e.path(), out).generic_string()] = testing::ReadAll(e.path());
    }
    return files;
  }

  static inline testing::TempDir* dir_ = nullptr;
  static inline SyntheticCohort* cohort_ = nullptr;
};

TEST_F(PipelineTest, RepeatableAndWorkerIndependent) {
  const RunManifest a = Run(Context("a", 1));
  const RunManifest b = Run(Context("b", 1));
  const RunManifest c = Run(Context("c", 3));
  const auto fa = Artifacts(dir_->path() / "a");
  EXPECT_EQ(fa.size(), 1 + 6 * cohort_->bundles.size());
  EXPECT_EQ(fa, Artifacts(dir_->path() / "b"));
  EXPECT_EQ(fa, Artifacts(dir_->path() / "c"));
  EXPECT_EQ(a.slides, c.slides);
  EXPECT_EQ(a.config_hash, c.config_hash);
  for (const char* stage : {"sample", "classify", "quantify", "score", "heatmap"}) {
    EXPECT_TRUE(a.durations_s.count(stage)) << stage;
  }
}

TEST_F(PipelineTest, ChainedStagesEqualRun) {
  Run(Context("whole"));
  const StageContext ctx = Context("chain");
  auto backend = MakeBackend(ctx.cfg, ctx.bundles);
  // Each stage reopens the manifest as a separate subcommand would.
  auto step = [&](auto fn) {
    RunManifest m = OpenManifest(ctx);
    fn(m);
    WriteManifest(ctx, m);
  };
  step([&](RunManifest& m) { stage_sample(ctx, m); });
  step([&](RunManifest& m) { stage_classify(ctx, *backend, m); });
  step([&](RunManifest& m) { stage_quantify(ctx, *backend, m); });
  step([&](RunManifest& m) { stage_score(ctx, m); });
  step([&](RunManifest& m) { stage_heatmap(ctx, m); });
  EXPECT_EQ(Artifacts(dir_->path() / "whole"), Artifacts(dir_->path() / "chain"));
  const RunManifest chained =
      ManifestFromJson(testing::ReadAll(dir_->path() / "chain" / "manifest.json"));
  const RunManifest whole =
      ManifestFromJson(testing::ReadAll(dir_->path() / "whole" / "manifest.json"));
  EXPECT_EQ(chained.slides, whole.slides);
  EXPECT_EQ(chained.artifacts, whole.artifacts);
  EXPECT_EQ(chained.durations_s.size(), 5u);
}

TEST_F(PipelineTest, ManifestCountsShrinkAlongTheStages) {
  const RunManifest m = Run(Context("counts"));
  ASSERT_EQ(m.slides.size(), cohort_->bundles.size());
  for (const auto& [id, n] : m.slides) {
    EXPECT_GE(n.total, n.eligible) << id;
    EXPECT_GE(n.eligible, n.sampled) << id;
    EXPECT_GE(n.sampled, n.relevant) << id;
    EXPECT_EQ(n.relevant, n.quantified) << id;
    EXPECT_GE(n.sampled, 100) << id;
  }
  const RunManifest back = ManifestFromJson(ManifestToJson(m));
  EXPECT_EQ(back.slides, m.slides);
  EXPECT_EQ(back.seed, 5u);
  EXPECT_EQ(back.status, "ok");
  EXPECT_EQ(KindOf([] { ManifestFromJson("{}"); }), ErrorKind::kParse);
}

TEST_F(PipelineTest, RecoveredRankingMatchesPlantedRanking) {
  const StageContext ctx = Context("rank");
  Run(ctx);
  const auto scores =
      PatientScoresFromCsv(testing::ReadAll(ctx.paths.patient_scores_csv()));
  ASSERT_EQ(scores.size(), cohort_->slide_ids.size());
  std::vector<double> got;
  for (const std::string& id : cohort_->slide_ids) got.push_back(scores.at(id));
  const auto& planted = cohort_->planted_density;
  // Kendall tau-a over all pairs.
  double s = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    for (std::size_t j = i + 1; j < got.size(); ++j) {
      const double a = (planted[i] - planted[j]) * (got[i] - got[j]);
      s += a > 0 ? 1 : (a < 0 ? -1 : 0);
      pairs += 1;
    }
  }
  EXPECT_GE(s / pairs, 0.8);
}

TEST_F(PipelineTest, MockBackendNeedsTruth) {
  testing::TempDir empty;
  PipelineConfig cfg;
  EXPECT_EQ(KindOf([&] { MakeBackend(cfg, {empty.path()}); }), ErrorKind::kConfig);
  StageContext ctx = Context("none");
  ctx.bundles.clear();
  RunManifest m;
  EXPECT_EQ(KindOf([&] { stage_sample(ctx, m); }), ErrorKind::kArgument);
}

TEST(CountCandidates, TalliesEachStage) {
  std::vector<Candidate> c(5);
  for (auto& k : c) k.eligible = true;
  c[0].sampled = c[1].sampled = c[2].sampled = true;
  c[0].class_label = PatchClass::kTumor;
  c[1].class_label = PatchClass::kNecrosis;
  c[0].til_count = 3;
  EXPECT_EQ(CountCandidates(c), (SlideCounts{5, 5, 3, 1, 1}));
}

}  // namespace
}  // namespace tilscore
