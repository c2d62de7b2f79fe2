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

#include "tilscore/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

#include <spdlog/spdlog.h>

#include "tilscore/classify.hpp"
#include "tilscore/error.hpp"
#include "tilscore/parallel.hpp"
#include "tilscore/quantify.hpp"
#include "tilscore/rng.hpp"

namespace tilscore {

std::uint64_t IterationSeed(std::uint64_t base_seed, double ratio,
                            int iteration) {
  return DeriveSeed(base_seed,
                    {DoubleBits(ratio), static_cast<std::uint64_t>(iteration)});
}

namespace {

/// Lazily computed backend results for one eligible patch.
struct PatchResult {
  std::once_flag once;
  std::optional<double> density;  // set for tumor/stroma patches
};

class SlideCache {
 public:
  SlideCache(const SweepSlide& slide, Backend& backend)
      : slide_(slide),
        backend_(backend),
        results_(std::make_unique<PatchResult[]>(slide.candidates.size())) {}

  std::optional<double> density(std::size_t i) {
    PatchResult& r = results_[i];
    std::call_once(r.once, [&] {
      const Candidate& c = slide_.candidates[i];
      const double mpp = slide_.handle.meta().mpp;
      const PixelBuffer patch =
          slide_.handle.read_region(0, c.x, c.y, c.patch_size, c.patch_size);
      const PatchRef ref{c.slide_id, c.x, c.y, c.patch_size, mpp};
      if (!IsRelevant(ArgmaxClass(backend_classify(backend_, patch, ref)))) {
        return;
      }
      r.density = patch_density(til_count(backend_quantify(backend_, patch, ref)),
                                c.patch_size, mpp);
    });
    return r.density;
  }

 private:
  const SweepSlide& slide_;
  Backend& backend_;
  std::unique_ptr<PatchResult[]> results_;
};

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

SweepResult ratio_sweep(const std::vector<SweepSlide>& slides,
                        const std::vector<CohortEntry>& survival,
                        const std::vector<double>& ratios, int iterations,
                        std::uint64_t base_seed, Backend& backend,
                        int workers) {
  if (iterations < 1) Fail(ErrorKind::kArgument, "sweep needs >= 1 iteration");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      Fail(ErrorKind::kArgument, "sweep ratios must lie in (0, 1]");
    }
  }
  std::map<std::string, const CohortEntry*> outcome;
  for (const CohortEntry& e : survival) outcome[e.patient_id] = &e;

  SweepResult result;
  std::vector<const SweepSlide*> used;
  for (const SweepSlide& s : slides) {
    const bool any = std::any_of(s.candidates.begin(), s.candidates.end(),
                                 [](const Candidate& c) { return c.eligible; });
    if (!any) {
      spdlog::warn("sweep: slide {} has no eligible patches; excluded",
                   s.slide_id);
      result.excluded_slides.push_back(s.slide_id);
    } else if (!outcome.count(s.patient_id)) {
      spdlog::warn("sweep: patient {} has no survival record; slide {} ignored",
                   s.patient_id, s.slide_id);
    } else {
      used.push_back(&s);
    }
  }
  if (used.empty()) Fail(ErrorKind::kArgument, "sweep has no usable slides");

  std::vector<std::unique_ptr<SlideCache>> caches;
  for (const SweepSlide* s : used) {
    caches.push_back(std::make_unique<SlideCache>(*s, backend));
  }

  for (double ratio : ratios) {
    std::vector<double> cindex(static_cast<std::size_t>(iterations));
    std::atomic<int> dropped{0};
    const auto failures = ParallelFor(
        cindex.size(), workers, [&](std::size_t it) {
          const std::uint64_t seed =
              IterationSeed(base_seed, ratio, static_cast<int>(it));
          std::map<std::string, std::vector<std::vector<double>>> by_patient;
          for (std::size_t s = 0; s < used.size(); ++s) {
            const SweepSlide& slide = *used[s];
            const auto drawn = subsample(slide.candidates, ratio,
                                         SlideSeed(seed, slide.slide_id));
            std::vector<double> densities;
            for (std::size_t i = 0; i < drawn.size(); ++i) {
              if (!drawn[i].sampled) continue;
              if (const auto d = caches[s]->density(i)) densities.push_back(*d);
            }
            auto& lists = by_patient[slide.patient_id];
            if (!densities.empty()) lists.push_back(std::move(densities));
          }
          std::vector<SurvivalRecord> records;
          for (const auto& [patient, lists] : by_patient) {
            if (lists.empty()) {
              ++dropped;
              continue;
            }
            const CohortEntry& e = *outcome.at(patient);
            records.push_back({patient, e.time_months, e.event,
                               -multi_slide_score(lists), std::nullopt});
          }
          cindex[it] = concordance_index(records);
        });
    RaiseFirstFailure(failures, "sweep iteration");
    if (dropped > 0) {
      spdlog::warn(
          "sweep: ratio {}: {} patient-iteration(s) had no tumor/stroma patch "
          "and were left out",
          ratio, dropped.load());
    }

    SweepRow row;
    row.ratio = ratio;
    row.iterations = iterations;
    row.c_index_mean = Mean(cindex);
    double ss = 0.0;
    for (double c : cindex) ss += (c - row.c_index_mean) * (c - row.c_index_mean);
    row.c_index_sd = std::sqrt(ss / static_cast<double>(cindex.size()));
    double patches = 0.0;
    for (const SweepSlide* s : used) {
      const auto eligible = std::count_if(
          s->candidates.begin(), s->candidates.end(),
          [](const Candidate& c) { return c.eligible; });
      patches += static_cast<double>(
          SampleCount(static_cast<std::size_t>(eligible), ratio));
    }
    row.avg_patch_count = patches / static_cast<double>(used.size());
    result.rows.push_back(row);
  }
  return result;
}

std::string SweepToCsv(const std::vector<SweepRow>& rows) {
  std::string out = "ratio,c_index_mean,c_index_sd,avg_patches\n";
  char buf[160];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.6f,%.6f,%.2f\n", r.ratio,
                  r.c_index_mean, r.c_index_sd, r.avg_patch_count);
    out += buf;
  }
  return out;
}

}  // namespace tilscore
