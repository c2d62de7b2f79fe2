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

#include "tilscore/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"

namespace tilscore {

NormalizedProbs NormalizeProbs(const ClassProbs& raw) {
  double sum = 0.0;
  for (double p : raw) {
    if (!std::isfinite(p) || p < 0.0) {
      Fail(ErrorKind::kProtocol, "class probability is negative or not finite");
    }
    sum += p;
  }
  if (!(sum > 0.0)) Fail(ErrorKind::kProtocol, "class probabilities sum to 0");
  NormalizedProbs out;
  out.renormalized = std::abs(sum - 1.0) > 1e-3;
  for (int k = 0; k < kNumPatchClasses; ++k) out.probs[k] = raw[k] / sum;
  return out;
}

PatchClass ArgmaxClass(const ClassProbs& probs) {
  int best = 0;
  for (int k = 1; k < kNumPatchClasses; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return static_cast<PatchClass>(best);
}

namespace {
void CheckPatch(const PixelBuffer& patch, const PatchRef& ref) {
  if (patch.width() != ref.size || patch.height() != ref.size) {
    Fail(ErrorKind::kArgument, "patch " + ref.id() + " is not " +
                                   std::to_string(ref.size) + " px square");
  }
}
}  // namespace

ClassProbs backend_classify(Backend& backend, const PixelBuffer& patch,
                            const PatchRef& ref) {
  CheckPatch(patch, ref);
  const NormalizedProbs n = NormalizeProbs(backend.classify(ref, patch));
  if (n.renormalized) {
    spdlog::warn("{}: class probabilities did not sum to 1; renormalized",
                 ref.id());
  }
  return n.probs;
}

std::vector<CellInstance> backend_quantify(Backend& backend,
                                           const PixelBuffer& patch,
                                           const PatchRef& ref) {
  CheckPatch(patch, ref);
  std::vector<CellInstance> cells = backend.quantify(ref, patch);
  for (const CellInstance& c : cells) {
    if (!(c.cx >= 0.0 && c.cx < ref.size && c.cy >= 0.0 && c.cy < ref.size)) {
      Fail(ErrorKind::kProtocol, ref.id() + ": cell centroid outside patch");
    }
  }
  return cells;
}

void MockBackend::add_slide(GroundTruthMap truth) {
  std::string id = truth.slide_id;
  truths_.insert_or_assign(std::move(id), std::move(truth));
}

const GroundTruthMap& MockBackend::truth_for(const PatchRef& ref) const {
  const auto it = truths_.find(ref.slide_id);
  if (it == truths_.end()) {
    Fail(ErrorKind::kArgument, "mock backend has no truth for " + ref.slide_id);
  }
  const GroundTruthMap& t = it->second;
  if (ref.x < 0 || ref.y < 0 || ref.size < 1 || ref.x + ref.size > t.width ||
      ref.y + ref.size > t.height) {
    Fail(ErrorKind::kArgument, "patch " + ref.id() + " outside truth coverage");
  }
  return t;
}

namespace {

/// Splits the patch into elementary rectangles along every region edge and
/// calls fn(area_px, topmost region or nullptr) for each.
template <typename Fn>
void ForEachPiece(const GroundTruthMap& t, const PatchRef& ref, Fn fn) {
  const double x0 = ref.x;
  const double y0 = ref.y;
  const double x1 = ref.x + ref.size;
  const double y1 = ref.y + ref.size;
  std::vector<const TruthRegion*> overlapping;
  std::vector<double> xs = {x0, x1};
  std::vector<double> ys = {y0, y1};
  for (const TruthRegion& r : t.regions) {
    if (r.x >= x1 || r.x + r.w <= x0 || r.y >= y1 || r.y + r.h <= y0) continue;
    overlapping.push_back(&r);
    for (double v : {double(r.x), double(r.x + r.w)}) {
      if (v > x0 && v < x1) xs.push_back(v);
    }
    for (double v : {double(r.y), double(r.y + r.h)}) {
      if (v > y0 && v < y1) ys.push_back(v);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double cx = 0.5 * (xs[i] + xs[i + 1]);
      const double cy = 0.5 * (ys[j] + ys[j + 1]);
      const TruthRegion* top = nullptr;
      for (auto it = overlapping.rbegin(); it != overlapping.rend(); ++it) {
        if ((*it)->contains(cx, cy)) {
          top = *it;
          break;
        }
      }
      fn((xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]), top);
    }
  }
}

CellClass NonTilClass(TissueClass c) {
  switch (c) {
    case TissueClass::kTumor: return CellClass::kNeoplastic;
    case TissueClass::kNecrosis: return CellClass::kDead;
    case TissueClass::kNormalLung: return CellClass::kEpithelial;
    default: return CellClass::kConnective;
  }
}

constexpr std::uint64_t kQuantifyTag = 0x7175616e74ULL;

}  // namespace

std::array<double, 5> MockBackend::class_areas(const PatchRef& ref) const {
  std::array<double, 5> areas{};
  ForEachPiece(truth_for(ref), ref, [&](double area, const TruthRegion* r) {
    const auto cls = r ? r->cls : TissueClass::kBackground;
    areas[static_cast<std::size_t>(cls)] += area;
  });
  return areas;
}

double MockBackend::expected_tils(const PatchRef& ref) const {
  const double mm2_per_px = ref.mpp * ref.mpp * 1e-6;
  double total = 0.0;
  ForEachPiece(truth_for(ref), ref, [&](double area, const TruthRegion* r) {
    if (r) total += area * mm2_per_px * r->density_per_mm2;
  });
  return total;
}

ClassProbs MockBackend::classify(const PatchRef& ref, const PixelBuffer&) {
  const auto areas = class_areas(ref);
  int best = -1;
  double best_area = 0.0;
  for (PatchClass pc : kPatchClasses) {
    // TissueClass codes are PatchClass codes shifted by one.
    const double a = areas[static_cast<std::size_t>(pc) + 1];
    if (a > best_area) {
      best_area = a;
      best = static_cast<int>(pc);
    }
  }
  ClassProbs probs;
  if (best < 0) {
    probs.fill(1.0 / kNumPatchClasses);
    return probs;
  }
  probs.fill((1.0 - kConfidence) / (kNumPatchClasses - 1));
  probs[best] = kConfidence;
  return probs;
}

std::vector<CellInstance> MockBackend::quantify(const PatchRef& ref,
                                                const PixelBuffer&) {
  const GroundTruthMap& t = truth_for(ref);
  const double mm2_per_px = ref.mpp * ref.mpp * 1e-6;
  double til_mean = 0.0;
  std::array<double, 5> other_mean{};
  ForEachPiece(t, ref, [&](double area, const TruthRegion* r) {
    if (!r) return;
    const double tils = area * mm2_per_px * r->density_per_mm2;
    til_mean += tils;
    other_mean[static_cast<std::size_t>(r->cls)] +=
        tils * (1.0 - r->til_share) / r->til_share;
  });

  Pcg32 rng(DeriveSeed(seed_, {HashString(ref.slide_id),
                               static_cast<std::uint64_t>(ref.x),
                               static_cast<std::uint64_t>(ref.y), kQuantifyTag}));
  std::vector<CellInstance> cells;
  auto place = [&](std::uint32_t n, CellClass cls) {
    for (std::uint32_t i = 0; i < n; ++i) {
      const double cx = rng.uniform() * ref.size;
      const double cy = rng.uniform() * ref.size;
      cells.push_back({cx, cy, cls});
    }
  };
  place(rng.poisson(til_mean), CellClass::kInflammatory);
  for (std::size_t c = 0; c < other_mean.size(); ++c) {
    if (other_mean[c] > 0.0) {
      place(rng.poisson(other_mean[c]),
            NonTilClass(static_cast<TissueClass>(c)));
    }
  }
  return cells;
}

std::unique_ptr<MockBackend> make_mock_backend(GroundTruthMap truth,
                                               std::uint64_t seed) {
  auto backend = std::make_unique<MockBackend>(seed);
  backend->add_slide(std::move(truth));
  return backend;
}

std::unique_ptr<Backend> MakeRemoteBackend(const BackendDescriptor& d) {
  switch (d.kind) {
    case BackendDescriptor::Kind::kSubprocess:
      return MakeSubprocessBackend(d.command, d.timeout_s);
    case BackendDescriptor::Kind::kHttp:
      return MakeHttpBackend(d.url, d.timeout_s);
    case BackendDescriptor::Kind::kMock:
      break;
  }
  Fail(ErrorKind::kArgument, "mock backends are built from ground truth");
}

}  // namespace tilscore
