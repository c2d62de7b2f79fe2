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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tilscore/config.hpp"
#include "tilscore/image.hpp"
#include "tilscore/synthetic.hpp"
#include "tilscore/taxonomy.hpp"

namespace tilscore {

/// Probabilities in PatchClass order: necrosis, stroma, normal_lung, tumor.
using ClassProbs = std::array<double, kNumPatchClasses>;

struct CellInstance {
  double cx = 0.0;  // patch-local pixels
  double cy = 0.0;
  CellClass cls = CellClass::kNeoplastic;

  friend bool operator==(const CellInstance&, const CellInstance&) = default;
};

/// Where a patch came from. Backends that only look at pixels ignore the
/// coordinates; the mock backend ignores the pixels.
struct PatchRef {
  std::string slide_id;
  int x = 0;
  int y = 0;
  int size = 0;
  double mpp = 0.0;

  std::string id() const {
    return slide_id + "@" + std::to_string(x) + "," + std::to_string(y);
  }
};

/// A patch classifier plus cell quantifier. Implementations must tolerate
/// concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Raw probabilities as reported; validation happens in backend_classify.
  virtual ClassProbs classify(const PatchRef& ref, const PixelBuffer& patch) = 0;
  virtual std::vector<CellInstance> quantify(const PatchRef& ref,
                                             const PixelBuffer& patch) = 0;
};

struct NormalizedProbs {
  ClassProbs probs{};
  bool renormalized = false;  // sum was off by more than 1e-3
};

/// Rejects negative or non-finite entries and an all-zero vector
/// (kProtocol); otherwise rescales to sum 1.
NormalizedProbs NormalizeProbs(const ClassProbs& raw);

/// Argmax with ties resolved by PatchClass order.
PatchClass ArgmaxClass(const ClassProbs& probs);

/// Validated classification; logs a warning when renormalizing.
ClassProbs backend_classify(Backend& backend, const PixelBuffer& patch,
                            const PatchRef& ref);

/// Validated quantification; centroids outside the patch are a kProtocol
/// error.
std::vector<CellInstance> backend_quantify(Backend& backend,
                                           const PixelBuffer& patch,
                                           const PatchRef& ref);

/// Deterministic stand-in driven by planted ground truth.
///
/// classify: 0.9 on the tissue class covering most of the patch, the rest
/// split evenly; a patch without tissue gets the uniform vector.
/// quantify: TIL count ~ Poisson(integral of planted density over the patch
/// in mm^2), plus non-TIL nuclei ~ Poisson(that integral * (1-s)/s) for the
/// region's TIL share s; centroids uniform over the patch. Every draw is
/// seeded by (seed, slide, x, y), so results do not depend on call order.
class MockBackend final : public Backend {
 public:
  static constexpr double kConfidence = 0.9;

  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}

  void add_slide(GroundTruthMap truth);

  ClassProbs classify(const PatchRef& ref, const PixelBuffer& patch) override;
  std::vector<CellInstance> quantify(const PatchRef& ref,
                                     const PixelBuffer& patch) override;

  /// Truth area (level-0 px^2) per TissueClass under the patch.
  std::array<double, 5> class_areas(const PatchRef& ref) const;
  /// Expected TIL count under the patch.
  double expected_tils(const PatchRef& ref) const;

 private:
  const GroundTruthMap& truth_for(const PatchRef& ref) const;

  std::uint64_t seed_;
  std::map<std::string, GroundTruthMap> truths_;
};

std::unique_ptr<MockBackend> make_mock_backend(GroundTruthMap truth,
                                               std::uint64_t seed);

/// Newline-delimited JSON over a child process's stdin/stdout. Requests are
/// tagged with unique ids, so responses may come back in any order.
std::unique_ptr<Backend> MakeSubprocessBackend(const std::string& command,
                                               double timeout_s);

/// One JSON POST per request to `url` ("http://host:port/path").
std::unique_ptr<Backend> MakeHttpBackend(const std::string& url,
                                         double timeout_s);

/// Builds a subprocess or HTTP backend from its descriptor. Mock backends
/// need ground truth and are built with MockBackend directly.
std::unique_ptr<Backend> MakeRemoteBackend(const BackendDescriptor& d);

}  // namespace tilscore
