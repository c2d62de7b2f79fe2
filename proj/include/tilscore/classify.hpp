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
#include <optional>
#include <string>
#include <vector>

#include "tilscore/inference.hpp"
#include "tilscore/sampler.hpp"
#include "tilscore/slide_io.hpp"

namespace tilscore {

/// Labels every sampled candidate with the backend's argmax class and keeps
/// the normalized probabilities. Other rows are returned untouched. The
/// first failing candidate aborts with its index in the message.
std::vector<Candidate> classify_candidates(Backend& backend,
                                           const SlideHandle& slide,
                                           std::vector<Candidate> candidates,
                                           int workers = 1);

/// True for the classes that carry the TIL score: tumor and stroma.
bool IsRelevant(PatchClass c);

/// Sampled candidates labelled tumor or stroma, in input order.
std::vector<Candidate> filter_relevant(const std::vector<Candidate>& candidates);

struct LabeledPrediction {
  ClassProbs probs{};
  PatchClass truth = PatchClass::kNecrosis;
};

struct ClassifierReport {
  using Row = std::array<std::int64_t, kNumPatchClasses>;
  std::array<Row, kNumPatchClasses> confusion{};  // [truth][predicted]
  double accuracy = 0.0;
  /// One-vs-rest AUC; empty for classes absent from the truth.
  std::array<std::optional<double>, kNumPatchClasses> per_class_auc{};
  double mean_auc = 0.0;  // macro mean over present classes
};

/// Throws kUndefinedMetric unless the truth holds at least two classes.
ClassifierReport evaluate_classifier(
    const std::vector<LabeledPrediction>& predictions);

/// Mann-Whitney AUC of `scores` separating positives from the rest; tied
/// scores earn half credit. Requires at least one of each.
double PairCountingAuc(const std::vector<double>& scores,
                       const std::vector<bool>& positive);

std::string ReportToJson(const ClassifierReport& report);
/// Header row "truth,<classes...>", then one row per true class.
std::string ConfusionToCsv(const ClassifierReport& report);

}  // namespace tilscore
