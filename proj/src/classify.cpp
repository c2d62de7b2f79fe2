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

#include "tilscore/classify.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "tilscore/error.hpp"
#include "tilscore/parallel.hpp"

namespace tilscore {

std::vector<Candidate> classify_candidates(Backend& backend,
                                           const SlideHandle& slide,
                                           std::vector<Candidate> candidates,
                                           int workers) {
  const double mpp = slide.meta().mpp;
  const auto failures =
      ParallelFor(candidates.size(), workers, [&](std::size_t i) {
        Candidate& c = candidates[i];
        if (!c.sampled) return;
        const PixelBuffer patch =
            slide.read_region(0, c.x, c.y, c.patch_size, c.patch_size);
        const PatchRef ref{c.slide_id, c.x, c.y, c.patch_size, mpp};
        const ClassProbs probs = backend_classify(backend, patch, ref);
        c.class_probs = probs;
        c.class_label = ArgmaxClass(probs);
      });
  RaiseFirstFailure(failures, "candidate");
  return candidates;
}

bool IsRelevant(PatchClass c) {
  return c == PatchClass::kTumor || c == PatchClass::kStroma;
}

std::vector<Candidate> filter_relevant(const std::vector<Candidate>& candidates) {
  std::vector<Candidate> out;
  for (const Candidate& c : candidates) {
    if (c.sampled && c.class_label && IsRelevant(*c.class_label)) {
      out.push_back(c);
    }
  }
  return out;
}

double PairCountingAuc(const std::vector<double>& scores,
                       const std::vector<bool>& positive) {
  // Rank-sum form of the pair count: average ranks give ties half credit.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += avg_rank;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    Fail(ErrorKind::kUndefinedMetric, "AUC needs positives and negatives");
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

ClassifierReport evaluate_classifier(
    const std::vector<LabeledPrediction>& predictions) {
  ClassifierReport r;
  std::array<std::size_t, kNumPatchClasses> truth_counts{};
  for (const LabeledPrediction& p : predictions) {
    const auto t = static_cast<std::size_t>(p.truth);
    ++r.confusion[t][static_cast<std::size_t>(ArgmaxClass(p.probs))];
    ++truth_counts[t];
  }
  const auto present = std::count_if(truth_counts.begin(), truth_counts.end(),
                                     [](std::size_t n) { return n > 0; });
  if (present < 2) {
    Fail(ErrorKind::kUndefinedMetric,
         "classifier evaluation needs at least two true classes");
  }
  std::int64_t correct = 0;
  for (int k = 0; k < kNumPatchClasses; ++k) correct += r.confusion[k][k];
  r.accuracy = static_cast<double>(correct) / predictions.size();

  std::vector<double> scores(predictions.size());
  std::vector<bool> positive(predictions.size());
  double auc_sum = 0.0;
  for (int k = 0; k < kNumPatchClasses; ++k) {
    if (truth_counts[k] == 0) continue;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      scores[i] = predictions[i].probs[k];
      positive[i] = static_cast<int>(predictions[i].truth) == k;
    }
    r.per_class_auc[k] = PairCountingAuc(scores, positive);
    auc_sum += *r.per_class_auc[k];
  }
  r.mean_auc = auc_sum / static_cast<double>(present);
  return r;
}

std::string ReportToJson(const ClassifierReport& report) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::json::array();
  for (PatchClass c : kPatchClasses) j["classes"].push_back(Name(c));
  j["confusion"] = report.confusion;
  j["accuracy"] = report.accuracy;
  auto aucs = nlohmann::json::array();
  for (const auto& a : report.per_class_auc) {
    aucs.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  }
  j["per_class_auc"] = aucs;
  j["mean_auc"] = report.mean_auc;
  return j.dump(2) + "\n";
}

std::string ConfusionToCsv(const ClassifierReport& report) {
  std::string out = "truth";
  for (PatchClass c : kPatchClasses) out += "," + std::string(Name(c));
  out += "\n";
  for (PatchClass t : kPatchClasses) {
    out += Name(t);
    for (std::int64_t n : report.confusion[static_cast<std::size_t>(t)]) {
      out += "," + std::to_string(n);
    }
    out += "\n";
  }
  return out;
}

}  // namespace tilscore
