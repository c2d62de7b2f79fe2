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

#include "tilscore/quantify.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "tilscore/classify.hpp"
#include "tilscore/error.hpp"
#include "tilscore/parallel.hpp"

namespace tilscore {

int til_count(const std::vector<CellInstance>& cells) {
  return static_cast<int>(
      std::count_if(cells.begin(), cells.end(), [](const CellInstance& c) {
        return c.cls == CellClass::kInflammatory;
      }));
}

double patch_density(double count, double patch_size, double mpp) {
  if (!(patch_size > 0.0) || !(mpp > 0.0)) {
    Fail(ErrorKind::kArgument, "patch size and mpp must be positive");
  }
  if (count < 0.0) Fail(ErrorKind::kArgument, "negative cell count");
  const double side_um = patch_size * mpp;
  return count / (side_um * side_um) * 1e6;
}

double patient_score(std::span<const double> densities) {
  if (densities.empty()) {
    Fail(ErrorKind::kNoQuantifiedPatches, "no quantified patches to score");
  }
  return std::accumulate(densities.begin(), densities.end(), 0.0) /
         static_cast<double>(densities.size());
}

double multi_slide_score(const std::vector<std::vector<double>>& per_slide) {
  if (per_slide.empty()) {
    Fail(ErrorKind::kNoQuantifiedPatches, "patient has no slides");
  }
  double sum = 0.0;
  for (const auto& slide : per_slide) sum += patient_score(slide);
  return sum / static_cast<double>(per_slide.size());
}

double dice_score(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  if (tp < 0 || fp < 0 || fn < 0) Fail(ErrorKind::kArgument, "negative count");
  const std::int64_t denom = 2 * tp + fp + fn;
  if (denom == 0) Fail(ErrorKind::kUndefinedMetric, "dice of empty masks");
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double iou_score(const std::vector<ClassOverlap>& per_class) {
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (const ClassOverlap& c : per_class) {
    if (c.intersection < 0 || c.union_ < c.intersection) {
      Fail(ErrorKind::kArgument, "intersection must lie in [0, union]");
    }
    inter += c.intersection;
    uni += c.union_;
  }
  if (uni == 0) Fail(ErrorKind::kUndefinedMetric, "IoU of empty masks");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double pq_score(const std::vector<double>& matched_ious, std::int64_t fp,
                std::int64_t fn) {
  const double tp = static_cast<double>(matched_ious.size());
  const double denom = tp + 0.5 * static_cast<double>(fp) +
                       0.5 * static_cast<double>(fn);
  if (denom == 0.0) Fail(ErrorKind::kUndefinedMetric, "PQ with no instances");
  return std::accumulate(matched_ious.begin(), matched_ious.end(), 0.0) / denom;
}

SegmentationEval evaluate_segmentation(std::span<const std::int32_t> predicted,
                                       std::span<const std::int32_t> truth,
                                       int width, int height) {
  const auto n = static_cast<std::size_t>(width) * height;
  if (width < 1 || height < 1 || predicted.size() != n || truth.size() != n) {
    Fail(ErrorKind::kArgument, "label maps must both be width x height");
  }
  SegmentationEval e;
  std::map<std::int32_t, std::int64_t> pred_area;
  std::map<std::int32_t, std::int64_t> truth_area;
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> overlap;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t p = predicted[i];
    const std::int32_t t = truth[i];
    if (p != 0) ++pred_area[p];
    if (t != 0) ++truth_area[t];
    if (p != 0 && t != 0) {
      ++e.pixel_tp;
      ++overlap[{p, t}];
    } else if (p != 0) {
      ++e.pixel_fp;
    } else if (t != 0) {
      ++e.pixel_fn;
    }
  }
  e.dice = dice_score(e.pixel_tp, e.pixel_fp, e.pixel_fn);
  e.iou = iou_score({{e.pixel_tp, e.pixel_tp + e.pixel_fp + e.pixel_fn}});

  // IoU > 0.5 admits at most one partner per instance, so no assignment
  // step is needed.
  for (const auto& [ids, inter] : overlap) {
    const std::int64_t uni =
        pred_area[ids.first] + truth_area[ids.second] - inter;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    if (iou > 0.5) e.matched_ious.push_back(iou);
  }
  e.tp = static_cast<std::int64_t>(e.matched_ious.size());
  e.fp = static_cast<std::int64_t>(pred_area.size()) - e.tp;
  e.fn = static_cast<std::int64_t>(truth_area.size()) - e.tp;
  e.pq = pq_score(e.matched_ious, e.fp, e.fn);
  return e;
}

std::string SegmentationToJson(const SegmentationEval& e) {
  nlohmann::ordered_json j;
  j["pixel"] = {{"tp", e.pixel_tp}, {"fp", e.pixel_fp}, {"fn", e.pixel_fn}};
  j["instance"] = {{"tp", e.tp}, {"fp", e.fp}, {"fn", e.fn}};
  j["dice"] = e.dice;
  j["iou"] = e.iou;
  j["pq"] = e.pq;
  j["matched_ious"] = e.matched_ious;
  return j.dump(2) + "\n";
}

QuantifyOutcome quantify_candidates(Backend& backend, const SlideHandle& slide,
                                    std::vector<Candidate> candidates,
                                    int workers, bool tolerate_failures) {
  const double mpp = slide.meta().mpp;
  const auto failures =
      ParallelFor(candidates.size(), workers, [&](std::size_t i) {
        Candidate& c = candidates[i];
        if (!c.sampled || !c.class_label || !IsRelevant(*c.class_label)) return;
        c.til_count.reset();
        c.density_mm2.reset();
        const PixelBuffer patch =
            slide.read_region(0, c.x, c.y, c.patch_size, c.patch_size);
        const PatchRef ref{c.slide_id, c.x, c.y, c.patch_size, mpp};
        const int count = til_count(backend_quantify(backend, patch, ref));
        c.til_count = count;
        c.density_mm2 = patch_density(count, c.patch_size, mpp);
      });
  QuantifyOutcome out;
  for (const IndexedFailure& f : failures) {
    out.failures.push_back("candidate " + std::to_string(f.index) + " (" +
                           PatchId(candidates[f.index]) + "): " + f.message());
  }
  if (!out.failures.empty() && !tolerate_failures) {
    std::string msg = std::to_string(out.failures.size()) +
                      " patch(es) failed to quantify:";
    for (const std::string& f : out.failures) msg += "\n  " + f;
    Fail(ErrorKind::kPartialFailure, msg);
  }
  out.candidates = std::move(candidates);
  return out;
}

namespace {

std::vector<std::vector<std::string>> ReadCsvRows(const std::string& text,
                                                  const std::string& header,
                                                  std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) {
    Fail(ErrorKind::kParse, "expected CSV header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != columns) {
      Fail(ErrorKind::kParse,
           "line " + std::to_string(line_no) + ": expected " +
               std::to_string(columns) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

PatientMap LoadPatientMap(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot read patient map " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  PatientMap map;
  for (auto& row : ReadCsvRows(ss.str(), "slide_id,patient_id", 2)) {
    map[row[0]] = row[1];
  }
  return map;
}

std::vector<PatientScore> score_patients(const std::vector<Candidate>& candidates,
                                         const PatientMap& patients) {
  std::map<std::string, std::vector<double>> by_slide;
  for (const Candidate& c : candidates) {
    auto& densities = by_slide[c.slide_id];
    if (c.density_mm2) densities.push_back(*c.density_mm2);
  }
  std::map<std::string, std::vector<SlideScore>> by_patient;
  for (auto& [slide_id, densities] : by_slide) {
    if (densities.empty()) {
      Fail(ErrorKind::kNoQuantifiedPatches,
           "slide " + slide_id + " has no quantified tumor/stroma patches");
    }
    const auto it = patients.find(slide_id);
    const std::string& patient = it == patients.end() ? slide_id : it->second;
    SlideScore s{slide_id, std::move(densities), 0.0};
    s.mean = patient_score(s.densities);
    by_patient[patient].push_back(std::move(s));
  }
  std::vector<PatientScore> out;
  for (auto& [patient, slides] : by_patient) {
    PatientScore p{patient, std::move(slides), 0.0};
    std::vector<std::vector<double>> lists;
    for (const SlideScore& s : p.per_slide) lists.push_back(s.densities);
    p.d_patient = multi_slide_score(lists);
    out.push_back(std::move(p));
  }
  return out;
}

std::string PatientScoresToCsv(const std::vector<PatientScore>& scores) {
  std::string out = "patient_id,slide_id,n_patches,d_patient\n";
  char buf[64];
  for (const PatientScore& p : scores) {
    std::snprintf(buf, sizeof(buf), "%.10g", p.d_patient);
    for (const SlideScore& s : p.per_slide) {
      out += p.patient_id + "," + s.slide_id + "," +
             std::to_string(s.densities.size()) + "," + buf + "\n";
    }
  }
  return out;
}

std::map<std::string, double> PatientScoresFromCsv(const std::string& text) {
  std::map<std::string, double> out;
  for (auto& row :
       ReadCsvRows(text, "patient_id,slide_id,n_patches,d_patient", 4)) {
    try {
      out[row[0]] = std::stod(row[3]);
    } catch (const std::exception&) {
      Fail(ErrorKind::kParse, "bad d_patient '" + row[3] + "'");
    }
  }
  return out;
}

}  // namespace tilscore
