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

#include <Eigen/Dense>

namespace tilscore {

struct SurvivalRecord {
  std::string patient_id;
  double time = 0.0;  // months, > 0
  bool event = false;  // true = death from the disease
  double risk_score = 0.0;  // higher = worse prognosis
  std::optional<std::string> group;
};

struct QuartileSplit {
  double c25 = 0.0;
  double c50 = 0.0;
  double c75 = 0.0;
  std::vector<int> groups;  // 1..4, aligned with the input
};

/// Linear interpolation between order statistics of sorted data (the
/// "inclusive" or type-7 definition), p in [0, 1].
double Quantile(const std::vector<double>& sorted, double p);

/// Q1 if s <= c25, Q2 if s <= c50, Q3 if s <= c75, else Q4. Needs >= 4 scores.
QuartileSplit quantize_quartiles(const std::vector<double>& scores);

/// Harrell's c. A pair is comparable when the shorter time is an event and
/// the times differ; tied risks count one half. O(n log n).
double concordance_index(const std::vector<SurvivalRecord>& records);

struct KMCurve {
  std::vector<double> times;  // every distinct time, ascending
  std::vector<double> survival;  // S just after each time
  std::vector<int> at_risk;
  std::vector<int> events;
  std::vector<int> censored;
};

/// Product-limit estimate. Subjects censored at an event time are still at
/// risk for that time.
KMCurve kaplan_meier(const std::vector<SurvivalRecord>& records);

/// CSV "time,survival,at_risk,censored".
std::string KmToCsv(const KMCurve& curve);

struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

/// Upper tail of the chi-square distribution.
double ChiSquareSurvival(double statistic, int df);

/// k-sample log-rank test with the hypergeometric covariance.
TestResult log_rank_test(const std::vector<std::vector<SurvivalRecord>>& groups);

struct CoxTerm {
  std::string level;
  double beta = 0.0;
  double se = 0.0;
  double hazard_ratio = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double wald_p = 1.0;
};

struct CoxFit {
  std::string reference;
  std::vector<CoxTerm> terms;  // one per non-reference level, sorted
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Design for a categorical covariate: one 0/1 column per non-reference
/// level. Throws kArgument when a record lacks a group or fewer than two
/// levels are present.
struct CoxDesign {
  std::string reference;
  std::vector<std::string> levels;  // non-reference, sorted
  Eigen::MatrixXd x;  // n x levels.size()
  std::vector<double> times;
  std::vector<bool> events;
};

CoxDesign MakeCoxDesign(const std::vector<SurvivalRecord>& records,
                        const std::string& reference);

struct CoxEvaluation {
  double log_likelihood = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;  // negative Hessian
};

/// Breslow partial log-likelihood with its first two derivatives.
CoxEvaluation EvaluateCox(const CoxDesign& design, const Eigen::VectorXd& beta);

/// Newton-Raphson with step halving; converged when max |score| < 1e-9,
/// at most 50 iterations. |beta| > 20 is reported as kDivergence.
CoxFit cox_ph_fit(const std::vector<SurvivalRecord>& records,
                  const std::string& reference);

/// Rao score statistic at beta = 0.
double cox_score_test(const std::vector<SurvivalRecord>& records,
                      const std::string& reference);

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
  bool low_expected = false;  // some expected count < 5
};

/// Pearson test of independence on an r x c table, no continuity correction.
ChiSquareResult chi_square_test(const std::vector<std::vector<std::int64_t>>& table);

/// Two-sided Fisher exact p for [[a, b], [c, d]].
double fisher_exact_2x2(const std::array<std::array<std::int64_t, 2>, 2>& table);

/// Row of a cohort CSV "patient_id,time_months,event,score". The score may
/// be empty until joined with patient scores.
struct CohortEntry {
  std::string patient_id;
  double time_months = 0.0;
  bool event = false;
  std::optional<double> score;
};

std::vector<CohortEntry> CohortFromCsv(const std::string& text);
std::string CohortToCsv(const std::vector<CohortEntry>& cohort);

/// Records with risk = -score, since a higher TIL score means a better
/// prognosis. Entries without a score raise kArgument.
std::vector<SurvivalRecord> RecordsFromScores(
    const std::vector<CohortEntry>& cohort);

}  // namespace tilscore
