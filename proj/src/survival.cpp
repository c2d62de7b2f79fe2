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

#include "tilscore/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "tilscore/error.hpp"

namespace tilscore {

double Quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) Fail(ErrorKind::kArgument, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

QuartileSplit quantize_quartiles(const std::vector<double>& scores) {
  if (scores.size() < 4) {
    Fail(ErrorKind::kArgument, "quartiles need at least 4 scores");
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  QuartileSplit q;
  q.c25 = Quantile(sorted, 0.25);
  q.c50 = Quantile(sorted, 0.50);
  q.c75 = Quantile(sorted, 0.75);
  for (double s : scores) {
    q.groups.push_back(s <= q.c25 ? 1 : s <= q.c50 ? 2 : s <= q.c75 ? 3 : 4);
  }
  return q;
}

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Count of inserted ranks < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

}  // namespace

double concordance_index(const std::vector<SurvivalRecord>& records) {
  std::vector<double> risks;
  for (const auto& r : records) risks.push_back(r.risk_score);
  std::sort(risks.begin(), risks.end());
  risks.erase(std::unique(risks.begin(), risks.end()), risks.end());
  auto rank = [&](double v) {
    return static_cast<std::size_t>(
        std::lower_bound(risks.begin(), risks.end(), v) - risks.begin());
  };

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].time > records[b].time;
  });

  // Walk from the longest time down. Everyone already inserted outlived the
  // current group, so each event in the group pairs with all of them.
  Fenwick later(risks.size());
  std::int64_t inserted = 0;
  double concordant = 0.0;
  double comparable = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && records[order[j]].time == records[order[i]].time) {
      ++j;
    }
    for (std::size_t k = i; k < j; ++k) {
      const SurvivalRecord& r = records[order[k]];
      if (!r.event) continue;
      const std::size_t rk = rank(r.risk_score);
      const std::int64_t lower = later.prefix(rk);
      const std::int64_t tied = later.prefix(rk + 1) - lower;
      concordant += static_cast<double>(lower) + 0.5 * static_cast<double>(tied);
      comparable += static_cast<double>(inserted);
    }
    for (std::size_t k = i; k < j; ++k) {
      later.add(rank(records[order[k]].risk_score));
      ++inserted;
    }
    i = j;
  }
  if (comparable == 0.0) {
    Fail(ErrorKind::kUndefinedMetric, "c-index has no comparable pairs");
  }
  return concordant / comparable;
}

KMCurve kaplan_meier(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) Fail(ErrorKind::kArgument, "Kaplan-Meier of no records");
  std::map<double, std::pair<int, int>> at;  // time -> (events, censored)
  for (const auto& r : records) {
    auto& slot = at[r.time];
    (r.event ? slot.first : slot.second)++;
  }
  KMCurve km;
  int n = static_cast<int>(records.size());
  double s = 1.0;
  for (const auto& [t, counts] : at) {
    const auto [d, c] = counts;
    s *= 1.0 - static_cast<double>(d) / n;
    km.times.push_back(t);
    km.survival.push_back(s);
    km.at_risk.push_back(n);
    km.events.push_back(d);
    km.censored.push_back(c);
    n -= d + c;
  }
  return km;
}

std::string KmToCsv(const KMCurve& curve) {
  std::string out = "time,survival,at_risk,censored\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%d,%d\n", curve.times[i],
                  curve.survival[i], curve.at_risk[i], curve.censored[i]);
    out += buf;
  }
  return out;
}

double ChiSquareSurvival(double statistic, int df) {
  if (df < 1) Fail(ErrorKind::kArgument, "chi-square needs df >= 1");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

TestResult log_rank_test(const std::vector<std::vector<SurvivalRecord>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) Fail(ErrorKind::kArgument, "log-rank needs at least two groups");
  std::set<double> event_times;
  for (std::size_t g = 0; g < k; ++g) {
    if (groups[g].empty()) {
      Fail(ErrorKind::kArgument, "log-rank group " + std::to_string(g) + " is empty");
    }
    for (const auto& r : groups[g]) {
      if (r.event) event_times.insert(r.time);
    }
  }
  if (event_times.empty()) {
    Fail(ErrorKind::kUndefinedMetric, "log-rank needs at least one event");
  }

  const auto m = static_cast<Eigen::Index>(k - 1);
  Eigen::VectorXd o_minus_e = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> n_g(k);
  std::vector<double> d_g(k);
  for (double t : event_times) {
    double n = 0.0;
    double d = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
      n_g[g] = 0.0;
      d_g[g] = 0.0;
      for (const auto& r : groups[g]) {
        if (r.time >= t) n_g[g] += 1.0;
        if (r.time == t && r.event) d_g[g] += 1.0;
      }
      n += n_g[g];
      d += d_g[g];
    }
    const double spread = n > 1.0 ? d * (n - d) / (n - 1.0) : 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      o_minus_e(a) += d_g[a] - d * n_g[a] / n;
      for (Eigen::Index b = 0; b < m; ++b) {
        const double delta = a == b ? 1.0 : 0.0;
        v(a, b) += spread * (n_g[a] / n) * (delta - n_g[b] / n);
      }
    }
  }
  TestResult r;
  r.df = static_cast<int>(m);
  r.statistic =
      o_minus_e.dot(v.completeOrthogonalDecomposition().solve(o_minus_e));
  r.p = ChiSquareSurvival(r.statistic, r.df);
  return r;
}

CoxDesign MakeCoxDesign(const std::vector<SurvivalRecord>& records,
                        const std::string& reference) {
  std::set<std::string> levels;
  for (const auto& r : records) {
    if (!r.group) Fail(ErrorKind::kArgument, r.patient_id + " has no group");
    levels.insert(*r.group);
  }
  if (!levels.count(reference)) {
    Fail(ErrorKind::kArgument, "reference level " + reference + " not present");
  }
  if (levels.size() < 2) {
    Fail(ErrorKind::kArgument, "covariate is constant");
  }
  CoxDesign d;
  d.reference = reference;
  for (const auto& l : levels) {
    if (l != reference) d.levels.push_back(l);
  }
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()),
                              static_cast<Eigen::Index>(d.levels.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = std::find(d.levels.begin(), d.levels.end(), *records[i].group);
    if (it != d.levels.end()) {
      d.x(static_cast<Eigen::Index>(i), it - d.levels.begin()) = 1.0;
    }
    d.times.push_back(records[i].time);
    d.events.push_back(records[i].event);
  }
  return d;
}

CoxEvaluation EvaluateCox(const CoxDesign& design, const Eigen::VectorXd& beta) {
  const Eigen::Index p = beta.size();
  const std::size_t n = design.times.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return design.times[a] > design.times[b];
  });
  const Eigen::VectorXd eta = design.x * beta;

  CoxEvaluation ev;
  ev.score = Eigen::VectorXd::Zero(p);
  ev.information = Eigen::MatrixXd::Zero(p, p);
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    const double t = design.times[order[i]];
    // Grow the risk set by everyone failing or censored at t first.
    for (; j < n && design.times[order[j]] == t; ++j) {
      const auto row = static_cast<Eigen::Index>(order[j]);
      const double w = std::exp(eta(row));
      const Eigen::VectorXd xi = design.x.row(row).transpose();
      s0 += w;
      s1 += w * xi;
      s2 += w * xi * xi.transpose();
    }
    double deaths = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      if (!design.events[order[k]]) continue;
      const auto row = static_cast<Eigen::Index>(order[k]);
      deaths += 1.0;
      ev.log_likelihood += eta(row);
      ev.score += design.x.row(row).transpose();
    }
    if (deaths > 0.0) {
      const Eigen::VectorXd mean = s1 / s0;
      ev.log_likelihood -= deaths * std::log(s0);
      ev.score -= deaths * mean;
      ev.information += deaths * (s2 / s0 - mean * mean.transpose());
    }
    i = j;
  }
  return ev;
}

namespace {

constexpr double kMaxAbsBeta = 20.0;
constexpr int kMaxIterations = 50;

void CheckEvents(const CoxDesign& d) {
  if (std::none_of(d.events.begin(), d.events.end(), [](bool e) { return e; })) {
    Fail(ErrorKind::kUndefinedMetric, "Cox model needs at least one event");
  }
}

}  // namespace

CoxFit cox_ph_fit(const std::vector<SurvivalRecord>& records,
                  const std::string& reference) {
  const CoxDesign design = MakeCoxDesign(records, reference);
  CheckEvents(design);
  const auto p = static_cast<Eigen::Index>(design.levels.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxEvaluation ev = EvaluateCox(design, beta);
  CoxFit fit;
  fit.reference = reference;
  for (; fit.iterations < kMaxIterations; ++fit.iterations) {
    if (ev.score.cwiseAbs().maxCoeff() < 1e-9) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step = ev.information.ldlt().solve(ev.score);
    Eigen::VectorXd next = beta + step;
    CoxEvaluation next_ev = EvaluateCox(design, next);
    for (int halve = 0;
         halve < 30 && !(next_ev.log_likelihood >= ev.log_likelihood); ++halve) {
      next = beta + step * std::ldexp(1.0, -(halve + 1));
      next_ev = EvaluateCox(design, next);
    }
    beta = next;
    ev = std::move(next_ev);
    for (Eigen::Index a = 0; a < p; ++a) {
      if (std::abs(beta(a)) > kMaxAbsBeta || !std::isfinite(beta(a))) {
        Fail(ErrorKind::kDivergence,
             "Cox fit diverges for level " + design.levels[a] +
                 " (monotone likelihood)");
      }
    }
  }
  if (!fit.converged && ev.score.cwiseAbs().maxCoeff() < 1e-9) {
    fit.converged = true;
  }
  fit.log_likelihood = ev.log_likelihood;
  const Eigen::MatrixXd cov = ev.information.inverse();
  for (Eigen::Index a = 0; a < p; ++a) {
    CoxTerm t;
    t.level = design.levels[a];
    t.beta = beta(a);
    t.se = std::sqrt(cov(a, a));
    t.hazard_ratio = std::exp(t.beta);
    t.ci_low = std::exp(t.beta - 1.96 * t.se);
    t.ci_high = std::exp(t.beta + 1.96 * t.se);
    t.wald_p = std::erfc(std::abs(t.beta / t.se) / std::sqrt(2.0));
    fit.terms.push_back(t);
  }
  return fit;
}

double cox_score_test(const std::vector<SurvivalRecord>& records,
                      const std::string& reference) {
  const CoxDesign design = MakeCoxDesign(records, reference);
  CheckEvents(design);
  const CoxEvaluation ev = EvaluateCox(
      design, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(design.levels.size())));
  return ev.score.dot(
      ev.information.completeOrthogonalDecomposition().solve(ev.score));
}

ChiSquareResult chi_square_test(
    const std::vector<std::vector<std::int64_t>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = rows ? table[0].size() : 0;
  if (rows < 2 || cols < 2) Fail(ErrorKind::kArgument, "table must be at least 2x2");
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) Fail(ErrorKind::kArgument, "ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      if (table[i][j] < 0) Fail(ErrorKind::kArgument, "negative count");
      row_sum[i] += static_cast<double>(table[i][j]);
      col_sum[j] += static_cast<double>(table[i][j]);
      total += static_cast<double>(table[i][j]);
    }
  }
  for (double m : row_sum) {
    if (m == 0.0) Fail(ErrorKind::kArgument, "zero row marginal");
  }
  for (double m : col_sum) {
    if (m == 0.0) Fail(ErrorKind::kArgument, "zero column marginal");
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = static_cast<double>(table[i][j]) - expected;
      r.statistic += diff * diff / expected;
      if (expected < 5.0) r.low_expected = true;
    }
  }
  r.df = static_cast<int>((rows - 1) * (cols - 1));
  r.p = ChiSquareSurvival(r.statistic, r.df);
  return r;
}

namespace {

double LogChoose(std::int64_t n, std::int64_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

std::uint64_t Choose(std::uint64_t n, std::uint64_t k) {
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

double fisher_exact_2x2(const std::array<std::array<std::int64_t, 2>, 2>& t) {
  for (const auto& row : t) {
    for (std::int64_t v : row) {
      if (v < 0) Fail(ErrorKind::kArgument, "negative count");
    }
  }
  const std::int64_t r1 = t[0][0] + t[0][1];
  const std::int64_t r2 = t[1][0] + t[1][1];
  const std::int64_t c1 = t[0][0] + t[1][0];
  const std::int64_t c2 = t[0][1] + t[1][1];
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    Fail(ErrorKind::kArgument, "Fisher test needs positive margins");
  }
  const std::int64_t n = r1 + r2;
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);

  // Small tables use exact integer hypergeometric weights; every weight is
  // bounded by C(n, c1), which fits in 64 bits for n <= 62.
  if (n <= 62) {
    auto weight = [&](std::int64_t k) {
      return Choose(r1, k) * Choose(r2, c1 - k);
    };
    const std::uint64_t observed = weight(t[0][0]);
    std::uint64_t tail = 0;
    for (std::int64_t k = lo; k <= hi; ++k) {
      const std::uint64_t w = weight(k);
      if (w <= observed) tail += w;
    }
    return static_cast<double>(tail) / static_cast<double>(Choose(n, c1));
  }
  const double log_total = LogChoose(n, c1);
  auto prob = [&](std::int64_t k) {
    return std::exp(LogChoose(r1, k) + LogChoose(r2, c1 - k) - log_total);
  };
  const double observed = prob(t[0][0]);
  double p = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const double pk = prob(k);
    if (pk <= observed * (1.0 + 1e-12)) p += pk;
  }
  return std::min(1.0, p);
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string f;
  std::stringstream ss(line);
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseDouble(const std::string& s, int line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    Fail(ErrorKind::kParse,
         "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<CohortEntry> CohortFromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "patient_id,time_months,event,score") {
    Fail(ErrorKind::kParse, "cohort CSV must start with "
                            "'patient_id,time_months,event,score'");
  }
  std::vector<CohortEntry> out;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    if (f.size() != 4) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    CohortEntry e;
    e.patient_id = f[0];
    e.time_months = ParseDouble(f[1], line_no);
    if (!(e.time_months > 0.0)) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": time must be > 0");
    }
    if (f[2] != "0" && f[2] != "1") {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": event must be 0 or 1");
    }
    e.event = f[2] == "1";
    if (!f[3].empty()) e.score = ParseDouble(f[3], line_no);
    out.push_back(std::move(e));
  }
  return out;
}

std::string CohortToCsv(const std::vector<CohortEntry>& cohort) {
  std::string out = "patient_id,time_months,event,score\n";
  char buf[64];
  for (const CohortEntry& e : cohort) {
    std::snprintf(buf, sizeof(buf), "%.10g", e.time_months);
    out += e.patient_id + "," + buf + "," + (e.event ? "1" : "0") + ",";
    if (e.score) {
      std::snprintf(buf, sizeof(buf), "%.10g", *e.score);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<SurvivalRecord> RecordsFromScores(
    const std::vector<CohortEntry>& cohort) {
  std::vector<SurvivalRecord> out;
  for (const CohortEntry& e : cohort) {
    if (!e.score) Fail(ErrorKind::kArgument, e.patient_id + " has no score");
    out.push_back({e.patient_id, e.time_months, e.event, -*e.score, std::nullopt});
  }
  return out;
}

}  // namespace tilscore
