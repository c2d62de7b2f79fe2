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
#include <cmath>
#include <set>

#include "test_support.hpp"
#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"
#include "tilscore/survival.hpp"

namespace tilscore {
namespace {

using testing::KindOf;

std::vector<SurvivalRecord> Records(const std::vector<double>& times,
                                    const std::vector<int>& events,
                                    const std::vector<double>& risks = {}) {
  std::vector<SurvivalRecord> r;
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.push_back({"p" + std::to_string(i), times[i], events[i] != 0,
                 risks.empty() ? 0.0 : risks[i], std::nullopt});
  }
  return r;
}

std::vector<SurvivalRecord> Grouped(const std::vector<double>& times,
                                    const std::vector<int>& events,
                                    const std::vector<std::string>& groups) {
  auto r = Records(times, events);
  for (std::size_t i = 0; i < r.size(); ++i) r[i].group = groups[i];
  return r;
}

TEST(Quartiles, OneToEight) {
  const auto q = quantize_quartiles({1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_DOUBLE_EQ(q.c25, 2.75);
  EXPECT_DOUBLE_EQ(q.c50, 4.5);
  EXPECT_DOUBLE_EQ(q.c75, 6.25);
  EXPECT_EQ(q.groups, (std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4}));
  EXPECT_EQ(quantize_quartiles({5, 5, 5, 5, 5}).groups, (std::vector<int>(5, 1)));
  EXPECT_EQ(KindOf([] { quantize_quartiles({1, 2, 3}); }), ErrorKind::kArgument);
}

TEST(Quartiles, MonotoneAndPartitioning) {
  Pcg32 rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(4 + rng.bounded(60));
    for (double& v : s) v = 1000 * rng.uniform();
    const auto q = quantize_quartiles(s);
    std::set<int> used(q.groups.begin(), q.groups.end());
    EXPECT_EQ(used, (std::set<int>{1, 2, 3, 4}));
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[i] <= s[j]) EXPECT_LE(q.groups[i], q.groups[j]);
      }
    }
  }
}

// Pairs with distinct times where the earlier one is an event.
double CIndexOracle(const std::vector<SurvivalRecord>& r) {
  double num = 0;
  double den = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!(r[i].time < r[j].time) || !r[i].event) continue;
      den += 1;
      if (r[i].risk_score > r[j].risk_score) num += 1;
      if (r[i].risk_score == r[j].risk_score) num += 0.5;
    }
  }
  return num / den;
}

TEST(ConcordanceIndex, WorkedExamples) {
  EXPECT_DOUBLE_EQ(concordance_index(Records({1, 2, 3}, {1, 1, 1}, {3, 2, 1})), 1.0);
  EXPECT_DOUBLE_EQ(concordance_index(Records({2, 4, 6}, {1, 0, 1}, {5, 5, 1})), 0.75);
  EXPECT_EQ(KindOf([] { concordance_index(Records({1, 2}, {0, 0}, {1, 2})); }),
            ErrorKind::kUndefinedMetric);
}

TEST(ConcordanceIndex, EqualsPairEnumerationWithTiesAndCensoring) {
  Pcg32 rng(12);
  int checked = 0;
  while (checked < 500) {
    const int n = 2 + static_cast<int>(rng.bounded(49));
    std::vector<SurvivalRecord> r(n);
    for (auto& x : r) {
      x.time = 1 + rng.bounded(15);         // many tied times
      x.event = rng.uniform() < 0.6;
      x.risk_score = rng.bounded(8) * 0.5;  // many tied risks
    }
    bool any = false;
    for (const auto& a : r) {
      for (const auto& b : r) any = any || (a.event && a.time < b.time);
    }
    if (!any) continue;
    const double c = concordance_index(r);
    EXPECT_NEAR(c, CIndexOracle(r), 1e-12);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    ++checked;
  }
}

TEST(ConcordanceIndex, NegatingTieFreeRisksGivesComplement) {
  Pcg32 rng(13);
  for (int t = 0; t < 100; ++t) {
    std::vector<SurvivalRecord> r(30);
    for (auto& x : r) {
      x.time = 1 + 100 * rng.uniform();
      x.event = rng.uniform() < 0.7;
      x.risk_score = rng.uniform();
    }
    r[0].event = true;
    r[0].time = 0.5;
    const double c = concordance_index(r);
    for (auto& x : r) x.risk_score = -x.risk_score;
    EXPECT_NEAR(concordance_index(r), 1 - c, 1e-12);
  }
}

TEST(KaplanMeier, WorkedExamples) {
  const KMCurve km = kaplan_meier(Records({1, 2, 3}, {1, 1, 1}));
  ASSERT_EQ(km.survival.size(), 3u);
  EXPECT_NEAR(km.survival[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(km.survival[1], 1.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(km.survival[2], 0.0);
  EXPECT_EQ(km.at_risk, (std::vector<int>{3, 2, 1}));

  const KMCurve cens = kaplan_meier(Records({1, 4, 9}, {0, 0, 0}));
  for (double s : cens.survival) EXPECT_DOUBLE_EQ(s, 1.0);

  // Censored at an event time: still at risk there.
  const KMCurve mixed = kaplan_meier(Records({2, 2, 5, 7}, {1, 0, 1, 0}));
  EXPECT_EQ(mixed.at_risk[0], 4);
  EXPECT_DOUBLE_EQ(mixed.survival[0], 0.75);
  EXPECT_DOUBLE_EQ(mixed.survival[1], 0.375);
  EXPECT_EQ(KmToCsv(mixed).substr(0, 29), "time,survival,at_risk,censore");
}

TEST(KaplanMeier, StepFunctionProperties) {
  Pcg32 rng(14);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.bounded(40));
    std::vector<SurvivalRecord> r(n);
    const bool censoring = t % 2 == 0;
    for (auto& x : r) {
      x.time = 1 + rng.bounded(20);
      x.event = !censoring || rng.uniform() < 0.5;
    }
    const KMCurve km = kaplan_meier(r);
    double prev = 1.0;
    for (std::size_t i = 0; i < km.times.size(); ++i) {
      EXPECT_LE(km.survival[i], prev + 1e-15);
      EXPECT_GE(km.survival[i], 0.0);
      if (i > 0) EXPECT_LT(km.times[i - 1], km.times[i]);
      prev = km.survival[i];
      if (!censoring) {
        const auto alive = std::count_if(r.begin(), r.end(), [&](auto& x) {
          return x.time > km.times[i];
        });
        EXPECT_NEAR(km.survival[i], static_cast<double>(alive) / n, 1e-12);
      }
    }
  }
}

// Two-group log-rank from its textbook sums.
double LogRankOracle(const std::vector<SurvivalRecord>& a,
                     const std::vector<SurvivalRecord>& b) {
  std::set<double> times;
  for (const auto& r : a) if (r.event) times.insert(r.time);
  for (const auto& r : b) if (r.event) times.insert(r.time);
  double o_minus_e = 0;
  double var = 0;
  for (double t : times) {
    double n1 = 0, d1 = 0, n = 0, d = 0;
    for (const auto& r : a) {
      n1 += r.time >= t;
      d1 += r.time == t && r.event;
    }
    n = n1;
    d = d1;
    for (const auto& r : b) {
      n += r.time >= t;
      d += r.time == t && r.event;
    }
    o_minus_e += d1 - d * n1 / n;
    if (n > 1) var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1);
  }
  return o_minus_e * o_minus_e / var;
}

TEST(LogRank, WorkedExample) {
  const auto r = log_rank_test({Records({1, 2}, {1, 1}), Records({3, 4}, {1, 1})});
  EXPECT_NEAR(r.statistic, 2.882, 1e-3);
  EXPECT_NEAR(r.statistic, (7.0 / 6) * (7.0 / 6) / (17.0 / 36), 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p, 0.090, 1e-3);

  const auto same = log_rank_test({Records({1, 3, 5}, {1, 0, 1}), Records({1, 3, 5}, {1, 0, 1})});
  EXPECT_NEAR(same.statistic, 0.0, 1e-12);
  EXPECT_NEAR(same.p, 1.0, 1e-12);

  EXPECT_EQ(KindOf([] { log_rank_test({Records({1}, {1})}); }), ErrorKind::kArgument);
  EXPECT_EQ(KindOf([] { log_rank_test({Records({1}, {0}), Records({2}, {0})}); }),
            ErrorKind::kUndefinedMetric);
}

TEST(LogRank, MatchesTextbookSumsAndIgnoresGroupOrder) {
  Pcg32 rng(15);
  for (int t = 0; t < 200; ++t) {
    std::vector<SurvivalRecord> a(2 + rng.bounded(20)), b(2 + rng.bounded(20));
    for (auto* g : {&a, &b}) {
      for (auto& x : *g) {
        x.time = 1 + rng.bounded(12);
        x.event = rng.uniform() < 0.7;
      }
    }
    a[0].event = true;
    a[0].time = 1;
    b[0].time = 2;
    const auto ab = log_rank_test({a, b});
    const auto ba = log_rank_test({b, a});
    EXPECT_NEAR(ab.statistic, LogRankOracle(a, b), 1e-9 * (1 + ab.statistic));
    EXPECT_NEAR(ab.statistic, ba.statistic, 1e-9 * (1 + ab.statistic));
  }
  std::vector<std::vector<SurvivalRecord>> three = {
      Records({1, 4, 6}, {1, 1, 0}), Records({2, 3}, {1, 1}), Records({5, 7}, {1, 0})};
  const auto r3 = log_rank_test(three);
  std::swap(three[0], three[2]);
  EXPECT_EQ(r3.df, 2);
  EXPECT_NEAR(log_rank_test(three).statistic, r3.statistic, 1e-9);
}

TEST(ChiSquareSurvival, KnownQuantiles) {
  EXPECT_NEAR(ChiSquareSurvival(3.841458820694124, 1), 0.05, 1e-10);
  EXPECT_NEAR(ChiSquareSurvival(6.634896601021214, 1), 0.01, 1e-10);
  for (double x : {0.1, 1.0, 4.0, 13.0, 40.0}) {
    EXPECT_NEAR(ChiSquareSurvival(x, 2), std::exp(-x / 2), 1e-10);
    EXPECT_NEAR(ChiSquareSurvival(x, 4), std::exp(-x / 2) * (1 + x / 2), 1e-10);
  }
  EXPECT_DOUBLE_EQ(ChiSquareSurvival(0.0, 3), 1.0);
}

TEST(Cox, ClosedFormRoot) {
  const auto r = Grouped({1, 2, 3, 4}, {1, 1, 1, 1}, {"b", "a", "b", "a"});
  const CoxFit fit = cox_ph_fit(r, "a");
  ASSERT_EQ(fit.terms.size(), 1u);
  const double beta = std::log((1 + std::sqrt(17.0)) / 2);
  EXPECT_NEAR(fit.terms[0].beta, beta, 1e-6);
  EXPECT_NEAR(fit.terms[0].hazard_ratio, (1 + std::sqrt(17.0)) / 2, 1e-5);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.reference, "a");
  EXPECT_EQ(fit.terms[0].level, "b");
  const CoxTerm& t = fit.terms[0];
  EXPECT_NEAR(t.ci_low, std::exp(t.beta - 1.96 * t.se), 1e-9);
  EXPECT_NEAR(t.ci_high, std::exp(t.beta + 1.96 * t.se), 1e-9);
  EXPECT_LT(t.ci_low, t.hazard_ratio);
  EXPECT_GT(t.ci_high, t.hazard_ratio);
}

TEST(Cox, SeparationAndBadDesigns) {
  try {
    cox_ph_fit(Grouped({1, 2, 3, 4}, {1, 1, 1, 1}, {"b", "b", "a", "a"}), "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
    EXPECT_NE(std::string(e.what()).find('b'), std::string::npos);
  }
  EXPECT_EQ(KindOf([] { cox_ph_fit(Grouped({1, 2}, {1, 1}, {"a", "a"}), "a"); }),
            ErrorKind::kArgument);
  EXPECT_EQ(KindOf([] { cox_ph_fit(Records({1, 2}, {1, 1}), "a"); }), ErrorKind::kArgument);
}

TEST(Cox, DerivativesMatchFiniteDifferencesAtZero) {
  Pcg32 rng(16);
  const std::vector<std::string> levels = {"q1", "q2", "q3", "q4"};
  for (int t = 0; t < 50; ++t) {
    std::vector<SurvivalRecord> r(12 + rng.bounded(30));
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i].time = 1 + rng.bounded(20);
      r[i].event = rng.uniform() < 0.7;
      r[i].group = levels[i % 4];
    }
    r[0].event = true;
    const CoxDesign d = MakeCoxDesign(r, "q1");
    const int p = static_cast<int>(d.levels.size());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
    const CoxEvaluation at = EvaluateCox(d, zero);
    const double h = 1e-4;
    auto ll = [&](const Eigen::VectorXd& b) { return EvaluateCox(d, b).log_likelihood; };
    for (int i = 0; i < p; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
      e[i] = h;
      const double fd = (ll(e) - ll(-e)) / (2 * h);
      EXPECT_NEAR(at.score[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(p);
        f[j] = h;
        // Mixed second difference of the log-likelihood.
        const double fd2 = (ll(e + f) - ll(e - f) - ll(-e + f) + ll(-e - f)) / (4 * h * h);
        EXPECT_NEAR(at.information(i, j), -fd2, 1e-6 * std::max(1.0, std::abs(fd2)));
      }
    }
  }
}

TEST(Cox, ScoreTestEqualsLogRankWithoutTies) {
  Pcg32 rng(17);
  for (int t = 0; t < 100; ++t) {
    const int n = 4 + static_cast<int>(rng.bounded(40));
    std::vector<SurvivalRecord> all;
    std::vector<SurvivalRecord> a, b;
    for (int i = 0; i < n; ++i) {
      SurvivalRecord x{"p" + std::to_string(i), 1 + 100 * rng.uniform(),
                       rng.uniform() < 0.7, 0.0, i % 2 ? "t" : "c"};
      (i % 2 ? b : a).push_back(x);
      all.push_back(x);
    }
    all[0].event = a[0].event = true;
    const double lr = log_rank_test({a, b}).statistic;
    EXPECT_NEAR(cox_score_test(all, "c"), lr, 1e-6 * std::max(1.0, lr));
  }
}

TEST(ChiSquare, WorkedExamples) {
  const auto r = chi_square_test({{10, 20}, {20, 10}});
  EXPECT_NEAR(r.statistic, 20.0 / 3, 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p, 0.0098, 1e-4);
  EXPECT_FALSE(r.low_expected);
  const auto zero = chi_square_test({{10, 20}, {10, 20}});
  EXPECT_NEAR(zero.statistic, 0.0, 1e-12);
  EXPECT_NEAR(zero.p, 1.0, 1e-12);
  EXPECT_TRUE(chi_square_test({{2, 1}, {1, 2}}).low_expected);
  EXPECT_EQ(chi_square_test({{5, 6, 7}, {8, 9, 1}, {3, 3, 3}}).df, 4);
  EXPECT_EQ(KindOf([] { chi_square_test({{0, 0}, {1, 2}}); }), ErrorKind::kArgument);
}

TEST(Fisher, WorkedExamples) {
  EXPECT_NEAR(fisher_exact_2x2({{{3, 1}, {1, 3}}}), 34.0 / 70, 1e-12);
  EXPECT_NEAR(fisher_exact_2x2({{{0, 2}, {2, 0}}}), 2.0 / 6, 1e-12);
  EXPECT_NEAR(fisher_exact_2x2({{{1, 1}, {1, 1}}}), 1.0, 1e-12);
  EXPECT_EQ(KindOf([] { fisher_exact_2x2({{{0, 0}, {1, 2}}}); }), ErrorKind::kArgument);
}

// Two-sided p by enumerating every table with the observed margins.
double FisherOracle(const std::array<std::array<std::int64_t, 2>, 2>& t) {
  const std::int64_t r0 = t[0][0] + t[0][1];
  const std::int64_t r1 = t[1][0] + t[1][1];
  const std::int64_t c0 = t[0][0] + t[1][0];
  auto log_choose = [](double n, double k) {
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
  };
  auto prob = [&](std::int64_t a) {
    return std::exp(log_choose(r0, a) + log_choose(r1, c0 - a) - log_choose(r0 + r1, c0));
  };
  const double observed = prob(t[0][0]);
  double p = 0;
  for (std::int64_t a = std::max<std::int64_t>(0, c0 - r1); a <= std::min(r0, c0); ++a) {
    if (prob(a) <= observed * (1 + 1e-9)) p += prob(a);
  }
  return std::min(1.0, p);
}

TEST(Fisher, MatchesEnumerationOracle) {
  Pcg32 rng(19);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<std::array<std::int64_t, 2>, 2> t{};
    for (auto& row : t) {
      for (auto& v : row) v = rng.bounded(trial < 250 ? 12 : 60);
    }
    t[0][0] += 1;
    t[1][1] += 1;
    EXPECT_NEAR(fisher_exact_2x2(t), FisherOracle(t), 1e-9) << trial;
  }
}

// Uncorrected Pearson and Fisher p-values differ by up to about 0.12 when the
// smallest expected count is 20; at 500 the gap is a few hundredths.
TEST(Fisher, AgreesWithChiSquareOnLargeTables) {
  Pcg32 rng(18);
  int checked = 0;
  while (checked < 100) {
    std::array<std::array<std::int64_t, 2>, 2> t{};
    for (auto& row : t) {
      for (auto& v : row) v = 500 + rng.bounded(3500);
    }
    const auto chi = chi_square_test({{t[0][0], t[0][1]}, {t[1][0], t[1][1]}});
    const double n = static_cast<double>(t[0][0] + t[0][1] + t[1][0] + t[1][1]);
    bool big = true;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        big = big && (t[i][0] + t[i][1]) * (t[0][j] + t[1][j]) / n >= 500;
      }
    }
    if (!big) continue;
    EXPECT_NEAR(fisher_exact_2x2(t), chi.p, 0.05);
    ++checked;
  }
}

TEST(CohortCsv, RoundTripAndRiskDirection) {
  const std::vector<CohortEntry> c = {{"a", 12.5, true, 300.0}, {"b", 40, false, std::nullopt}};
  const std::string text = CohortToCsv(c);
  EXPECT_EQ(text, "patient_id,time_months,event,score\na,12.5,1,300\nb,40,0,\n");
  const auto back = CohortFromCsv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back[1].score.has_value());
  EXPECT_EQ(KindOf([&] { RecordsFromScores(back); }), ErrorKind::kArgument);
  EXPECT_DOUBLE_EQ(RecordsFromScores({c[0]})[0].risk_score, -300.0);
  EXPECT_EQ(KindOf([] { CohortFromCsv("patient_id,time_months,event,score\na,0,1,\n"); }),
            ErrorKind::kParse);
  EXPECT_EQ(KindOf([] { CohortFromCsv("patient_id,time_months,event,score\na,3,2,\n"); }),
            ErrorKind::kParse);
}

}  // namespace
}  // namespace tilscore
