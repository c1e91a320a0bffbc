/*
 * Copyright 2026 The CGP Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cgp/evaluation.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "cgp/errors.h"
#include "cgp/simulator.h"
#include "gtest/gtest.h"

namespace cgp {
namespace {

// Reference tau-b by enumerating all pairs.
std::optional<double> BruteTau(const std::vector<double>& x,
                               const std::vector<double>& y) {
  const size_t n = x.size();
  int64_t c = 0, d = 0, tx = 0, ty = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx == 0 || dy == 0) continue;
      ((dx > 0) == (dy > 0) ? c : d) += 1;
    }
  }
  const int64_t n0 = static_cast<int64_t>(n * (n - 1) / 2);
  if (n0 == tx || n0 == ty) return std::nullopt;
  return static_cast<double>(c - d) /
         std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

double BruteAuc(const std::vector<bool>& labels, const std::vector<double>& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!labels[i]) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

TEST(KendallTau, Examples) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(*KendallTau(x, x), 1.0);
  const std::vector<double> rev = {4, 3, 2, 1};
  EXPECT_EQ(*KendallTau(x, rev), -1.0);
  const std::vector<double> y = {1, 3, 2, 4};
  EXPECT_DOUBLE_EQ(*KendallTau(x, y), 2.0 / 3.0);
}

TEST(KendallTau, AllTiesIsUndefined) {
  const std::vector<double> x = {1, 2, 3};
  const std::vector<double> c = {5, 5, 5};
  EXPECT_FALSE(KendallTau(x, c).has_value());
  EXPECT_FALSE(KendallTau(c, x).has_value());
  EXPECT_THROW(KendallTau(x, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(KendallTau(std::vector<double>{1}, std::vector<double>{1}),
               ValidationError);
}

TEST(KendallTau, MatchesPairEnumeration) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 49);
    // Small integer ranges force ties in both vectors.
    const int range = 1 + static_cast<int>(rng() % 12);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % range);
      y[i] = rep % 2 ? static_cast<double>(rng() % range)
                     : std::normal_distribution<double>()(rng);
    }
    const auto fast = KendallTau(x, y);
    const auto brute = BruteTau(x, y);
    ASSERT_EQ(fast.has_value(), brute.has_value()) << "rep " << rep;
    if (fast) EXPECT_EQ(*fast, *brute) << "rep " << rep;
  }
}

TEST(KendallTau, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> x(40), y(40), ty(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = z(rng);
    y[i] = x[i] + z(rng);
    ty[i] = std::exp(3 * y[i]) + 1;
  }
  EXPECT_EQ(*KendallTau(x, y), *KendallTau(x, ty));
}

TEST(Auc, Examples) {
  EXPECT_EQ(Auc({true, true, false, false}, std::vector<double>{0.9, 0.8, 0.2, 0.1}), 1.0);
  EXPECT_EQ(Auc({true, false}, std::vector<double>{0.7, 0.7}), 0.5);
  EXPECT_THROW(Auc({true, true}, std::vector<double>{0.1, 0.2}), DomainError);
}

TEST(Auc, MatchesPairCounting) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 60);
    std::vector<bool> labels(n);
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = rng() % 2;
      s[i] = static_cast<double>(rng() % 7);
    }
    labels[0] = true;
    labels[1] = false;
    EXPECT_EQ(Auc(labels, s), BruteAuc(labels, s)) << "rep " << rep;
  }
}

TEST(Auc, IndependentScoresGiveHalf) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  const int n = 10000;
  std::vector<bool> labels(n);
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = u(rng) < 0.4;
    s[i] = u(rng);
  }
  EXPECT_NEAR(Auc(labels, s), 0.5, 0.02);
  std::vector<double> neg(n);
  for (int i = 0; i < n; ++i) neg[i] = -s[i];
  EXPECT_NEAR(Auc(labels, s) + Auc(labels, neg), 1.0, 1e-12);
}

TEST(RiskScores, NormalizationEndpointsAndDegenerateCohort) {
  const RiskScoreResult r = NormalizeRiskScores({-1.0, 1.0});
  EXPECT_EQ(r.scores, (std::vector<double>{0.0, 1.0}));
  EXPECT_FALSE(r.degenerate);
  const RiskScoreResult one = NormalizeRiskScores({0.3});
  EXPECT_EQ(one.scores, std::vector<double>{0.5});
  EXPECT_TRUE(one.degenerate);
  EXPECT_FALSE(one.warning.empty());
  EXPECT_THROW(NormalizeRiskScores({}), DomainError);
}

TEST(RiskScores, LowerPredictionMeansHigherScoreAndPermutes) {
  const SimConfig cfg = DefaultSimConfig();
  const MixtureModel m = GenerativeModel(cfg);
  const TestBundle b = MakeTestSet(cfg, Policy::PiA(), 12.0, 30, 3);
  const RiskScoreResult r = RiskScores(m, b.regime.dataset);
  for (size_t i = 0; i < r.scores.size(); ++i) {
    EXPECT_GE(r.scores[i], 0.0);
    EXPECT_LE(r.scores[i], 1.0);
    for (size_t j = 0; j < r.scores.size(); ++j) {
      if (r.raw[i] > r.raw[j]) EXPECT_GE(r.scores[i], r.scores[j]);
    }
  }
  Dataset reversed = b.regime.dataset;
  std::reverse(reversed.traces.begin(), reversed.traces.end());
  const RiskScoreResult rr = RiskScores(m, reversed);
  for (size_t i = 0; i < r.scores.size(); ++i) {
    EXPECT_EQ(rr.scores[r.scores.size() - 1 - i], r.scores[i]);
  }
}

GPComponent SplineComponent(double noise) {
  GPComponent c;
  c.mean = ClampedCubicSpline(0, 72, {0.2, -0.1, 0.4, 0.0, 0.3});
  c.kernel = Sum({Matern32{0.04, 8}, WhiteNoise{noise}});
  c.response_mode = ResponseMode::kSaturating;
  c.response["tx"] = SaturatingResponse{2.0, 0.5};
  return c;
}

TEST(MaeByHorizon, PerfectModelHasZeroError) {
  const GPComponent c = SplineComponent(0.1);
  MixtureModel m{{c}, {0.0}};
  Trace t{"p", 72, {}};
  for (double s = 0.5; s < 72; s += 1.5) {
    Event e{s, 0.0, std::nullopt};
    if (static_cast<int>(s) % 7 == 0) e.a = "tx";
    t.events.push_back(e);
  }
  // Place each outcome exactly on the component mean with its responses.
  const auto actions = ActionsOf(t);
  for (Event& e : t.events) {
    const double time[] = {e.t};
    e.y = ComponentMeanVector(c, time, actions)[0];
  }
  const double cut[] = {20.0};
  const HorizonMae mae = MaeByHorizon(m, {t}, cut);
  ASSERT_EQ(mae.mae.size(), 2u);
  EXPECT_NEAR(*mae.mae[0], 0.0, 1e-9);
  EXPECT_NEAR(*mae.mae[1], 0.0, 1e-9);
  EXPECT_GT(mae.counts[0], 0u);
}

TEST(MaeByHorizon, ZeroPredictorGivesConstantError) {
  GPComponent c;
  c.kernel = Sum({Matern32{1e-14, 5}, WhiteNoise{1.0}});
  MixtureModel m{{c}, {0.0}};
  Trace t{"c", 60, {}};
  for (double s = 1; s < 60; s += 2) t.events.push_back({s, -1.5, std::nullopt});
  const double cut[] = {10.0};
  const HorizonMae mae = MaeByHorizon(m, {t}, cut);
  EXPECT_NEAR(*mae.mae[0], 1.5, 1e-9);
  EXPECT_NEAR(*mae.mae[1], 1.5, 1e-9);
}

TEST(MaeByHorizon, EmptyBucketIsAbsent) {
  GPComponent c;
  c.kernel = Sum({Matern32{0.1, 5}, WhiteNoise{0.3}});
  MixtureModel m{{c}, {0.0}};
  Trace t{"short", 30, {{1, 0.2, std::nullopt}, {15, 0.1, std::nullopt}}};
  const double cut[] = {10.0};
  const HorizonMae mae = MaeByHorizon(m, {t}, cut);
  EXPECT_TRUE(mae.mae[0].has_value());
  EXPECT_FALSE(mae.mae[1].has_value());
  EXPECT_EQ(mae.counts[1], 0u);
}

TEST(PivotalBootstrap, ConstantDataHasZeroWidth) {
  const std::vector<double> d(50, 2.5);
  const BootstrapCI ci = PivotalBootstrapMean(d, 200, 0.95, 1);
  EXPECT_DOUBLE_EQ(ci.point, 2.5);
  EXPECT_DOUBLE_EQ(ci.lower, 2.5);
  EXPECT_DOUBLE_EQ(ci.upper, 2.5);
}

TEST(PivotalBootstrap, GaussianMeanWidthMatchesClt) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  std::vector<double> d(1000);
  for (double& v : d) v = z(rng);
  const BootstrapCI ci = PivotalBootstrapMean(d, 1000, 0.95, 7);
  const double expected = 2 * 1.96 / std::sqrt(1000.0);
  EXPECT_NEAR(ci.upper - ci.lower, expected, 0.2 * expected);
  EXPECT_LE(ci.lower, ci.point);
  EXPECT_GE(ci.upper, ci.point);
}

TEST(PivotalBootstrap, SeededAndThreadIndependent) {
  std::vector<double> d = {1, 4, 2, 8, 5, 7, 3, 3, 9, 0};
  auto mean = [&](const std::vector<size_t>& idx) {
    double s = 0;
    for (size_t i : idx) s += d[i];
    return s / idx.size();
  };
  const BootstrapCI a = PivotalBootstrap(mean, d.size(), 300, 0.9, 11, 1);
  const BootstrapCI b = PivotalBootstrap(mean, d.size(), 300, 0.9, 11, 3);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  const BootstrapCI c = PivotalBootstrap(mean, d.size(), 300, 0.9, 12, 1);
  EXPECT_NE(a.lower, c.lower);
}

TEST(PivotalBootstrap, NonFiniteStatisticIsAnError) {
  const IndexStatistic bad = [](const std::vector<size_t>& idx) {
    return idx[0] == 0 && idx[1] == 1 ? 1.0 : std::nan("");
  };
  EXPECT_THROW(PivotalBootstrap(bad, 5, 10), NumericalError);
  EXPECT_THROW(PivotalBootstrapMean(std::vector<double>{}, 10), DomainError);
}

TEST(StabilityReport, SelfComparisonAndIdChecks) {
  const SimConfig cfg = DefaultSimConfig();
  const MixtureModel m = GenerativeModel(cfg);
  const TestBundle b = MakeTestSet(cfg, Policy::PiA(), 12.0, 40, 5);
  std::map<std::string, bool> labels;
  for (size_t i = 0; i < b.labels.size(); ++i) {
    labels[b.regime.dataset.traces[i].id] = b.labels[i];
  }
  const RiskReport r =
      StabilityReport({{"CGP", {{"A", m}, {"B", m}}}}, b.regime.dataset, labels);
  EXPECT_EQ(r.Row("CGP", "B").delta_from_a, 0.0);
  EXPECT_EQ(*r.Row("CGP", "B").tau_from_a, 1.0);
  EXPECT_EQ(*r.Row("CGP", "A").auc, *r.Row("CGP", "B").auc);

  std::ostringstream csv, table;
  WriteRiskCsv(r, csv);
  WriteRiskTable(r, table);
  EXPECT_NE(csv.str().find("CGP,B,0.000,1.000,"), std::string::npos);
  EXPECT_NE(table.str().find("Delta from A"), std::string::npos);

  auto missing = labels;
  missing.erase(missing.begin());
  EXPECT_THROW(StabilityReport({{"CGP", {{"A", m}}}}, b.regime.dataset, missing),
               ValidationError);
  auto extra = labels;
  extra["stranger"] = true;
  EXPECT_THROW(StabilityReport({{"CGP", {{"A", m}}}}, b.regime.dataset, extra),
               ValidationError);
  EXPECT_THROW(StabilityReport({{"CGP", {{"B", m}}}}, b.regime.dataset, labels),
               ConfigError);
}

}  // namespace
}  // namespace cgp
