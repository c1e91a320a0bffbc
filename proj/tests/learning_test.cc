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

#include "cgp/learning.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cgp/errors.h"
#include "cgp/optimize.h"
#include "cgp/simulator.h"
#include "gtest/gtest.h"

namespace cgp {
namespace {

Dataset SmallSimDataset(int n, uint64_t seed) {
  return SimulateRegime(DefaultSimConfig(), Policy::PiA(), n, seed).dataset;
}

// ICU-like traces: quadratic drift plus noise, with two action types.
Dataset SmallIcuDataset(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Trace> traces;
  for (int i = 0; i < n; ++i) {
    Trace t;
    t.id = "icu" + std::to_string(i);
    t.tau = 48;
    const double slope = 0.02 * z(rng);
    for (double s = 0.5; s < 48; s += 2.0 + u(rng)) {
      Event e{s, slope * s + 0.1 * z(rng), std::nullopt};
      if (u(rng) < 0.1) e.a = u(rng) < 0.5 ? "IHD" : "CVVH";
      t.events.push_back(e);
    }
    traces.push_back(t);
  }
  return MakeDataset(std::move(traces));
}

FitConfig SmallConfig(int k) {
  FitConfig c;
  c.n_components = k;
  c.restarts = 1;
  c.max_iter = 100;
  return c;
}

std::vector<double> RandomTheta(int n, uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, scale);
  std::vector<double> x(n);
  for (double& v : x) v = z(rng);
  return x;
}

TEST(MixtureParameterization, TiedLayoutSharesIndices) {
  FitConfig c = SmallConfig(3);
  const GPComponent proto = FamilyPrototype(c, {"tx"}, true);
  MixtureParameterization tied(std::vector<GPComponent>(3, proto), true, true);
  MixtureParameterization free(std::vector<GPComponent>(3, proto), false, false);
  // 2 logits + (3 kernel + 1 effect) shared + 3 x 5 spline coefficients.
  EXPECT_EQ(tied.size(), 2 + 4 + 15);
  EXPECT_EQ(free.size(), 2 + 3 * (5 + 3 + 1));
  for (int j = 5; j < 9; ++j) {
    EXPECT_EQ(tied.LocalToGlobal(0)[j], tied.LocalToGlobal(2)[j]);
    EXPECT_NE(free.LocalToGlobal(0)[j], free.LocalToGlobal(2)[j]);
  }
}

TEST(MixtureParameterization, PackUnpackRoundTrip) {
  const GPComponent proto = FamilyPrototype(SmallConfig(2), {"IHD"}, true);
  for (bool share : {true, false}) {
    MixtureParameterization p(std::vector<GPComponent>(2, proto), share, share);
    const std::vector<double> theta = RandomTheta(p.size(), 9);
    const MixtureModel m = p.Unpack(theta);
    ValidateModel(m);
    const std::vector<double> back = p.Pack(m);
    ASSERT_EQ(back.size(), theta.size());
    for (size_t i = 0; i < theta.size(); ++i) EXPECT_NEAR(back[i], theta[i], 1e-12);
  }
}

TEST(MixtureObjective, MatchesMixtureLogLikelihood) {
  const Dataset d = SmallSimDataset(15, 3);
  const GPComponent proto = FamilyPrototype(SmallConfig(3), d.action_vocabulary, true);
  MixtureParameterization p(std::vector<GPComponent>(3, proto), true, true);
  const MixtureObjective obj(d, p);
  const std::vector<double> theta = RandomTheta(p.size(), 4);
  const MixtureModel m = p.Unpack(theta);
  double expect = 0.0;
  for (const Trace& t : d.traces) expect += MixtureLogLikelihood(m, t);
  EXPECT_NEAR(obj.LogLikelihood(theta), expect, 1e-9 * std::abs(expect));
  std::vector<double> g(p.size());
  EXPECT_NEAR(obj.LogLikelihoodGradient(theta, g), expect, 1e-9 * std::abs(expect));
}

void ExpectGradientMatches(const Dataset& d, FitConfig c, bool share,
                           uint64_t seed, double perturb = 0.1) {
  const GPComponent proto = FamilyPrototype(c, d.action_vocabulary, true);
  MixtureParameterization p(std::vector<GPComponent>(c.n_components, proto),
                            share, share);
  const MixtureObjective obj(d, p);
  std::vector<double> theta = p.Pack(InitialModel(d, c, true));
  const std::vector<double> jitter = RandomTheta(p.size(), seed, perturb);
  for (size_t i = 0; i < theta.size(); ++i) theta[i] += jitter[i];
  std::vector<double> g(p.size());
  obj.LogLikelihoodGradient(theta, g);
  // Stiff directions make any single step size unreliable, so each
  // coordinate is compared against the closest of several difference steps.
  std::vector<std::vector<double>> fd;
  for (double h : {1e-4, 1e-5, 1e-6}) {
    fd.push_back(NumericalGradient(
        [&](std::span<const double> x) { return obj.LogLikelihood(x); }, theta,
        h));
  }
  double scale = 0.0;
  for (double v : fd[1]) scale = std::max(scale, std::abs(v));
  for (size_t i = 0; i < g.size(); ++i) {
    double err = std::numeric_limits<double>::infinity();
    for (const auto& f : fd) {
      err = std::min(err, std::abs(g[i] - f[i]) /
                              std::max(std::abs(f[i]), 1e-3 * scale));
    }
    EXPECT_LT(err, 1e-4) << "coordinate " << i << " analytic " << g[i]
                         << " numeric " << fd[1][i];
  }
}

TEST(MixtureObjective, GradientMatchesFiniteDifferencesSpline) {
  const Dataset d = SmallSimDataset(12, 21);
  ExpectGradientMatches(d, SmallConfig(3), true, 1);
  ExpectGradientMatches(d, SmallConfig(2), false, 2);
}

TEST(MixtureObjective, GradientMatchesFiniteDifferencesIou) {
  const Dataset d = SmallIcuDataset(8, 5);
  FitConfig c = SmallConfig(2);
  c.family = OutcomeFamily::kIouPoly;
  ExpectGradientMatches(d, c, false, 3, 0.02);
  ExpectGradientMatches(d, c, true, 4, 0.02);
}

TEST(MixtureObjective, ThreadCountDoesNotChangeResult) {
  const Dataset d = SmallSimDataset(30, 8);
  const GPComponent proto = FamilyPrototype(SmallConfig(3), d.action_vocabulary, true);
  MixtureParameterization p(std::vector<GPComponent>(3, proto), true, true);
  const std::vector<double> theta = RandomTheta(p.size(), 5);
  std::vector<double> g1(p.size()), g4(p.size());
  const double v1 = MixtureObjective(d, p, 1).LogLikelihoodGradient(theta, g1);
  const double v4 = MixtureObjective(d, p, 4).LogLikelihoodGradient(theta, g4);
  EXPECT_EQ(v1, v4);
  EXPECT_EQ(g1, g4);
}

TEST(MixtureObjective, RejectsTraceWithoutOutcomes) {
  Dataset d = SmallSimDataset(5, 1);
  d.traces[2].events = {Event{1.0, std::nullopt, "tx"}};
  EXPECT_THROW(FitCgp(d, SmallConfig(1)), DomainError);
}

TEST(InitParameters, TooFewTracesIsAnError) {
  const Dataset d = SmallSimDataset(2, 1);
  EXPECT_THROW(InitParameters(d, SmallConfig(3), 0), ConfigError);
}

TEST(InitParameters, RandomLogNormalUsesIdentitySigma) {
  const Dataset d = SmallIcuDataset(6, 2);
  FitConfig c = SmallConfig(2);
  c.family = OutcomeFamily::kIouPoly;
  c.init_strategy = InitStrategy::kRandomLogNormal;
  const MixtureModel m = InitialModel(d, c, true);
  for (const GPComponent& comp : m.components) {
    const auto& terms = std::get<SumKernel>(comp.kernel.v).terms;
    EXPECT_EQ(std::get<QuadPoly>(terms[0].v).sigma, Eigen::Matrix3d::Identity());
    const IOU iou = std::get<IOU>(terms[1].v);
    EXPECT_GT(iou.alpha, 0.5);
    EXPECT_LT(iou.alpha, 2.0);
  }
  EXPECT_EQ(InitParameters(d, c, 1), InitParameters(d, c, 1));
  FitConfig other = c;
  other.seed = 1;
  EXPECT_NE(InitParameters(d, c, 1), InitParameters(d, other, 1));
}

TEST(InitParameters, SplineFitsRecoverSharedCurve) {
  const std::vector<double> truth = {0.4, -0.2, 0.1, 0.3, -0.5};
  const BSplineMean spline = ClampedCubicSpline(0, 24, truth);
  std::vector<Trace> traces;
  for (int i = 0; i < 4; ++i) {
    Trace t;
    t.id = std::to_string(i);
    for (double s = 0.25 * i; s < 24; s += 1.0) {
      t.events.push_back({s, MeanEval(spline, s), std::nullopt});
    }
    traces.push_back(t);
  }
  const auto coeffs = TraceSplineCoefficients(MakeDataset(traces), 0, 24);
  for (const auto& c : coeffs) {
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(c[j], truth[j], 1e-6);
  }
}

TEST(KMeans, SeparatesClustersDeterministically) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 0.1);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 60; ++i) {
    const double c = (i % 3) * 5.0;
    pts.push_back({c + z(rng), -c + z(rng)});
  }
  std::vector<int> a1, a2;
  const auto c1 = KMeans(pts, 3, 7, &a1);
  const auto c2 = KMeans(pts, 3, 7, &a2);
  EXPECT_EQ(c1, c2);
  EXPECT_EQ(a1, a2);
  for (int i = 3; i < 60; ++i) EXPECT_EQ(a1[i], a1[i % 3]);
  EXPECT_NE(a1[0], a1[1]);
  EXPECT_NE(a1[1], a1[2]);
  EXPECT_NE(a1[0], a1[2]);
}

TEST(FitCgp, SmallFitConvergesAndReportsLikelihood) {
  const Dataset d = SmallSimDataset(40, 6);
  const FitResult r = FitCgp(d, SmallConfig(1));
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.restarts.size(), 1u);
  double ll = 0.0;
  for (const Trace& t : d.traces) ll += MixtureLogLikelihood(r.model, t);
  EXPECT_NEAR(r.final_objective, ll, 1e-6 * std::abs(ll));
  EXPECT_EQ(r.model.components[0].response.size(), 1u);
}

TEST(FitCgp, RestartsPickTheBestObjective) {
  const Dataset d = SmallSimDataset(30, 12);
  FitConfig c = SmallConfig(2);
  c.restarts = 3;
  c.init_strategy = InitStrategy::kRandomLogNormal;
  const FitResult r = FitCgp(d, c);
  ASSERT_EQ(r.restarts.size(), 3u);
  for (const auto& d : r.restarts) {
    if (d.ok) EXPECT_LE(d.objective, r.final_objective);
  }
  EXPECT_EQ(r.restarts[r.restart_index].objective, r.final_objective);
}

TEST(FitBaseline, HasNoResponseTerms) {
  const Dataset d = SmallSimDataset(20, 6);
  const FitResult r = FitBaseline(d, SmallConfig(2));
  for (const auto& c : r.model.components) EXPECT_TRUE(c.response.empty());
}

TEST(FitCgp, AllRestartsFailingIsReported) {
  Dataset d = SmallSimDataset(6, 6);
  for (Event& e : d.traces[0].events) e.y = 1e300;
  FitConfig c = SmallConfig(1);
  c.restarts = 2;
  try {
    FitCgp(d, c);
    FAIL() << "expected an optimization error";
  } catch (const OptimizationError& e) {
    EXPECT_NE(std::string(e.what()).find("[1]"), std::string::npos);
  }
}

TEST(FitConfig, Validation) {
  FitConfig c;
  c.restarts = 0;
  EXPECT_THROW(ValidateFitConfig(c), ConfigError);
  c = FitConfig{};
  c.n_components = 0;
  EXPECT_THROW(ValidateFitConfig(c), ConfigError);
  EXPECT_EQ(InitStrategyFromName("random_lognormal"), InitStrategy::kRandomLogNormal);
  EXPECT_THROW(InitStrategyFromName("em"), ConfigError);
  EXPECT_EQ(OutcomeFamilyFromName(OutcomeFamilyName(OutcomeFamily::kIouPoly)),
            OutcomeFamily::kIouPoly);
}

TEST(EventActionModel, RateIsEventsPerHour) {
  const Dataset d = SmallSimDataset(50, 3);
  size_t events = 0;
  double horizon = 0.0;
  for (const Trace& t : d.traces) {
    events += t.events.size();
    horizon += t.tau;
  }
  const EventActionModel m = FitEventActionModel(d);
  EXPECT_DOUBLE_EQ(m.lambda, events / horizon);
}

TEST(EventActionModel, AllTreatedIsClipped) {
  Dataset d = SmallSimDataset(10, 3);
  for (Trace& t : d.traces) {
    for (Event& e : t.events) e.a = "tx";
  }
  const EventActionModel m = FitEventActionModel(d);
  EXPECT_LE(std::abs(m.action_weight), 20.0);
  EXPECT_LE(std::abs(m.action_bias), 20.0);
  EXPECT_TRUE(std::isfinite(m.action_bias));
  EXPECT_GT(m.action_bias + m.action_weight * 0.3, 5.0);
}

TEST(EventActionModel, NoEventsIsDegenerate) {
  Dataset d;
  d.traces.push_back(Trace{"empty", 24, {}});
  EXPECT_THROW(FitEventActionModel(d), DomainError);
}

TEST(EventActionModel, RecentFeatureAveragesWindow) {
  Trace t{"f", 24, {{1.0, 1.0, std::nullopt},
                    {2.5, 3.0, std::nullopt},
                    {3.0, std::nullopt, "tx"},
                    {6.0, std::nullopt, "tx"}}};
  const auto f = RecentOutcomeFeature(t, 2.0);
  EXPECT_DOUBLE_EQ(*f[0], 1.0);
  EXPECT_DOUBLE_EQ(*f[1], 2.0);
  EXPECT_DOUBLE_EQ(*f[2], 3.0);
  EXPECT_FALSE(f[3].has_value());
}

TEST(AdjustedObjective, TermsAssembleAndRateIsStationary) {
  const Dataset d = SmallSimDataset(30, 9);
  const MixtureModel m = GenerativeModel(DefaultSimConfig());
  const EventActionModel eam = FitEventActionModel(d);
  const AdjustedObjective o = EvaluateAdjustedObjective(m, eam, d);
  EXPECT_EQ(o.total,
            o.outcome_term + o.event_term + o.action_term - o.integral_term);
  auto rate_part = [&](double lambda) {
    EventActionModel e = eam;
    e.lambda = lambda;
    const AdjustedObjective x = EvaluateAdjustedObjective(m, e, d);
    return x.event_term - x.integral_term;
  };
  EXPECT_GT(rate_part(eam.lambda), rate_part(eam.lambda * 1.02));
  EXPECT_GT(rate_part(eam.lambda), rate_part(eam.lambda * 0.98));
}

}  // namespace
}  // namespace cgp
