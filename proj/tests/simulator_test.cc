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

#include "cgp/simulator.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <vector>

#include "cgp/errors.h"
#include "cgp/learning.h"
#include "gtest/gtest.h"

namespace cgp {
namespace {

TEST(SampleMeasurementTimes, PoissonCountAndOrder) {
  std::mt19937_64 rng(3);
  const int reps = 2000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto times = SampleMeasurementTimes(1.0, 24.0, rng);
    total += static_cast<double>(times.size());
    for (size_t i = 0; i < times.size(); ++i) {
      ASSERT_GE(times[i], 0.0);
      ASSERT_LT(times[i], 24.0);
      if (i > 0) ASSERT_LE(times[i - 1], times[i]);
    }
  }
  // Count ~ Poisson(24); allow four standard errors.
  EXPECT_NEAR(total / reps, 24.0, 4.0 * std::sqrt(24.0 / reps));
}

TEST(SampleMeasurementTimes, ZeroHorizonIsEmpty) {
  std::mt19937_64 rng(1);
  EXPECT_TRUE(SampleMeasurementTimes(1.0, 0.0, rng).empty());
}

TEST(SimulateTrace, SameSeedSameTrace) {
  const SimConfig cfg = DefaultSimConfig();
  const SimTrace a = SimulateTrace(cfg, Policy::PiA(), 42, "x");
  const SimTrace b = SimulateTrace(cfg, Policy::PiA(), 42, "x");
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.grid_values, b.grid_values);
  const SimTrace c = SimulateTrace(cfg, Policy::PiA(), 43, "x");
  EXPECT_NE(a.trace, c.trace);
}

TEST(SimulateTrace, NeverPolicyLeavesOutcomesUntreated) {
  const SimConfig cfg = DefaultSimConfig();
  for (uint64_t s = 0; s < 20; ++s) {
    const SimTrace t = SimulateTrace(cfg, Policy::Never(), s, "n");
    ASSERT_EQ(t.trace.events.size(), t.untreated.size());
    for (size_t i = 0; i < t.untreated.size(); ++i) {
      EXPECT_FALSE(t.trace.events[i].a.has_value());
      EXPECT_EQ(*t.trace.events[i].y, t.untreated[i]);
    }
  }
}

TEST(TreatmentProbability, PolicyValues) {
  EXPECT_DOUBLE_EQ(TreatmentProbability(Policy::PiA(), 0.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(TreatmentProbability(Policy::PiB(), 0.0, 2), 0.5);
  EXPECT_DOUBLE_EQ(TreatmentProbability(Policy::PiC(), 0.0, 0), 0.10);
  EXPECT_DOUBLE_EQ(TreatmentProbability(Policy::PiC(), 0.0, 1), 0.45);
  EXPECT_DOUBLE_EQ(TreatmentProbability(Policy::Never(), -3.0, 0), 0.0);
  EXPECT_GT(TreatmentProbability(Policy::PiA(), -1.0, 0),
            TreatmentProbability(Policy::PiA(), 1.0, 0));
  EXPECT_LT(TreatmentProbability(Policy::PiB(), -1.0, 0),
            TreatmentProbability(Policy::PiB(), 1.0, 0));
  EXPECT_THROW(Policy::FromName("D"), ValidationError);
}

TEST(SimulateTrace, BumpsAreSaturatingAndFollowActions) {
  const SimConfig cfg = DefaultSimConfig();
  int bumped = 0;
  for (uint64_t s = 0; s < 50; ++s) {
    const SimTrace t = SimulateTrace(cfg, Policy::PiA(), s, "a");
    const auto& ev = t.trace.events;
    for (size_t i = 0; i < ev.size(); ++i) {
      bool active = false;
      for (size_t j = 0; j < i; ++j) {
        if (ev[j].a && ev[i].t - ev[j].t > 0 &&
            ev[i].t - ev[j].t <= cfg.effect_window) {
          active = true;
        }
      }
      const double diff = *ev[i].y - t.untreated[i];
      EXPECT_NEAR(diff, active ? cfg.effect : 0.0, 1e-12);
      bumped += active;
    }
  }
  EXPECT_GT(bumped, 0);
}

TEST(SimulateTrace, LatentPathIsPolicyInvariant) {
  const SimConfig cfg = DefaultSimConfig();
  for (uint64_t s = 0; s < 20; ++s) {
    const SimTrace a = SimulateTrace(cfg, Policy::PiA(), s, "p");
    const SimTrace b = SimulateTrace(cfg, Policy::PiB(), s, "p");
    EXPECT_EQ(a.cls, b.cls);
    EXPECT_EQ(a.untreated, b.untreated);
    EXPECT_EQ(a.grid_values, b.grid_values);
    ASSERT_EQ(a.trace.events.size(), b.trace.events.size());
    for (size_t i = 0; i < a.trace.events.size(); ++i) {
      EXPECT_EQ(a.trace.events[i].t, b.trace.events[i].t);
    }
  }
}

TEST(SimulateRegime, ClassFrequenciesMatchPrior) {
  const SimConfig cfg = DefaultSimConfig();
  const int n = 3000;
  const SimRegime r = SimulateRegime(cfg, Policy::Never(), n, 11);
  std::vector<int> counts(3, 0);
  for (const auto& t : r.traces) ++counts[t.cls];
  const double p = 1.0 / 3, sd = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_NEAR(c, n * p, 3 * sd);
}

TEST(SimulateRegime, RejectsEmptyCohort) {
  EXPECT_THROW(SimulateRegime(DefaultSimConfig(), Policy::PiA(), 0, 1),
               DomainError);
}

TEST(SimulateRegime, TreatmentRateFollowsPolicySign) {
  const SimConfig cfg = DefaultSimConfig();
  auto low_feature_rate = [&](const Policy& p) {
    const SimRegime r = SimulateRegime(cfg, p, 400, 5);
    int treated = 0, total = 0;
    for (const auto& t : r.dataset.traces) {
      const auto f = RecentOutcomeFeature(t, cfg.feature_window);
      for (size_t i = 0; i < f.size(); ++i) {
        if (f[i] && *f[i] < 0.0) {
          ++total;
          treated += t.events[i].a.has_value();
        }
      }
    }
    return static_cast<double>(treated) / total;
  };
  // A treats low values more often than B does.
  EXPECT_GT(low_feature_rate(Policy::PiA()), low_feature_rate(Policy::PiB()));
}

TEST(SimulateRegime, TrueModelIdentifiesClass) {
  const SimConfig cfg = DefaultSimConfig();
  const MixtureModel truth = GenerativeModel(cfg);
  const SimRegime r = SimulateRegime(cfg, Policy::PiA(), 200, 17);
  int hits = 0;
  for (const auto& t : r.traces) {
    const History h = TruncateHistory(t.trace, cfg.tau);
    const auto post = ClassPosterior(truth, h);
    const int map = static_cast<int>(
        std::max_element(post.begin(), post.end()) - post.begin());
    hits += map == t.cls;
  }
  EXPECT_GE(hits, 160);
}

TEST(MakeTestSet, UntreatedAfterCutAndLabeled) {
  const SimConfig cfg = DefaultSimConfig();
  const TestBundle b = MakeTestSet(cfg, Policy::PiA(), 12.0, 500, 8);
  ASSERT_EQ(b.labels.size(), 500u);
  int positive = 0;
  for (size_t i = 0; i < b.labels.size(); ++i) {
    const SimTrace& t = b.regime.traces[i];
    EXPECT_EQ(b.labels[i], t.latent_final < 0.0);
    positive += b.labels[i];
    for (const Event& e : t.trace.events) {
      if (e.a) EXPECT_LT(e.t, 12.0);
    }
  }
  EXPECT_GT(positive, 50);
  EXPECT_LT(positive, 450);
}

TEST(SimulateRegime, RoundTripsThroughJsonLines) {
  const SimRegime r = SimulateRegime(DefaultSimConfig(), Policy::PiB(), 100, 2);
  std::stringstream ss;
  WriteTraces(r.dataset, ss);
  const Dataset back = ParseTraces(ss);
  ASSERT_EQ(back.traces.size(), 100u);
  EXPECT_EQ(back.traces, r.dataset.traces);
}

TEST(GroundTruth, RoundTrip) {
  const SimRegime r = SimulateRegime(DefaultSimConfig(), Policy::PiA(), 10, 4);
  const auto path = std::filesystem::temp_directory_path() / "cgp_truth.jsonl";
  WriteGroundTruth(r.traces, path.string());
  const auto back = ReadGroundTruth(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 10u);
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, r.traces[i].trace.id);
    EXPECT_EQ(back[i].cls, r.traces[i].cls);
    EXPECT_EQ(back[i].latent_final, r.traces[i].latent_final);
    EXPECT_EQ(back[i].label, r.traces[i].at_risk());
  }
}

}  // namespace
}  // namespace cgp
