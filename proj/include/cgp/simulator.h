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

// Generative model for the policy-stability study: Poisson measurement times,
// a three-class GP mixture for the untreated severity marker, saturating
// treatment effects, and logistic treatment policies.
//
// Each trace draws from two random streams derived from (seed, trace index):
// one for the class, measurement times and untreated values, one for the
// treatment decisions. Two policies run with the same seed therefore share
// the untreated trajectories exactly and differ only in actions and the
// observed bumps they cause.

#ifndef CGP_SIMULATOR_H_
#define CGP_SIMULATOR_H_

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cgp/gp.h"
#include "cgp/kernels.h"
#include "cgp/mean.h"
#include "cgp/trace.h"

namespace cgp {

struct SimConfig {
  double lambda = 1.0;  // measurements per hour
  double tau = 24.0;
  // Untreated process covariance; its WhiteNoise term is measurement noise.
  KernelSpec kernel = Sum({Matern32{0.04, 8.0}, WhiteNoise{0.1}});
  std::vector<MeanSpec> class_means;
  std::vector<double> class_prior;
  double effect = 0.5;
  double effect_window = 2.0;
  double feature_window = 2.0;
  std::string action_type = "tx";
  double grid_step = 0.5;  // spacing of the dense latent grid
};

// Three classes: steady decline, decline then plateau, flat; uniform prior.
SimConfig DefaultSimConfig();

void ValidateSimConfig(const SimConfig& config);

// The mixture that generates untreated outcomes, with the saturating
// treatment response attached to every component.
MixtureModel GenerativeModel(const SimConfig& config);

struct Policy {
  enum class Kind { kNever, kLogistic, kClassScaled };
  Kind kind = Kind::kNever;
  double weight = 0.0;
  std::vector<double> class_scales;

  static Policy Never() { return {}; }
  static Policy PiA() { return {Kind::kLogistic, -0.5, {}}; }
  static Policy PiB() { return {Kind::kLogistic, 0.5, {}}; }
  static Policy PiC() { return {Kind::kClassScaled, -0.5, {0.2, 0.9, 0.5}}; }
  // "A", "B", "C" or "never"; throws ValidationError otherwise.
  static Policy FromName(const std::string& name);
};

// Probability of treating at a measurement whose recent-average feature is
// `feature`, for a subject of latent class `cls`.
double TreatmentProbability(const Policy& policy, double feature, int cls);

struct SimTrace {
  Trace trace;                        // observed (treated) values and actions
  std::vector<double> untreated;      // untreated value at each measurement
  std::vector<double> grid_times;     // dense grid on [0, tau]
  std::vector<double> grid_values;    // noise-free untreated trajectory
  int cls = 0;
  double latent_final = 0.0;          // noise-free untreated value at tau
  bool at_risk() const { return latent_final < 0.0; }
};

// Homogeneous Poisson process on [0, tau) by exponential inter-arrivals.
std::vector<double> SampleMeasurementTimes(double lambda, double tau,
                                           std::mt19937_64& rng);

// Simulates one subject. Treatment decisions are only taken at measurement
// times before `treat_until`.
SimTrace SimulateTrace(
    const SimConfig& config, const Policy& policy, uint64_t seed,
    const std::string& id,
    double treat_until = std::numeric_limits<double>::infinity());

struct SimRegime {
  Dataset dataset;               // observed events only
  std::vector<SimTrace> traces;  // with ground truth
};

// n independent subjects; trace i uses child seed MixSeed(seed, i) and id
// "<prefix><i>". Throws DomainError for n < 1.
SimRegime SimulateRegime(
    const SimConfig& config, const Policy& policy, int n, uint64_t seed,
    const std::string& id_prefix = "s",
    double treat_until = std::numeric_limits<double>::infinity());

// Test cohort: treated by `policy_until` before `cut`, untreated afterwards.
struct TestBundle {
  SimRegime regime;
  double cut = 12.0;
  std::vector<bool> labels;  // at risk iff the untreated value at tau < 0
};
TestBundle MakeTestSet(const SimConfig& config, const Policy& policy_until,
                       double cut, int n, uint64_t seed);

// Ground-truth sidecar lines: {"id", "class", "latent_final", "label"}.
void WriteGroundTruth(const std::vector<SimTrace>& traces,
                      const std::string& path);
struct GroundTruth {
  std::string id;
  int cls = 0;
  double latent_final = 0.0;
  bool label = false;
};
std::vector<GroundTruth> ReadGroundTruth(const std::string& path);

}  // namespace cgp

#endif  // CGP_SIMULATOR_H_
