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

// Parameter estimation for mixture-of-GP outcome models.
//
// The CGP fit maximizes the outcome term of the adjusted likelihood: each
// trace's outcomes are scored under component means that include the
// responses to that trace's observed actions. The baseline fit uses the same
// family and optimizer with every response term removed, so any systematic
// effect of the training policy is absorbed into means and covariances.
// The event and action models have their own parameters and are fitted
// separately in closed form / by logistic regression.

#ifndef CGP_LEARNING_H_
#define CGP_LEARNING_H_

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cgp/gp.h"
#include "cgp/trace.h"

namespace cgp {

enum class InitStrategy { kSplineCluster, kRandomLogNormal };

// kSplineMatern: B-spline mean + Matern 3/2 + noise, saturating responses.
// kIouPoly: zero mean + quadratic polynomial + IOU + noise, additive
// short/long-term responses.
enum class OutcomeFamily { kSplineMatern, kIouPoly };

const char* InitStrategyName(InitStrategy s);
InitStrategy InitStrategyFromName(const std::string& name);
const char* OutcomeFamilyName(OutcomeFamily f);
OutcomeFamily OutcomeFamilyFromName(const std::string& name);

struct FitConfig {
  int n_components = 3;
  int max_iter = 300;
  double grad_tol = 1e-5;  // on the per-trace average negative log likelihood
  int restarts = 5;        // restart i is seeded with seed + i
  uint64_t seed = 0;
  InitStrategy init_strategy = InitStrategy::kSplineCluster;
  OutcomeFamily family = OutcomeFamily::kSplineMatern;
  // Tie covariance / response parameters across components.
  bool share_kernel = true;
  bool share_response = true;
  // Knot span of the spline mean and window of saturating responses.
  double spline_lo = 0.0;
  double spline_hi = 24.0;
  double effect_window = 2.0;
  int threads = 0;
};

void ValidateFitConfig(const FitConfig& config);

struct RestartDiagnostics {
  int index = 0;
  bool ok = false;
  double objective = 0.0;  // total log likelihood when ok
  bool converged = false;
  int iterations = 0;
  std::string message;
};

struct FitResult {
  MixtureModel model;
  double final_objective = 0.0;  // sum of trace log likelihoods
  bool converged = false;
  int iterations = 0;
  int restart_index = 0;
  std::vector<RestartDiagnostics> restarts;
};

// Maps an unconstrained vector onto a mixture model with the given structure
// and tying. Layout: [K-1 weight logits | shared kernel | shared response |
// per-component (mean, unshared kernel, unshared response)].
class MixtureParameterization {
 public:
  MixtureParameterization(std::vector<GPComponent> prototypes,
                          bool share_kernel, bool share_response);

  int size() const { return size_; }
  int n_components() const { return static_cast<int>(prototypes_.size()); }

  MixtureModel Unpack(std::span<const double> theta) const;
  std::vector<double> Pack(const MixtureModel& model) const;

  // Global index of each local parameter of component k.
  const std::vector<int>& LocalToGlobal(int k) const { return index_[k]; }

 private:
  std::vector<GPComponent> prototypes_;
  std::vector<std::vector<int>> index_;
  int size_ = 0;
};

// Total log likelihood of the dataset and its gradient with respect to the
// packed parameters (summed over traces in index order).
class MixtureObjective {
 public:
  MixtureObjective(const Dataset& dataset, MixtureParameterization param,
                   int threads = 0);

  double LogLikelihood(std::span<const double> theta) const;
  double LogLikelihoodGradient(std::span<const double> theta,
                               std::span<double> grad) const;

  const MixtureParameterization& parameterization() const { return param_; }
  size_t n_traces() const { return data_.size(); }

 private:
  std::vector<ObservedData> data_;
  MixtureParameterization param_;
  int threads_;
};

// Component prototype for a family. `with_response` adds one response entry
// per action type in `vocabulary`.
GPComponent FamilyPrototype(const FitConfig& config,
                            const std::set<std::string>& vocabulary,
                            bool with_response);

// Initial unconstrained parameters (component-local layout) for component
// `component` under config.init_strategy, seeded by config.seed.
//   spline_cluster: per-trace ridge least-squares spline coefficients,
//     clustered by seeded k-means; the cluster center becomes the mean.
//   random_lognormal: rates ~ LogNormal(0, 0.1), heights ~ Normal(0, 0.1),
//     polynomial Sigma = I.
// Throws ConfigError when there are fewer traces than components.
std::vector<double> InitParameters(const Dataset& dataset,
                                   const FitConfig& config, int component,
                                   bool with_response = true);

// The initial model used by one restart.
MixtureModel InitialModel(const Dataset& dataset, const FitConfig& config,
                          bool with_response);

// Per-trace least-squares spline coefficients (ridge-shrunk towards the pooled
// fit) and a seeded k-means over them. Exposed for testing.
std::vector<std::vector<double>> TraceSplineCoefficients(
    const Dataset& dataset, double lo, double hi);
std::vector<std::vector<double>> KMeans(
    const std::vector<std::vector<double>>& points, int k, uint64_t seed,
    std::vector<int>* assignment = nullptr);

FitResult FitCgp(const Dataset& dataset, const FitConfig& config);
FitResult FitBaseline(const Dataset& dataset, const FitConfig& config);

// Homogeneous event intensity plus a logistic action model on the recent
// outcome average. `class_scales` is only set when supplied by the user.
struct EventActionModel {
  double lambda = 1.0;
  double action_weight = 0.0;
  double action_bias = 0.0;
  std::optional<std::vector<double>> class_scales;
  double feature_window = 2.0;
};

// Closed-form Poisson rate (events / total horizon) and a Newton-fitted
// logistic regression with |weight|, |bias| clipped at 20. Throws DomainError
// for a dataset with no events.
EventActionModel FitEventActionModel(const Dataset& dataset,
                                     double feature_window = 2.0);

// Mean of outcomes in (t - window, t] per event; nullopt when the window
// holds no outcome.
std::vector<std::optional<double>> RecentOutcomeFeature(const Trace& trace,
                                                        double window);

// The adjusted objective assembled from its separable parts.
struct AdjustedObjective {
  double outcome_term = 0.0;   // sum of mixture log likelihoods
  double event_term = 0.0;     // sum over events of log lambda
  double action_term = 0.0;    // Bernoulli log likelihood of action marks
  double integral_term = 0.0;  // lambda * sum of horizons
  double total = 0.0;          // outcome + event + action - integral
};
AdjustedObjective EvaluateAdjustedObjective(const MixtureModel& model,
                                            const EventActionModel& eam,
                                            const Dataset& dataset);

}  // namespace cgp

#endif  // CGP_LEARNING_H_
