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

// Exact GP regression and mixture-of-GP machinery.
//
// A component's mean at time t is its baseline mean plus, for every action
// type it models, the cumulative response of that type's past actions. A
// component with no response entries is action-blind: it ignores actions
// entirely. Outcomes are the only conditioning data; actions enter through the
// mean.

#ifndef CGP_GP_H_
#define CGP_GP_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgp/kernels.h"
#include "cgp/mean.h"
#include "cgp/response.h"
#include "cgp/trace.h"

namespace cgp {

struct GPComponent {
  MeanSpec mean;
  KernelSpec kernel;
  ResponseMode response_mode = ResponseMode::kAdditive;
  std::map<std::string, ActionResponse> response;

  bool operator==(const GPComponent&) const = default;
};

struct MixtureModel {
  std::vector<GPComponent> components;
  std::vector<double> log_weights;

  int size() const { return static_cast<int>(components.size()); }
  bool operator==(const MixtureModel&) const = default;
};

// Throws ValidationError. A component needs exactly one white-noise term and
// responses matching its mode; a model needs normalized log weights.
void ValidateComponent(const GPComponent& comp);
void ValidateModel(const MixtureModel& model);

double LogSumExp(std::span<const double> v);
std::vector<double> LogNormalize(std::vector<double> v);

// Outcomes and per-type action times of one trace or history.
struct ObservedData {
  std::vector<double> times;
  std::vector<double> values;
  std::map<std::string, std::vector<double>> action_times;
};
ObservedData PrepareObserved(const std::vector<Event>& events);
ObservedData PrepareObserved(const std::vector<Outcome>& outcomes,
                             const std::vector<Action>& actions);

// Unconstrained parameter layout of one component:
//   [mean coefficients | kernel params | response params by action type]
int ComponentParamCount(const GPComponent& comp);
void ComponentGetParams(const GPComponent& comp, std::span<double> out);
GPComponent ComponentWithParams(const GPComponent& comp,
                                std::span<const double> params);

struct GaussianMarginals {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Precomputes the flattened kernel for repeated evaluation over many traces.
class ComponentEvaluator {
 public:
  explicit ComponentEvaluator(const GPComponent& comp);

  // Throws ConfigError for action types the component does not model.
  Eigen::VectorXd Mean(
      std::span<const double> times,
      const std::map<std::string, std::vector<double>>& action_times) const;

  Eigen::MatrixXd Gram(std::span<const double> times) const;

  double LogLikelihood(const ObservedData& data) const;

  // Returns the log likelihood and writes its gradient with respect to the
  // component's unconstrained parameters into `grad` (overwritten).
  double LogLikelihoodGradient(const ObservedData& data,
                               std::span<double> grad) const;

  // Noise-free posterior marginals at `query` given the outcomes in `data`.
  GaussianMarginals Condition(const ObservedData& data,
                              std::span<const double> query) const;

  int param_count() const { return param_count_; }
  const GPComponent& component() const { return comp_; }

 private:
  void CheckActionTypes(
      const std::map<std::string, std::vector<double>>& action_times) const;

  GPComponent comp_;
  FlatKernel kernel_;
  int mean_params_ = 0;
  int kernel_params_ = 0;
  int param_count_ = 0;
};

Eigen::VectorXd ComponentMeanVector(const GPComponent& comp,
                                    std::span<const double> times,
                                    const std::vector<Action>& actions);

double ComponentLogLikelihood(const GPComponent& comp,
                              const std::vector<Outcome>& outcomes,
                              const std::vector<Action>& actions);

// log sum_k w_k p_k(y | actions). Requires at least one outcome.
double MixtureLogLikelihood(const MixtureModel& model, const Trace& trace);

// Normalized log posterior over classes given a history's outcomes. An empty
// history returns the prior.
std::vector<double> ClassPosterior(const MixtureModel& model,
                                   const History& history);
std::vector<double> ClassPosterior(
    const MixtureModel& model,
    const std::vector<ComponentEvaluator>& evaluators,
    const ObservedData& data);

enum class PredictMode { kMapClass, kMixture };
const char* PredictModeName(PredictMode mode);
PredictMode PredictModeFromName(const std::string& name);

struct PosteriorPrediction {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> lower95;
  std::vector<double> upper95;
  std::vector<double> class_log_posterior;
  PredictMode mode = PredictMode::kMapClass;
  int map_class = 0;
};

// Predicts the latent outcome at `query_times` given the history and the
// actions in `plan` appended to the history's own. An empty plan is
// the "no action" counterfactual. Query and plan times must be after the cut;
// violations throw DomainError.
PosteriorPrediction Predict(const MixtureModel& model, const History& history,
                            const ActionPlan& plan,
                            std::span<const double> query_times,
                            PredictMode mode);

}  // namespace cgp

#endif  // CGP_GP_H_
