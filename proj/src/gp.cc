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

#include "cgp/gp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgp/errors.h"

namespace cgp {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kZ95 = 1.959963984540054;

}  // namespace

void ValidateComponent(const GPComponent& comp) {
  ValidateMean(comp.mean);
  ValidateKernel(comp.kernel);
  if (CountWhiteNoise(comp.kernel) != 1) {
    throw ValidationError("component kernel must contain exactly one "
                          "WhiteNoise term");
  }
  for (const auto& [type, r] : comp.response) {
    ValidateResponse(r);
    if (ModeOf(r) != comp.response_mode) {
      throw ValidationError("response for '" + type + "' does not match the "
                            "component's response mode");
    }
  }
}

void ValidateModel(const MixtureModel& model) {
  if (model.components.empty()) throw ValidationError("model has no components");
  if (model.log_weights.size() != model.components.size()) {
    throw ValidationError("log_weights size differs from component count");
  }
  for (double w : model.log_weights) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      throw ValidationError("invalid log weight");
    }
  }
  if (std::abs(LogSumExp(model.log_weights)) > 1e-10) {
    throw ValidationError("log_weights are not normalized");
  }
  for (const GPComponent& c : model.components) ValidateComponent(c);
}

double LogSumExp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> LogNormalize(std::vector<double> v) {
  const double z = LogSumExp(v);
  for (double& x : v) x -= z;
  return v;
}

ObservedData PrepareObserved(const std::vector<Event>& events) {
  ObservedData d;
  for (const Event& e : events) {
    if (e.y) {
      d.times.push_back(e.t);
      d.values.push_back(*e.y);
    }
    if (e.a) d.action_times[*e.a].push_back(e.t);
  }
  return d;
}

ObservedData PrepareObserved(const std::vector<Outcome>& outcomes,
                             const std::vector<Action>& actions) {
  ObservedData d;
  for (const Outcome& o : outcomes) {
    d.times.push_back(o.t);
    d.values.push_back(o.y);
  }
  for (const Action& a : actions) d.action_times[a.type].push_back(a.time);
  return d;
}

int ComponentParamCount(const GPComponent& comp) {
  int n = MeanParamCount(comp.mean) + KernelParamCount(comp.kernel);
  for (const auto& [type, r] : comp.response) n += ResponseParamCount(r);
  return n;
}

void ComponentGetParams(const GPComponent& comp, std::span<double> out) {
  int pos = 0;
  const int nm = MeanParamCount(comp.mean);
  MeanGetParams(comp.mean, out.subspan(pos, nm));
  pos += nm;
  const int nk = KernelParamCount(comp.kernel);
  KernelGetParams(comp.kernel, out.subspan(pos, nk));
  pos += nk;
  for (const auto& [type, r] : comp.response) {
    const int nr = ResponseParamCount(r);
    ResponseGetParams(r, out.subspan(pos, nr));
    pos += nr;
  }
}

GPComponent ComponentWithParams(const GPComponent& comp,
                                std::span<const double> params) {
  GPComponent out = comp;
  int pos = 0;
  const int nm = MeanParamCount(comp.mean);
  out.mean = MeanWithParams(comp.mean, params.subspan(pos, nm));
  pos += nm;
  const int nk = KernelParamCount(comp.kernel);
  out.kernel = KernelWithParams(comp.kernel, params.subspan(pos, nk));
  pos += nk;
  for (auto& [type, r] : out.response) {
    const int nr = ResponseParamCount(r);
    r = ResponseWithParams(r, params.subspan(pos, nr));
    pos += nr;
  }
  return out;
}

ComponentEvaluator::ComponentEvaluator(const GPComponent& comp)
    : comp_(comp), kernel_(comp.kernel) {
  mean_params_ = MeanParamCount(comp.mean);
  kernel_params_ = kernel_.param_count();
  param_count_ = ComponentParamCount(comp);
}

void ComponentEvaluator::CheckActionTypes(
    const std::map<std::string, std::vector<double>>& action_times) const {
  if (comp_.response.empty()) return;
  for (const auto& [type, times] : action_times) {
    if (!comp_.response.contains(type)) {
      throw ConfigError("model has no response for action type '" + type +
                        "'");
    }
  }
}

Eigen::VectorXd ComponentEvaluator::Mean(
    std::span<const double> times,
    const std::map<std::string, std::vector<double>>& action_times) const {
  CheckActionTypes(action_times);
  Eigen::VectorXd m(static_cast<Eigen::Index>(times.size()));
  for (size_t i = 0; i < times.size(); ++i) {
    double v = MeanEval(comp_.mean, times[i]);
    if (!comp_.response.empty()) {
      for (const auto& [type, at] : action_times) {
        v += CumulativeResponse(comp_.response.at(type), at, times[i]);
      }
    }
    m[static_cast<Eigen::Index>(i)] = v;
  }
  return m;
}

Eigen::MatrixXd ComponentEvaluator::Gram(std::span<const double> times) const {
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_(times[i], times[j], i == j);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

double ComponentEvaluator::LogLikelihood(const ObservedData& data) const {
  const Eigen::Index n = static_cast<Eigen::Index>(data.times.size());
  if (n == 0) return 0.0;
  const Eigen::VectorXd m = Mean(data.times, data.action_times);
  const GramFactor f = FactorGram(Gram(data.times));
  const Eigen::VectorXd r =
      Eigen::Map<const Eigen::VectorXd>(data.values.data(), n) - m;
  const Eigen::VectorXd z = f.llt.matrixL().solve(r);
  const double logdet = f.llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * z.squaredNorm() - logdet - 0.5 * n * kLog2Pi;
}

double ComponentEvaluator::LogLikelihoodGradient(const ObservedData& data,
                                                 std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const Eigen::Index n = static_cast<Eigen::Index>(data.times.size());
  if (n == 0) return 0.0;
  const Eigen::VectorXd m = Mean(data.times, data.action_times);
  const GramFactor f = FactorGram(Gram(data.times));
  const Eigen::VectorXd r =
      Eigen::Map<const Eigen::VectorXd>(data.values.data(), n) - m;
  const Eigen::VectorXd alpha = f.llt.solve(r);
  const double logdet = f.llt.matrixLLT().diagonal().array().log().sum();
  const double ll = -0.5 * r.dot(alpha) - logdet - 0.5 * n * kLog2Pi;

  // d ll / d K = 0.5 (alpha alpha' - K^-1).
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  f.llt.solveInPlace(inv);
  std::span<double> kgrad = grad.subspan(mean_params_, kernel_params_);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double w = alpha[i] * alpha[j] - inv(i, j);
      const double scale = i == j ? 0.5 * w : w;
      kernel_.GradientAccumulate(data.times[i], data.times[j], i == j, scale,
                                 kgrad);
    }
  }

  // d ll / d m = alpha.
  if (const auto* s = std::get_if<BSplineMean>(&comp_.mean.v)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::vector<double> b = BSplineBasis(*s, data.times[i]);
      for (int c = 0; c < mean_params_; ++c) grad[c] += alpha[i] * b[c];
    }
  }
  if (!comp_.response.empty()) {
    int pos = mean_params_ + kernel_params_;
    for (const auto& [type, resp] : comp_.response) {
      const int nr = ResponseParamCount(resp);
      auto it = data.action_times.find(type);
      if (it != data.action_times.end()) {
        for (Eigen::Index i = 0; i < n; ++i) {
          CumulativeResponseGradient(resp, it->second, data.times[i], alpha[i],
                                     grad.subspan(pos, nr));
        }
      }
      pos += nr;
    }
  }
  return ll;
}

GaussianMarginals ComponentEvaluator::Condition(
    const ObservedData& data, std::span<const double> query) const {
  const Eigen::Index nq = static_cast<Eigen::Index>(query.size());
  GaussianMarginals out;
  out.mean = Mean(query, data.action_times);
  out.variance.resize(nq);
  for (Eigen::Index i = 0; i < nq; ++i) {
    out.variance[i] = kernel_(query[i], query[i], false);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(data.times.size());
  if (n == 0) return out;

  const Eigen::VectorXd m = Mean(data.times, data.action_times);
  const GramFactor f = FactorGram(Gram(data.times));
  const Eigen::VectorXd r =
      Eigen::Map<const Eigen::VectorXd>(data.values.data(), n) - m;
  Eigen::MatrixXd cross(n, nq);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < nq; ++j) {
      cross(i, j) = kernel_(data.times[i], query[j], false);
    }
  }
  const Eigen::VectorXd alpha = f.llt.solve(r);
  out.mean += cross.transpose() * alpha;
  const Eigen::MatrixXd v = f.llt.matrixL().solve(cross);
  out.variance -= v.colwise().squaredNorm().transpose();
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

Eigen::VectorXd ComponentMeanVector(const GPComponent& comp,
                                    std::span<const double> times,
                                    const std::vector<Action>& actions) {
  return ComponentEvaluator(comp).Mean(times,
                                       PrepareObserved({}, actions).action_times);
}

double ComponentLogLikelihood(const GPComponent& comp,
                              const std::vector<Outcome>& outcomes,
                              const std::vector<Action>& actions) {
  return ComponentEvaluator(comp).LogLikelihood(
      PrepareObserved(outcomes, actions));
}

double MixtureLogLikelihood(const MixtureModel& model, const Trace& trace) {
  const ObservedData data = PrepareObserved(trace.events);
  if (data.times.empty()) {
    throw DomainError("trace '" + trace.id + "' has no outcomes");
  }
  std::vector<double> terms(model.components.size());
  for (size_t k = 0; k < terms.size(); ++k) {
    terms[k] = model.log_weights[k] +
               ComponentEvaluator(model.components[k]).LogLikelihood(data);
  }
  return LogSumExp(terms);
}

std::vector<double> ClassPosterior(
    const MixtureModel& model,
    const std::vector<ComponentEvaluator>& evaluators,
    const ObservedData& data) {
  std::vector<double> post = model.log_weights;
  if (data.times.empty()) return LogNormalize(std::move(post));
  for (size_t k = 0; k < post.size(); ++k) {
    post[k] += evaluators[k].LogLikelihood(data);
  }
  return LogNormalize(std::move(post));
}

std::vector<double> ClassPosterior(const MixtureModel& model,
                                   const History& history) {
  std::vector<ComponentEvaluator> ev;
  for (const GPComponent& c : model.components) ev.emplace_back(c);
  return ClassPosterior(model, ev, PrepareObserved(history.events));
}

const char* PredictModeName(PredictMode mode) {
  return mode == PredictMode::kMapClass ? "map_class" : "mixture";
}

PredictMode PredictModeFromName(const std::string& name) {
  if (name == "map_class") return PredictMode::kMapClass;
  if (name == "mixture") return PredictMode::kMixture;
  throw ValidationError("unknown prediction mode '" + name + "'");
}

PosteriorPrediction Predict(const MixtureModel& model, const History& history,
                            const ActionPlan& plan,
                            std::span<const double> query_times,
                            PredictMode mode) {
  for (double q : query_times) {
    if (!(q > history.cut_time)) {
      throw DomainError("query time " + std::to_string(q) +
                        " is not after the cut time " +
                        std::to_string(history.cut_time));
    }
  }
  for (const Action& a : plan.actions) {
    if (!(a.time > history.cut_time)) {
      throw DomainError("planned action at " + std::to_string(a.time) +
                        " is not after the cut time");
    }
  }
  ValidatePlan(plan, history.cut_time);
  for (const Event& e : history.events) {
    if (!(e.t < history.cut_time)) {
      throw DomainError("history contains an event at or after its cut time");
    }
  }

  std::vector<ComponentEvaluator> ev;
  for (const GPComponent& c : model.components) ev.emplace_back(c);
  ObservedData data = PrepareObserved(history.events);
  PosteriorPrediction out;
  out.mode = mode;
  out.times.assign(query_times.begin(), query_times.end());
  out.class_log_posterior = ClassPosterior(model, ev, data);
  out.map_class = static_cast<int>(
      std::max_element(out.class_log_posterior.begin(),
                       out.class_log_posterior.end()) -
      out.class_log_posterior.begin());

  for (const Action& a : plan.actions) data.action_times[a.type].push_back(a.time);

  const size_t nq = query_times.size();
  out.mean.assign(nq, 0.0);
  std::vector<double> var(nq, 0.0);
  if (mode == PredictMode::kMapClass) {
    const GaussianMarginals g = ev[out.map_class].Condition(data, query_times);
    for (size_t i = 0; i < nq; ++i) {
      out.mean[i] = g.mean[i];
      var[i] = g.variance[i];
    }
  } else {
    // Moment-matched mixture: law of total variance.
    std::vector<double> second(nq, 0.0);
    for (size_t k = 0; k < ev.size(); ++k) {
      const double w = std::exp(out.class_log_posterior[k]);
      if (w == 0.0) continue;
      const GaussianMarginals g = ev[k].Condition(data, query_times);
      for (size_t i = 0; i < nq; ++i) {
        out.mean[i] += w * g.mean[i];
        second[i] += w * (g.variance[i] + g.mean[i] * g.mean[i]);
      }
    }
    for (size_t i = 0; i < nq; ++i) {
      var[i] = std::max(0.0, second[i] - out.mean[i] * out.mean[i]);
    }
  }
  out.lower95.resize(nq);
  out.upper95.resize(nq);
  for (size_t i = 0; i < nq; ++i) {
    const double half = kZ95 * std::sqrt(var[i]);
    out.lower95[i] = out.mean[i] - half;
    out.upper95[i] = out.mean[i] + half;
  }
  return out;
}

}  // namespace cgp
