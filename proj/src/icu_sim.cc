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

#include "cgp/icu_sim.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "cgp/errors.h"
#include "cgp/parallel.h"
#include "cgp/simulator.h"

namespace cgp {
namespace {

Trace SimulateIcuTrace(const IcuSimConfig& config, uint64_t seed,
                       const std::string& id, int* cls_out) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const auto& c : config.classes) weights.push_back(c.weight);
  const int cls = std::discrete_distribution<int>(weights.begin(),
                                                  weights.end())(rng);
  *cls_out = cls;
  const IcuClass& spec = config.classes[cls];

  std::vector<double> times;
  do {
    times = SampleMeasurementTimes(config.lambda, config.tau, rng);
  } while (times.empty());

  const GramFactor f =
      FactorGram(LatentCrossCovariance(spec.kernel, times, times));
  std::normal_distribution<double> n01;
  Eigen::VectorXd z(static_cast<Eigen::Index>(times.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
  const Eigen::VectorXd latent = f.llt.matrixL() * z;
  const double noise_sd = std::sqrt(NoiseVariance(spec.kernel));

  std::vector<std::string> types;
  for (const auto& [name, _] : spec.responses) types.push_back(name);
  std::map<std::string, std::vector<double>> given;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double propensity = config.propensity_sd * n01(rng);

  Trace tr;
  tr.id = id;
  tr.tau = config.tau;
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    double y = latent[static_cast<Eigen::Index>(i)] + noise_sd * n01(rng);
    for (const auto& [name, at] : given) {
      y += CumulativeResponse(spec.responses.at(name), at, t);
    }
    tr.events.push_back({t, y, std::nullopt});
    const double p = 1.0 / (1.0 + std::exp(-config.policy_weight *
                                               (y - config.policy_threshold) -
                                           propensity));
    const double u = u01(rng);
    const size_t pick = std::min(types.size() - 1,
                                 static_cast<size_t>(u01(rng) * types.size()));
    const double ta = t + config.action_delay;
    if (u < p && ta < config.tau) {
      given[types[pick]].push_back(ta);
      tr.events.push_back({ta, std::nullopt, types[pick]});
    }
  }
  std::stable_sort(tr.events.begin(), tr.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return tr;
}

}  // namespace

IcuSimConfig DefaultIcuSimConfig() {
  IcuSimConfig c;
  IcuClass strong;
  strong.weight = 0.5;
  QuadPoly q1;
  q1.sigma = Eigen::Vector3d(0.09, 2.5e-5, 1e-8).asDiagonal();
  strong.kernel = Sum({q1, IOU{0.5, 0.02}, WhiteNoise{0.08}});
  strong.responses = {
      {"IHD", {-0.8, 1.5, 0.3, -0.4, 0.1}},
      {"CVVH", {-0.3, 1.0, 0.25, -0.6, 0.1}},
      {"CVVHD", {-0.5, 1.2, 0.4, -0.5, 0.1}},
  };
  IcuClass weak;
  weak.weight = 0.5;
  QuadPoly q2;
  q2.sigma = Eigen::Vector3d(0.16, 1e-4, 2e-8).asDiagonal();
  weak.kernel = Sum({q2, IOU{1.0, 0.06}, WhiteNoise{0.12}});
  weak.responses = {
      {"IHD", {-0.2, 1.2, 0.25, -0.05, 0.1}},
      {"CVVH", {-0.05, 0.8, 0.2, -0.1, 0.1}},
      {"CVVHD", {-0.1, 1.0, 0.3, -0.1, 0.1}},
  };
  c.classes = {strong, weak};
  return c;
}

void ValidateIcuSimConfig(const IcuSimConfig& c) {
  if (!(c.lambda > 0)) throw ValidationError("lambda must be positive");
  if (!(c.tau > 0)) throw ValidationError("tau must be positive");
  if (!(c.propensity_sd >= 0)) {
    throw ValidationError("propensity_sd must be non-negative");
  }
  if (c.classes.empty()) throw ValidationError("at least one class required");
  for (const auto& k : c.classes) {
    if (!(k.weight > 0)) throw ValidationError("class weights must be positive");
    if (k.responses.empty()) {
      throw ValidationError("each class needs at least one action type");
    }
    ValidateKernel(k.kernel);
    for (const auto& [_, r] : k.responses) ValidateResponse(r);
  }
}

MixtureModel IcuGenerativeModel(const IcuSimConfig& config) {
  ValidateIcuSimConfig(config);
  MixtureModel m;
  for (const auto& k : config.classes) {
    GPComponent c;
    c.mean = ZeroMean{};
    c.kernel = k.kernel;
    c.response_mode = ResponseMode::kAdditive;
    for (const auto& [name, r] : k.responses) c.response[name] = r;
    m.components.push_back(std::move(c));
    m.log_weights.push_back(std::log(k.weight));
  }
  m.log_weights = LogNormalize(std::move(m.log_weights));
  return m;
}

IcuCohort SimulateIcuCohort(const IcuSimConfig& config, int n, uint64_t seed,
                            const std::string& id_prefix) {
  if (n < 1) throw DomainError("number of traces must be >= 1");
  ValidateIcuSimConfig(config);
  std::vector<Trace> traces(n);
  std::vector<int> classes(n);
  ParallelFor(static_cast<size_t>(n), [&](size_t i) {
    traces[i] = SimulateIcuTrace(config, MixSeed(seed, i),
                                 id_prefix + std::to_string(i), &classes[i]);
  });
  IcuCohort cohort;
  cohort.dataset = MakeDataset(std::move(traces));
  cohort.classes = std::move(classes);
  return cohort;
}

}  // namespace cgp
