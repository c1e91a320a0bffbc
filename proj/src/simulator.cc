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

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cgp/errors.h"
#include "cgp/parallel.h"
#include "json.hpp"

namespace cgp {

SimConfig DefaultSimConfig() {
  SimConfig c;
  c.class_means = {
      ClampedCubicSpline(0, 24, {0.4, 0.2, -0.1, -0.45, -0.8}),
      ClampedCubicSpline(0, 24, {0.4, 0.0, -0.2, -0.2, -0.2}),
      ClampedCubicSpline(0, 24, {0.3, 0.3, 0.3, 0.3, 0.3}),
  };
  c.class_prior = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return c;
}

void ValidateSimConfig(const SimConfig& c) {
  if (!(c.lambda > 0)) throw ValidationError("lambda must be positive");
  if (!(c.tau > 0)) throw ValidationError("tau must be positive");
  ValidateKernel(c.kernel);
  if (c.class_means.empty() || c.class_means.size() != c.class_prior.size()) {
    throw ValidationError("class means and prior must have equal, non-zero "
                          "length");
  }
  double total = 0.0;
  for (double p : c.class_prior) {
    if (!(p >= 0)) throw ValidationError("negative class prior");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("class prior must sum to 1");
  }
  for (const MeanSpec& m : c.class_means) ValidateMean(m);
  if (!(c.effect_window > 0) || !(c.feature_window > 0)) {
    throw ValidationError("windows must be positive");
  }
}

Policy Policy::FromName(const std::string& name) {
  if (name == "A") return PiA();
  if (name == "B") return PiB();
  if (name == "C") return PiC();
  if (name == "never") return Never();
  throw ValidationError("unknown regime '" + name + "' (expected A|B|C|never)");
}

double TreatmentProbability(const Policy& policy, double feature, int cls) {
  const double logistic = 1.0 / (1.0 + std::exp(-policy.weight * feature));
  switch (policy.kind) {
    case Policy::Kind::kNever:
      return 0.0;
    case Policy::Kind::kLogistic:
      return logistic;
    case Policy::Kind::kClassScaled:
      return policy.class_scales.at(cls) * logistic;
  }
  return 0.0;
}

std::vector<double> SampleMeasurementTimes(double lambda, double tau,
                                           std::mt19937_64& rng) {
  std::vector<double> times;
  if (!(tau > 0)) return times;
  std::exponential_distribution<double> gap(lambda);
  for (double t = gap(rng); t < tau; t += gap(rng)) times.push_back(t);
  return times;
}

MixtureModel GenerativeModel(const SimConfig& config) {
  ValidateSimConfig(config);
  MixtureModel m;
  for (size_t k = 0; k < config.class_means.size(); ++k) {
    GPComponent c;
    c.mean = config.class_means[k];
    c.kernel = config.kernel;
    c.response_mode = ResponseMode::kSaturating;
    c.response[config.action_type] =
        SaturatingResponse{config.effect_window, config.effect};
    m.components.push_back(std::move(c));
    m.log_weights.push_back(std::log(config.class_prior[k]));
  }
  m.log_weights = LogNormalize(std::move(m.log_weights));
  return m;
}

SimTrace SimulateTrace(const SimConfig& config, const Policy& policy,
                       uint64_t seed, const std::string& id,
                       double treat_until) {
  std::mt19937_64 outcome_rng(MixSeed(seed, 0));
  std::mt19937_64 policy_rng(MixSeed(seed, 1));

  SimTrace sim;
  std::discrete_distribution<int> pick(config.class_prior.begin(),
                                       config.class_prior.end());
  sim.cls = pick(outcome_rng);
  const std::vector<double> times =
      SampleMeasurementTimes(config.lambda, config.tau, outcome_rng);

  for (double g = 0.0; g <= config.tau + 1e-9; g += config.grid_step) {
    sim.grid_times.push_back(std::min(g, config.tau));
  }
  if (sim.grid_times.back() < config.tau) sim.grid_times.push_back(config.tau);

  // Joint draw of the latent process in time order; the Cholesky factor
  // realizes the sequential GP conditionals.
  std::vector<double> all = times;
  all.insert(all.end(), sim.grid_times.begin(), sim.grid_times.end());
  std::vector<size_t> order(all.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return all[a] < all[b]; });
  std::vector<double> sorted(all.size());
  for (size_t i = 0; i < order.size(); ++i) sorted[i] = all[order[i]];
  const GramFactor f =
      FactorGram(LatentCrossCovariance(config.kernel, sorted, sorted));
  std::normal_distribution<double> n01;
  Eigen::VectorXd z(static_cast<Eigen::Index>(sorted.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(outcome_rng);
  const Eigen::VectorXd draw = f.llt.matrixL() * z;
  std::vector<double> latent(all.size());
  for (size_t i = 0; i < order.size(); ++i) {
    latent[order[i]] = draw[static_cast<Eigen::Index>(i)] +
                       MeanEval(config.class_means[sim.cls], sorted[i]);
  }

  const double noise_sd = std::sqrt(NoiseVariance(config.kernel));
  sim.untreated.resize(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    sim.untreated[i] = latent[i] + noise_sd * n01(outcome_rng);
  }
  for (size_t i = 0; i < sim.grid_times.size(); ++i) {
    sim.grid_values.push_back(latent[times.size() + i]);
  }
  sim.latent_final = sim.grid_values.back();

  sim.trace.id = id;
  sim.trace.tau = config.tau;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> treated_at;
  std::vector<double> observed(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    double bump = 0.0;
    for (double t0 : treated_at) {
      if (t - t0 > 0 && t - t0 <= config.effect_window) bump = config.effect;
    }
    observed[i] = sim.untreated[i] + bump;

    double sum = 0.0;
    int count = 0;
    for (size_t j = 0; j <= i; ++j) {
      if (times[j] > t - config.feature_window) {
        sum += observed[j];
        ++count;
      }
    }
    const double feature = sum / count;
    const double u = u01(policy_rng);
    const bool treat = t < treat_until &&
                       u < TreatmentProbability(policy, feature, sim.cls);
    Event e{t, observed[i], std::nullopt};
    if (treat) {
      e.a = config.action_type;
      treated_at.push_back(t);
    }
    sim.trace.events.push_back(std::move(e));
  }
  return sim;
}

SimRegime SimulateRegime(const SimConfig& config, const Policy& policy, int n,
                         uint64_t seed, const std::string& id_prefix,
                         double treat_until) {
  if (n < 1) throw DomainError("number of traces must be >= 1");
  ValidateSimConfig(config);
  SimRegime r;
  r.traces.resize(n);
  ParallelFor(n, [&](size_t i) {
    r.traces[i] = SimulateTrace(config, policy, MixSeed(seed, i),
                                id_prefix + std::to_string(i), treat_until);
  });
  std::vector<Trace> observed;
  observed.reserve(n);
  for (const SimTrace& s : r.traces) observed.push_back(s.trace);
  r.dataset = MakeDataset(std::move(observed));
  return r;
}

TestBundle MakeTestSet(const SimConfig& config, const Policy& policy_until,
                       double cut, int n, uint64_t seed) {
  if (!(cut > 0 && cut < config.tau)) {
    throw DomainError("test cut must lie in (0, tau)");
  }
  TestBundle b;
  b.cut = cut;
  b.regime = SimulateRegime(config, policy_until, n, seed, "test", cut);
  for (const SimTrace& s : b.regime.traces) b.labels.push_back(s.at_risk());
  return b;
}

void WriteGroundTruth(const std::vector<SimTrace>& traces,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const SimTrace& s : traces) {
    nlohmann::json j = {{"id", s.trace.id},
                        {"class", s.cls},
                        {"latent_final", s.latent_final},
                        {"label", s.at_risk()}};
    out << j.dump() << '\n';
  }
}

std::vector<GroundTruth> ReadGroundTruth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground-truth file '" + path + "'");
  std::vector<GroundTruth> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(text);
      out.push_back({j.at("id").get<std::string>(), j.at("class").get<int>(),
                     j.at("latent_final").get<double>(),
                     j.at("label").get<bool>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

}  // namespace cgp
