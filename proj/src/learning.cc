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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "cgp/errors.h"
#include "cgp/optimize.h"
#include "cgp/parallel.h"

namespace cgp {
namespace {

constexpr int kSplineDim = 5;
constexpr double kClip = 20.0;

template <typename Enum, size_t N>
Enum FromName(const std::pair<const char*, Enum> (&table)[N],
              const std::string& name, const char* what) {
  for (const auto& [n, e] : table) {
    if (name == n) return e;
  }
  throw ConfigError(std::string("unknown ") + what + ": " + name);
}

const std::pair<const char*, InitStrategy> kInitNames[] = {
    {"spline_cluster", InitStrategy::kSplineCluster},
    {"random_lognormal", InitStrategy::kRandomLogNormal},
};
const std::pair<const char*, OutcomeFamily> kFamilyNames[] = {
    {"spline_matern", OutcomeFamily::kSplineMatern},
    {"iou_poly", OutcomeFamily::kIouPoly},
};

using Basis = std::function<Eigen::VectorXd(double)>;

Basis SplineBasisFn(double lo, double hi) {
  BSplineMean spline =
      ClampedCubicSpline(lo, hi, std::vector<double>(kSplineDim, 0.0));
  return [spline](double t) {
    std::vector<double> b = BSplineBasis(spline, t);
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(b.data(), b.size()));
  };
}

Basis QuadBasisFn() {
  return [](double t) { return Eigen::Vector3d(1.0, t, t * t).eval(); };
}

// Ridge fit of every trace's outcomes onto `basis`, shrunk towards the pooled
// least-squares solution. Also returns the per-trace residual mean square.
struct BasisFits {
  std::vector<Eigen::VectorXd> coeffs;
  Eigen::VectorXd pooled;
  double residual_var = 0.0;
};

BasisFits FitBasis(const Dataset& dataset, const Basis& basis, int dim,
                   double ridge) {
  BasisFits fits;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (const Trace& tr : dataset.traces) {
    for (const Event& e : tr.events) {
      if (!e.y) continue;
      Eigen::VectorXd phi = basis(e.t);
      gram += phi * phi.transpose();
      rhs += phi * *e.y;
    }
  }
  gram.diagonal().array() += 1e-8 * std::max(1.0, gram.diagonal().maxCoeff());
  fits.pooled = gram.ldlt().solve(rhs);

  double sq = 0.0;
  size_t count = 0;
  for (const Trace& tr : dataset.traces) {
    Eigen::MatrixXd g = ridge * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd r = ridge * fits.pooled;
    for (const Event& e : tr.events) {
      if (!e.y) continue;
      Eigen::VectorXd phi = basis(e.t);
      g += phi * phi.transpose();
      r += phi * *e.y;
    }
    Eigen::VectorXd c = g.ldlt().solve(r);
    for (const Event& e : tr.events) {
      if (!e.y) continue;
      const double d = *e.y - basis(e.t).dot(c);
      sq += d * d;
      ++count;
    }
    fits.coeffs.push_back(std::move(c));
  }
  fits.residual_var = count > 0 ? sq / static_cast<double>(count) : 0.0;
  return fits;
}

std::vector<std::vector<double>> ToVectors(
    const std::vector<Eigen::VectorXd>& v) {
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (const auto& x : v) out.emplace_back(x.data(), x.data() + x.size());
  return out;
}

double SquaredDistance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double OutcomeVariance(const Dataset& dataset) {
  double sum = 0.0, sq = 0.0;
  size_t n = 0;
  for (const Trace& tr : dataset.traces) {
    for (const Event& e : tr.events) {
      if (!e.y) continue;
      sum += *e.y;
      sq += *e.y * *e.y;
      ++n;
    }
  }
  if (n < 2) return 1.0;
  const double mean = sum / n;
  return std::max(sq / n - mean * mean, 1e-6);
}

double MeanHorizon(const Dataset& dataset) {
  double s = 0.0;
  for (const Trace& tr : dataset.traces) s += tr.tau;
  return std::max(s / std::max<size_t>(dataset.traces.size(), 1), 1.0);
}

std::vector<double> WeightsFromAssignment(const std::vector<int>& assign,
                                          int k) {
  std::vector<double> w(k, 0.0);
  for (int a : assign) w[a] += 1.0;
  double total = 0.0;
  for (double& x : w) {
    x = std::max(x / std::max<size_t>(assign.size(), 1), 0.05);
    total += x;
  }
  for (double& x : w) x = std::log(x / total);
  return w;
}

void CheckFitData(const Dataset& dataset, int n_components) {
  if (dataset.traces.empty()) throw DomainError("dataset has no traces");
  for (const Trace& tr : dataset.traces) {
    const bool any = std::any_of(tr.events.begin(), tr.events.end(),
                                 [](const Event& e) { return e.y.has_value(); });
    if (!any) throw DomainError("trace " + tr.id + " has no outcomes");
  }
  if (static_cast<int>(dataset.traces.size()) < n_components) {
    throw ConfigError("fewer traces (" + std::to_string(dataset.traces.size()) +
                      ") than components (" + std::to_string(n_components) +
                      ")");
  }
}

std::set<std::string> Vocabulary(const Dataset& dataset) {
  std::set<std::string> vocab = dataset.action_vocabulary;
  for (const Trace& tr : dataset.traces) {
    for (const Event& e : tr.events) {
      if (e.a) vocab.insert(*e.a);
    }
  }
  return vocab;
}

double Sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

// log sigmoid(x), stable for large |x|.
double LogSigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

FitResult FitImpl(const Dataset& dataset, const FitConfig& config,
                  bool with_response) {
  ValidateFitConfig(config);
  CheckFitData(dataset, config.n_components);
  const GPComponent proto =
      FamilyPrototype(config, Vocabulary(dataset), with_response);
  MixtureParameterization param(
      std::vector<GPComponent>(config.n_components, proto),
      config.share_kernel, config.share_response);
  const MixtureObjective objective(dataset, param, config.threads);
  const double scale = 1.0 / static_cast<double>(objective.n_traces());

  // The optimizer works on the per-trace average so that grad_tol does not
  // depend on the dataset size.
  const ObjectiveWithGradient f = [&](std::span<const double> x,
                                      std::span<double> g) {
    try {
      const double ll = objective.LogLikelihoodGradient(x, g);
      for (double& v : g) v *= -scale;
      return -ll * scale;
    } catch (const NumericalError&) {
      std::fill(g.begin(), g.end(), std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult best;
  bool have_best = false;
  MinimizeOptions options;
  options.max_iter = config.max_iter;
  options.grad_tol = config.grad_tol;
  for (int r = 0; r < config.restarts; ++r) {
    RestartDiagnostics diag;
    diag.index = r;
    try {
      FitConfig run = config;
      run.seed = config.seed + static_cast<uint64_t>(r);
      const MixtureModel init = InitialModel(dataset, run, with_response);
      MinimizeResult res = Minimize(f, param.Pack(init), options);
      diag.objective = -res.value / scale;
      diag.converged = res.converged;
      diag.iterations = res.iterations;
      diag.message = res.message;
      diag.ok = std::isfinite(diag.objective);
      if (diag.ok && (!have_best || diag.objective > best.final_objective)) {
        best.model = param.Unpack(res.x);
        best.final_objective = diag.objective;
        best.converged = res.converged;
        best.iterations = res.iterations;
        best.restart_index = r;
        have_best = true;
      }
    } catch (const Error& e) {
      diag.ok = false;
      diag.message = e.what();
    }
    best.restarts.push_back(std::move(diag));
  }
  if (!have_best) {
    std::ostringstream msg;
    msg << "all " << config.restarts << " restarts failed:";
    for (const auto& d : best.restarts) {
      msg << " [" << d.index << "] " << d.message << ";";
    }
    throw OptimizationError(msg.str());
  }
  return best;
}

}  // namespace

const char* InitStrategyName(InitStrategy s) {
  for (const auto& [n, e] : kInitNames) {
    if (e == s) return n;
  }
  return "?";
}

InitStrategy InitStrategyFromName(const std::string& name) {
  return FromName(kInitNames, name, "init strategy");
}

const char* OutcomeFamilyName(OutcomeFamily f) {
  for (const auto& [n, e] : kFamilyNames) {
    if (e == f) return n;
  }
  return "?";
}

OutcomeFamily OutcomeFamilyFromName(const std::string& name) {
  return FromName(kFamilyNames, name, "outcome family");
}

void ValidateFitConfig(const FitConfig& c) {
  if (c.n_components < 1) throw ConfigError("n_components must be >= 1");
  if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (c.restarts < 1) throw ConfigError("restarts must be >= 1");
  if (!(c.grad_tol > 0)) throw ConfigError("grad_tol must be positive");
  if (!(c.spline_hi > c.spline_lo)) throw ConfigError("empty spline span");
  if (!(c.effect_window > 0)) throw ConfigError("effect_window must be > 0");
}

// ---------------------------------------------------------------------------
// Parameterization

MixtureParameterization::MixtureParameterization(
    std::vector<GPComponent> prototypes, bool share_kernel,
    bool share_response)
    : prototypes_(std::move(prototypes)) {
  const int k = n_components();
  if (k < 1) throw ConfigError("mixture needs at least one component");
  const int kernel_n = KernelParamCount(prototypes_[0].kernel);
  int response_n = 0;
  for (const auto& [_, r] : prototypes_[0].response) {
    response_n += ResponseParamCount(r);
  }
  for (const GPComponent& p : prototypes_) {
    int rn = 0;
    for (const auto& [_, r] : p.response) rn += ResponseParamCount(r);
    if ((share_kernel && KernelParamCount(p.kernel) != kernel_n) ||
        (share_response && rn != response_n)) {
      throw ConfigError("tied parameters need identical component structure");
    }
  }

  int next = k - 1;
  const int shared_kernel = next;
  if (share_kernel) next += kernel_n;
  const int shared_response = next;
  if (share_response) next += response_n;

  index_.resize(k);
  for (int c = 0; c < k; ++c) {
    const GPComponent& p = prototypes_[c];
    const int mean_n = MeanParamCount(p.mean);
    const int kn = KernelParamCount(p.kernel);
    int rn = 0;
    for (const auto& [_, r] : p.response) rn += ResponseParamCount(r);
    std::vector<int>& idx = index_[c];
    for (int j = 0; j < mean_n; ++j) idx.push_back(next++);
    for (int j = 0; j < kn; ++j) {
      idx.push_back(share_kernel ? shared_kernel + j : next++);
    }
    for (int j = 0; j < rn; ++j) {
      idx.push_back(share_response ? shared_response + j : next++);
    }
  }
  size_ = next;
}

MixtureModel MixtureParameterization::Unpack(
    std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != size_) {
    throw ValidationError("parameter vector has wrong length");
  }
  MixtureModel m;
  std::vector<double> logits(n_components(), 0.0);
  for (int c = 1; c < n_components(); ++c) logits[c] = theta[c - 1];
  m.log_weights = LogNormalize(std::move(logits));
  std::vector<double> local;
  for (int c = 0; c < n_components(); ++c) {
    local.resize(index_[c].size());
    for (size_t j = 0; j < local.size(); ++j) local[j] = theta[index_[c][j]];
    m.components.push_back(ComponentWithParams(prototypes_[c], local));
  }
  return m;
}

std::vector<double> MixtureParameterization::Pack(
    const MixtureModel& model) const {
  if (model.size() != n_components()) {
    throw ValidationError("model has wrong number of components");
  }
  std::vector<double> theta(size_, 0.0);
  for (int c = 1; c < n_components(); ++c) {
    theta[c - 1] = model.log_weights[c] - model.log_weights[0];
  }
  // Written in reverse so that tied slots end up holding component 0.
  for (int c = n_components() - 1; c >= 0; --c) {
    std::vector<double> local(ComponentParamCount(model.components[c]));
    if (local.size() != index_[c].size()) {
      throw ValidationError("component structure does not match");
    }
    ComponentGetParams(model.components[c], local);
    for (size_t j = 0; j < local.size(); ++j) theta[index_[c][j]] = local[j];
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Objective

MixtureObjective::MixtureObjective(const Dataset& dataset,
                                   MixtureParameterization param, int threads)
    : param_(std::move(param)), threads_(threads) {
  data_.reserve(dataset.traces.size());
  for (const Trace& tr : dataset.traces) {
    data_.push_back(PrepareObserved(tr.events));
    if (data_.back().times.empty()) {
      throw DomainError("trace " + tr.id + " has no outcomes");
    }
  }
}

double MixtureObjective::LogLikelihood(std::span<const double> theta) const {
  const MixtureModel m = param_.Unpack(theta);
  std::vector<ComponentEvaluator> ev;
  for (const auto& c : m.components) ev.emplace_back(c);
  std::vector<double> ll(data_.size());
  ParallelFor(data_.size(), [&](size_t i) {
    std::vector<double> terms(m.size());
    for (int k = 0; k < m.size(); ++k) {
      terms[k] = m.log_weights[k] + ev[k].LogLikelihood(data_[i]);
    }
    ll[i] = LogSumExp(terms);
  }, threads_);
  double total = 0.0;
  for (double v : ll) total += v;
  return total;
}

double MixtureObjective::LogLikelihoodGradient(std::span<const double> theta,
                                               std::span<double> grad) const {
  const MixtureModel m = param_.Unpack(theta);
  const int k_count = m.size();
  const int p = param_.size();
  std::vector<ComponentEvaluator> ev;
  for (const auto& c : m.components) ev.emplace_back(c);

  std::vector<double> ll(data_.size());
  std::vector<std::vector<double>> per_trace(data_.size());
  ParallelFor(data_.size(), [&](size_t i) {
    std::vector<double> terms(k_count);
    std::vector<std::vector<double>> local(k_count);
    for (int k = 0; k < k_count; ++k) {
      local[k].assign(ev[k].param_count(), 0.0);
      terms[k] = m.log_weights[k] +
                 ev[k].LogLikelihoodGradient(data_[i], local[k]);
    }
    const double lse = LogSumExp(terms);
    ll[i] = lse;
    std::vector<double>& g = per_trace[i];
    g.assign(p, 0.0);
    for (int k = 0; k < k_count; ++k) {
      const double post = std::exp(terms[k] - lse);
      const std::vector<int>& idx = param_.LocalToGlobal(k);
      for (size_t j = 0; j < idx.size(); ++j) g[idx[j]] += post * local[k][j];
      if (k > 0) g[k - 1] += post - std::exp(m.log_weights[k]);
    }
  }, threads_);

  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < data_.size(); ++i) {
    total += ll[i];
    for (int j = 0; j < p; ++j) grad[j] += per_trace[i][j];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Families and initialization

GPComponent FamilyPrototype(const FitConfig& config,
                            const std::set<std::string>& vocabulary,
                            bool with_response) {
  GPComponent c;
  if (config.family == OutcomeFamily::kSplineMatern) {
    c.mean = ClampedCubicSpline(config.spline_lo, config.spline_hi,
                                std::vector<double>(kSplineDim, 0.0));
    c.kernel = Sum({Matern32{0.04, 8.0}, WhiteNoise{0.1}});
    c.response_mode = ResponseMode::kSaturating;
    if (with_response) {
      for (const auto& a : vocabulary) {
        c.response[a] = SaturatingResponse{config.effect_window, 0.0};
      }
    }
  } else {
    c.mean = ZeroMean{};
    c.kernel = Sum({QuadPoly{}, IOU{1.0, 1.0}, WhiteNoise{0.1}});
    c.response_mode = ResponseMode::kAdditive;
    if (with_response) {
      for (const auto& a : vocabulary) {
        c.response[a] = ResponseParams{0.0, 1.1, 0.9, 0.0, 1.0};
      }
    }
  }
  return c;
}

std::vector<std::vector<double>> TraceSplineCoefficients(
    const Dataset& dataset, double lo, double hi) {
  return ToVectors(
      FitBasis(dataset, SplineBasisFn(lo, hi), kSplineDim, 1.0).coeffs);
}

std::vector<std::vector<double>> KMeans(
    const std::vector<std::vector<double>>& points, int k, uint64_t seed,
    std::vector<int>* assignment) {
  const size_t n = points.size();
  if (k < 1 || n < static_cast<size_t>(k)) {
    throw ConfigError("k-means needs at least k points");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> centers;
  centers.push_back(
      points[std::uniform_int_distribution<size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[i] = std::min(d2[i], SquaredDistance(points[i], c));
      total += d2[i];
    }
    size_t pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n && u >= d2[pick]; ++pick) u -= d2[pick];
    } else {
      pick = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    }
    centers.push_back(points[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = SquaredDistance(points[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = SquaredDistance(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    const size_t dim = points[0].size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (size_t j = 0; j < dim; ++j) sums[assign[i]][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the old center
      for (size_t j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / counts[c];
    }
  }
  if (assignment) *assignment = std::move(assign);
  return centers;
}

MixtureModel InitialModel(const Dataset& dataset, const FitConfig& config,
                          bool with_response) {
  ValidateFitConfig(config);
  CheckFitData(dataset, config.n_components);
  const int k = config.n_components;
  const GPComponent proto =
      FamilyPrototype(config, Vocabulary(dataset), with_response);
  std::mt19937_64 rng(MixSeed(config.seed, 0x1417));
  std::lognormal_distribution<double> lognormal(0.0, 0.1);
  std::normal_distribution<double> normal(0.0, 0.1);
  const bool random = config.init_strategy == InitStrategy::kRandomLogNormal;

  MixtureModel m;
  m.components.assign(k, proto);
  m.log_weights.assign(k, -std::log(static_cast<double>(k)));

  if (config.family == OutcomeFamily::kSplineMatern) {
    const BasisFits fits =
        FitBasis(dataset, SplineBasisFn(config.spline_lo, config.spline_hi),
                 kSplineDim, 1.0);
    std::vector<int> assign;
    std::vector<std::vector<double>> centers =
        KMeans(ToVectors(fits.coeffs), k, config.seed, &assign);
    const double var = std::max(fits.residual_var, 1e-4) +
                       (random ? 0.5 * OutcomeVariance(dataset) : 0.0);
    for (int c = 0; c < k; ++c) {
      GPComponent& comp = m.components[c];
      std::vector<double> coeffs = centers[c];
      if (random) {
        for (int j = 0; j < kSplineDim; ++j) coeffs[j] = fits.pooled[j] + normal(rng);
      }
      comp.mean = ClampedCubicSpline(config.spline_lo, config.spline_hi, coeffs);
      const double jl = random ? lognormal(rng) : 1.0;
      const double jv = random ? lognormal(rng) : 1.0;
      const double jn = random ? lognormal(rng) : 1.0;
      comp.kernel = Sum({Matern32{0.6 * var * jv,
                                  (config.spline_hi - config.spline_lo) / 3 * jl},
                         WhiteNoise{std::sqrt(0.4 * var) * jn}});
      for (auto& [_, r] : comp.response) {
        std::get<SaturatingResponse>(r).effect = random ? normal(rng) : 0.0;
      }
    }
    if (!random) m.log_weights = WeightsFromAssignment(assign, k);
  } else {
    const BasisFits fits = FitBasis(dataset, QuadBasisFn(), 3, 1.0);
    std::vector<int> assign;
    KMeans(ToVectors(fits.coeffs), k, config.seed, &assign);
    const double var = std::max(fits.residual_var, 1e-4);
    const double horizon = MeanHorizon(dataset);
    auto second_moment = [&](int cls) {
      Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
      int n = 0;
      for (size_t i = 0; i < fits.coeffs.size(); ++i) {
        if (cls >= 0 && assign[i] != cls) continue;
        s += fits.coeffs[i] * fits.coeffs[i].transpose();
        ++n;
      }
      s /= std::max(n, 1);
      Eigen::Matrix3d reg = Eigen::Matrix3d::Zero();
      for (int j = 0; j < 3; ++j) {
        reg(j, j) = 0.1 * s(j, j) + 1e-6 * std::pow(horizon, -2.0 * j);
      }
      return Eigen::Matrix3d(s + reg);
    };
    for (int c = 0; c < k; ++c) {
      GPComponent& comp = m.components[c];
      if (random) {
        const double alpha = lognormal(rng);
        comp.kernel = Sum({QuadPoly{}, IOU{alpha, lognormal(rng)},
                           WhiteNoise{std::sqrt(0.3 * var) * lognormal(rng)}});
      } else {
        const double alpha = 1.0;
        comp.kernel = Sum({QuadPoly{second_moment(config.share_kernel ? -1 : c)},
                           IOU{alpha, alpha * std::sqrt(2.0 * var / horizon)},
                           WhiteNoise{std::sqrt(0.3 * var)}});
      }
      for (auto& [_, r] : comp.response) {
        ResponseParams& p = std::get<ResponseParams>(r);
        if (random) {
          p = ResponseParams{normal(rng), lognormal(rng), lognormal(rng),
                             normal(rng), lognormal(rng)};
        }
      }
    }
    if (!random) m.log_weights = WeightsFromAssignment(assign, k);
  }
  return m;
}

std::vector<double> InitParameters(const Dataset& dataset,
                                   const FitConfig& config, int component,
                                   bool with_response) {
  if (component < 0 || component >= config.n_components) {
    throw ConfigError("component index out of range");
  }
  const MixtureModel m = InitialModel(dataset, config, with_response);
  std::vector<double> out(ComponentParamCount(m.components[component]));
  ComponentGetParams(m.components[component], out);
  return out;
}

FitResult FitCgp(const Dataset& dataset, const FitConfig& config) {
  return FitImpl(dataset, config, /*with_response=*/true);
}

FitResult FitBaseline(const Dataset& dataset, const FitConfig& config) {
  return FitImpl(dataset, config, /*with_response=*/false);
}

// ---------------------------------------------------------------------------
// Event and action model

std::vector<std::optional<double>> RecentOutcomeFeature(const Trace& trace,
                                                        double window) {
  std::vector<std::optional<double>> out;
  out.reserve(trace.events.size());
  for (const Event& e : trace.events) {
    double sum = 0.0;
    int n = 0;
    for (const Event& o : trace.events) {
      if (o.y && o.t > e.t - window && o.t <= e.t) {
        sum += *o.y;
        ++n;
      }
    }
    out.push_back(n > 0 ? std::optional<double>(sum / n) : std::nullopt);
  }
  return out;
}

EventActionModel FitEventActionModel(const Dataset& dataset,
                                     double feature_window) {
  if (!(feature_window > 0)) throw ConfigError("feature window must be > 0");
  double events = 0.0, horizon = 0.0;
  std::vector<double> x, y;
  for (const Trace& tr : dataset.traces) {
    events += static_cast<double>(tr.events.size());
    horizon += tr.tau;
    const auto feature = RecentOutcomeFeature(tr, feature_window);
    for (size_t i = 0; i < tr.events.size(); ++i) {
      if (!feature[i]) continue;
      x.push_back(*feature[i]);
      y.push_back(tr.events[i].a ? 1.0 : 0.0);
    }
  }
  if (events == 0 || horizon <= 0) {
    throw DomainError("dataset has no events; event rate is degenerate");
  }
  EventActionModel m;
  m.lambda = events / horizon;
  m.feature_window = feature_window;

  // Newton iterations on (weight, bias); clipping keeps separable or
  // single-label data finite.
  double w = 0.0, b = 0.0;
  for (int iter = 0; iter < 100 && !x.empty(); ++iter) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (size_t i = 0; i < x.size(); ++i) {
      const double p = Sigmoid(w * x[i] + b);
      const Eigen::Vector2d phi(x[i], 1.0);
      g += (y[i] - p) * phi;
      h += p * (1.0 - p) * phi * phi.transpose();
    }
    h.diagonal().array() += 1e-9;
    const Eigen::Vector2d step = h.ldlt().solve(g);
    const double nw = std::clamp(w + step[0], -kClip, kClip);
    const double nb = std::clamp(b + step[1], -kClip, kClip);
    const double moved = std::abs(nw - w) + std::abs(nb - b);
    w = nw;
    b = nb;
    if (!(moved > 1e-12)) break;
  }
  m.action_weight = w;
  m.action_bias = b;
  return m;
}

AdjustedObjective EvaluateAdjustedObjective(const MixtureModel& model,
                                            const EventActionModel& eam,
                                            const Dataset& dataset) {
  AdjustedObjective o;
  const double log_lambda = std::log(eam.lambda);
  double horizon = 0.0;
  for (const Trace& tr : dataset.traces) {
    o.outcome_term += MixtureLogLikelihood(model, tr);
    o.event_term += log_lambda * static_cast<double>(tr.events.size());
    horizon += tr.tau;
    const auto feature = RecentOutcomeFeature(tr, eam.feature_window);
    for (size_t i = 0; i < tr.events.size(); ++i) {
      if (!feature[i]) continue;
      const double z = eam.action_weight * *feature[i] + eam.action_bias;
      o.action_term += tr.events[i].a ? LogSigmoid(z) : LogSigmoid(-z);
    }
  }
  o.integral_term = eam.lambda * horizon;
  o.total = o.outcome_term + o.event_term + o.action_term - o.integral_term;
  return o;
}

}  // namespace cgp
