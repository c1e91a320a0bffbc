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

#include "cgp/optimize.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "cgp/errors.h"

namespace cgp {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

double InfNorm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

MinimizeResult Minimize(const ObjectiveWithGradient& f, std::vector<double> x0,
                        const MinimizeOptions& options) {
  const Eigen::Index n = static_cast<Eigen::Index>(x0.size());
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(x0.data(), n);
  Eigen::VectorXd g(n);
  double fx = f(std::span<const double>(x.data(), n), std::span<double>(g.data(), n));
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw NumericalError("objective not finite at the starting point");
  }

  MinimizeResult result;
  result.history.push_back(fx);
  auto finish = [&](bool converged, std::string message) {
    result.x.assign(x.data(), x.data() + n);
    result.value = fx;
    result.converged = converged;
    result.message = std::move(message);
    return result;
  };
  if (options.max_iter <= 0) return finish(false, "max_iter reached");

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  Eigen::VectorXd x_new(n), g_new(n);
  int rejections = 0;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (InfNorm(g) < options.grad_tol) return finish(true, "gradient tolerance");
    Eigen::VectorXd p = -h * g;
    double slope = g.dot(p);
    if (!(slope < 0)) {
      h.setIdentity();
      scaled = false;
      p = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    if (!scaled) step = std::min(1.0, 1.0 / std::max(InfNorm(p), 1e-300));

    bool accepted = false;
    double f_new = 0.0;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_new = x + step * p;
      f_new = f(std::span<const double>(x_new.data(), n),
                std::span<double>(g_new.data(), n));
      if (!std::isfinite(f_new) || !g_new.allFinite()) {
        if (++rejections >= options.max_rejections) {
          throw NumericalError("objective not finite for " +
                               std::to_string(rejections) +
                               " consecutive trial points");
        }
        step *= 0.5;
        continue;
      }
      rejections = 0;
      if (f_new <= fx + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      // Safeguarded quadratic interpolation of the backtracking step.
      const double denom = 2.0 * (f_new - fx - step * slope);
      double next = denom > 0 ? -slope * step * step / denom : 0.5 * step;
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    if (!accepted) {
      result.iterations = iter;
      return finish(InfNorm(g) < options.grad_tol, "line search stalled");
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    x = x_new;
    g = g_new;
    fx = f_new;
    result.history.push_back(fx);
    result.iterations = iter + 1;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
      h -= rho * (s * hy.transpose() + hy * s.transpose());
      h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose());
    }
  }
  return finish(InfNorm(g) < options.grad_tol,
                InfNorm(g) < options.grad_tol ? "gradient tolerance"
                                              : "max_iter reached");
}

std::vector<double> NumericalGradient(const Objective& f,
                                      std::span<const double> x,
                                      double rel_step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite objective while differencing "
                           "coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace cgp
