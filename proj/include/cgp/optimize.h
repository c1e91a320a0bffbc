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

// Unconstrained quasi-Newton minimization and finite-difference gradients.

#ifndef CGP_OPTIMIZE_H_
#define CGP_OPTIMIZE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cgp {

// Returns f(x) and writes the gradient into `grad`.
using ObjectiveWithGradient =
    std::function<double(std::span<const double> x, std::span<double> grad)>;
using Objective = std::function<double(std::span<const double> x)>;

struct MinimizeOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
  // Consecutive non-finite trial points tolerated before giving up.
  int max_rejections = 30;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;
  // Objective value after each accepted step, starting with f(x0).
  std::vector<double> history;
};

// BFGS on the inverse Hessian with a backtracking line search enforcing
// sufficient decrease. Stops when the gradient's infinity norm drops below
// grad_tol (converged), at max_iter, or when the line search cannot make
// progress. Throws NumericalError if f(x0) is not finite or the search meets
// `max_rejections` consecutive non-finite values.
MinimizeResult Minimize(const ObjectiveWithGradient& f, std::vector<double> x0,
                        const MinimizeOptions& options = {});

// Central differences with step rel_step * max(1, |x_i|). Throws
// NumericalError naming the coordinate if an evaluation is not finite.
std::vector<double> NumericalGradient(const Objective& f,
                                      std::span<const double> x,
                                      double rel_step = 1e-5);

}  // namespace cgp

#endif  // CGP_OPTIMIZE_H_
