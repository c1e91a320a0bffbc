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

// Mean functions: zero, or a cubic B-spline over a clamped knot vector.

#ifndef CGP_MEAN_H_
#define CGP_MEAN_H_

#include <span>
#include <variant>
#include <vector>

namespace cgp {

struct ZeroMean {
  bool operator==(const ZeroMean&) const = default;
};

struct BSplineMean {
  int degree = 3;
  std::vector<double> knots;   // size = coeffs.size() + degree + 1
  std::vector<double> coeffs;
  bool operator==(const BSplineMean&) const = default;
};

struct MeanSpec {
  std::variant<ZeroMean, BSplineMean> v;

  MeanSpec() = default;
  template <typename T>
  MeanSpec(T m) : v(std::move(m)) {}  // NOLINT

  bool operator==(const MeanSpec&) const = default;
};

// Cubic spline with clamped ends and uniformly spaced interior knots on
// [lo, hi]. Five coefficients give a single interior knot at the midpoint.
BSplineMean ClampedCubicSpline(double lo, double hi,
                               std::vector<double> coeffs);

void ValidateMean(const MeanSpec& spec);

// Values of all basis functions at t. Points outside the knot span are
// clamped to its boundary.
std::vector<double> BSplineBasis(const BSplineMean& spline, double t);

double MeanEval(const MeanSpec& spec, double t);

// Coefficients are already unconstrained; the zero mean has no parameters.
int MeanParamCount(const MeanSpec& spec);
void MeanGetParams(const MeanSpec& spec, std::span<double> out);
MeanSpec MeanWithParams(const MeanSpec& spec, std::span<const double> params);

}  // namespace cgp

#endif  // CGP_MEAN_H_
