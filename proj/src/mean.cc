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

#include "cgp/mean.h"

#include <algorithm>
#include <cmath>

#include "cgp/errors.h"

namespace cgp {

BSplineMean ClampedCubicSpline(double lo, double hi,
                               std::vector<double> coeffs) {
  constexpr int kDegree = 3;
  const int n = static_cast<int>(coeffs.size());
  if (n <= kDegree) throw ValidationError("cubic spline needs >= 4 coeffs");
  BSplineMean s;
  s.degree = kDegree;
  const int interior = n - kDegree - 1;
  for (int i = 0; i <= kDegree; ++i) s.knots.push_back(lo);
  for (int i = 1; i <= interior; ++i) {
    s.knots.push_back(lo + (hi - lo) * i / (interior + 1));
  }
  for (int i = 0; i <= kDegree; ++i) s.knots.push_back(hi);
  s.coeffs = std::move(coeffs);
  return s;
}

void ValidateMean(const MeanSpec& spec) {
  const auto* s = std::get_if<BSplineMean>(&spec.v);
  if (s == nullptr) return;
  if (s->degree < 0) throw ValidationError("negative spline degree");
  if (s->knots.size() != s->coeffs.size() + s->degree + 1) {
    throw ValidationError("knot count must equal coeffs + degree + 1");
  }
  if (!std::is_sorted(s->knots.begin(), s->knots.end())) {
    throw ValidationError("spline knots must be ascending");
  }
  if (!(s->knots[s->degree] < s->knots[s->coeffs.size()])) {
    throw ValidationError("spline knot span is empty");
  }
  for (double c : s->coeffs) {
    if (!std::isfinite(c)) throw ValidationError("non-finite coefficient");
  }
}

std::vector<double> BSplineBasis(const BSplineMean& s, double t) {
  const int p = s.degree;
  const int n = static_cast<int>(s.coeffs.size());
  const std::vector<double>& u = s.knots;
  const double lo = u[p];
  const double hi = u[n];
  t = std::clamp(t, lo, hi);

  // Knot interval u[span] <= t < u[span + 1]; the right end belongs to the
  // last non-empty interval.
  int span = p;
  while (span < n - 1 && t >= u[span + 1]) ++span;

  // Cox-de Boor triangle over the p + 1 non-zero functions.
  std::vector<double> local(p + 1, 0.0);
  std::vector<double> left(p + 1), right(p + 1);
  local[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - u[span + 1 - j];
    right[j] = u[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : local[r] / denom;
      local[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    local[j] = saved;
  }
  std::vector<double> basis(n, 0.0);
  for (int r = 0; r <= p; ++r) basis[span - p + r] = local[r];
  return basis;
}

double MeanEval(const MeanSpec& spec, double t) {
  const auto* s = std::get_if<BSplineMean>(&spec.v);
  if (s == nullptr) return 0.0;
  const std::vector<double> b = BSplineBasis(*s, t);
  double v = 0.0;
  for (size_t i = 0; i < b.size(); ++i) v += b[i] * s->coeffs[i];
  return v;
}

int MeanParamCount(const MeanSpec& spec) {
  const auto* s = std::get_if<BSplineMean>(&spec.v);
  return s == nullptr ? 0 : static_cast<int>(s->coeffs.size());
}

void MeanGetParams(const MeanSpec& spec, std::span<double> out) {
  if (const auto* s = std::get_if<BSplineMean>(&spec.v)) {
    std::copy(s->coeffs.begin(), s->coeffs.end(), out.begin());
  }
}

MeanSpec MeanWithParams(const MeanSpec& spec, std::span<const double> params) {
  if (const auto* s = std::get_if<BSplineMean>(&spec.v)) {
    BSplineMean r = *s;
    std::copy(params.begin(), params.begin() + r.coeffs.size(),
              r.coeffs.begin());
    return r;
  }
  return spec;
}

}  // namespace cgp
