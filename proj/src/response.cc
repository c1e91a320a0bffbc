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

#include "cgp/response.h"

#include <cmath>

#include "cgp/errors.h"

namespace cgp {
namespace {

// (1 - exp(-x)) / x and its derivative, accurate near x = 0.
double Phi1(double x) {
  if (std::abs(x) < 1e-3) {
    return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
  }
  return -std::expm1(-x) / x;
}

double Phi1Prime(double x) {
  if (std::abs(x) < 1e-3) {
    return -0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0;
  }
  return (x * std::exp(-x) + std::expm1(-x)) / (x * x);
}

// (exp(-b d) - exp(-a d)) / (a - b), which tends to d exp(-a d) as b -> a.
double Difference(double a, double b, double delta) {
  return std::exp(-b * delta) * delta * Phi1((a - b) * delta);
}

}  // namespace

const char* ResponseModeName(ResponseMode mode) {
  return mode == ResponseMode::kAdditive ? "additive" : "saturating";
}

ResponseMode ResponseModeFromName(const std::string& name) {
  if (name == "additive") return ResponseMode::kAdditive;
  if (name == "saturating") return ResponseMode::kSaturating;
  throw ValidationError("unknown response mode '" + name + "'");
}

ResponseMode ModeOf(const ActionResponse& r) {
  return std::holds_alternative<ResponseParams>(r) ? ResponseMode::kAdditive
                                                   : ResponseMode::kSaturating;
}

void ValidateResponse(const ActionResponse& r) {
  if (const auto* p = std::get_if<ResponseParams>(&r)) {
    if (!(p->a > 0) || !(p->b > 0) || !(p->r > 0)) {
      throw ValidationError("response rates a, b, r must be positive");
    }
    if (!std::isfinite(p->h1) || !std::isfinite(p->h2) ||
        !std::isfinite(p->a) || !std::isfinite(p->b) || !std::isfinite(p->r)) {
      throw ValidationError("non-finite response parameter");
    }
  } else {
    const auto& s = std::get<SaturatingResponse>(r);
    if (!(s.window > 0) || !std::isfinite(s.effect)) {
      throw ValidationError("saturating response needs window > 0");
    }
  }
}

double Response(const ResponseParams& p, double delta) {
  const double short_term = p.h1 * p.a * Difference(p.a, p.b, delta);
  const double long_term = -p.h2 * std::expm1(-p.r * delta);
  return short_term + long_term;
}

std::array<double, 5> ResponseGradient(const ResponseParams& p, double delta) {
  const double eb = std::exp(-p.b * delta);
  const double x = (p.a - p.b) * delta;
  const double d = eb * delta * Phi1(x);
  const double dd_da = eb * delta * delta * Phi1Prime(x);
  const double dd_db = -delta * d - dd_da;
  std::array<double, 5> g;
  g[0] = p.a * d;
  g[1] = p.a * p.h1 * (d + p.a * dd_da);
  g[2] = p.b * p.h1 * p.a * dd_db;
  g[3] = -std::expm1(-p.r * delta);
  g[4] = p.r * p.h2 * delta * std::exp(-p.r * delta);
  return g;
}

double CumulativeResponse(const ActionResponse& r,
                          std::span<const double> action_times, double t) {
  if (const auto* p = std::get_if<ResponseParams>(&r)) {
    double total = 0.0;
    for (double t0 : action_times) {
      if (t0 < t) total += Response(*p, t - t0);
    }
    return total;
  }
  const auto& s = std::get<SaturatingResponse>(r);
  for (double t0 : action_times) {
    const double delta = t - t0;
    if (delta > 0 && delta <= s.window) return s.effect;
  }
  return 0.0;
}

int ResponseParamCount(const ActionResponse& r) {
  return std::holds_alternative<ResponseParams>(r) ? 5 : 1;
}

void ResponseGetParams(const ActionResponse& r, std::span<double> out) {
  if (const auto* p = std::get_if<ResponseParams>(&r)) {
    out[0] = p->h1;
    out[1] = std::log(p->a);
    out[2] = std::log(p->b);
    out[3] = p->h2;
    out[4] = std::log(p->r);
  } else {
    out[0] = std::get<SaturatingResponse>(r).effect;
  }
}

ActionResponse ResponseWithParams(const ActionResponse& r,
                                  std::span<const double> params) {
  if (std::holds_alternative<ResponseParams>(r)) {
    return ResponseParams{params[0], std::exp(params[1]), std::exp(params[2]),
                          params[3], std::exp(params[4])};
  }
  SaturatingResponse s = std::get<SaturatingResponse>(r);
  s.effect = params[0];
  return s;
}

void CumulativeResponseGradient(const ActionResponse& r,
                                std::span<const double> action_times, double t,
                                double scale, std::span<double> out) {
  if (const auto* p = std::get_if<ResponseParams>(&r)) {
    for (double t0 : action_times) {
      if (!(t0 < t)) continue;
      const auto g = ResponseGradient(*p, t - t0);
      for (int i = 0; i < 5; ++i) out[i] += scale * g[i];
    }
    return;
  }
  const auto& s = std::get<SaturatingResponse>(r);
  for (double t0 : action_times) {
    const double delta = t - t0;
    if (delta > 0 && delta <= s.window) {
      out[0] += scale;
      return;
    }
  }
}

}  // namespace cgp
