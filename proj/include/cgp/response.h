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

// Treatment response functions: the additive short/long-term response curve
// and the saturating fixed-window effect.

#ifndef CGP_RESPONSE_H_
#define CGP_RESPONSE_H_

#include <array>
#include <span>
#include <string>
#include <variant>

namespace cgp {

// g(delta) = g_s(delta; h1, a, b) + g_l(delta; h2, r), with
//   g_s = h1 a / (a - b) (exp(-b delta) - exp(-a delta))
//   g_l = h2 (1 - exp(-r delta)).
struct ResponseParams {
  double h1 = 0.0;
  double a = 1.0;
  double b = 1.0;
  double h2 = 0.0;
  double r = 1.0;
  bool operator==(const ResponseParams&) const = default;
};

// Adds `effect` while any action lies in (t - window, t). Overlapping actions
// do not stack.
struct SaturatingResponse {
  double window = 2.0;
  double effect = 0.0;
  bool operator==(const SaturatingResponse&) const = default;
};

enum class ResponseMode { kAdditive, kSaturating };

using ActionResponse = std::variant<ResponseParams, SaturatingResponse>;

const char* ResponseModeName(ResponseMode mode);
ResponseMode ResponseModeFromName(const std::string& name);
ResponseMode ModeOf(const ActionResponse& r);

void ValidateResponse(const ActionResponse& r);

// Response `delta` hours after one action; delta must be >= 0. The a == b
// case evaluates the continuous limit h1 a delta exp(-a delta).
double Response(const ResponseParams& p, double delta);

// d g / d [h1, log a, log b, h2, log r].
std::array<double, 5> ResponseGradient(const ResponseParams& p, double delta);

// Summed (additive) or saturated effect at time t of actions at the given
// times. Only actions strictly before t contribute.
double CumulativeResponse(const ActionResponse& r,
                          std::span<const double> action_times, double t);

// Unconstrained parameterization: additive [h1, log a, log b, h2, log r];
// saturating [effect] (the window is structural and not learned).
int ResponseParamCount(const ActionResponse& r);
void ResponseGetParams(const ActionResponse& r, std::span<double> out);
ActionResponse ResponseWithParams(const ActionResponse& r,
                                  std::span<const double> params);

// Accumulates scale * d CumulativeResponse / d params into out.
void CumulativeResponseGradient(const ActionResponse& r,
                                std::span<const double> action_times, double t,
                                double scale, std::span<double> out);

}  // namespace cgp

#endif  // CGP_RESPONSE_H_
