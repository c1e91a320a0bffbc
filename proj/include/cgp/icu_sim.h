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

// Synthetic ICU-style cohorts: a marker that drifts smoothly (quadratic trend
// plus integrated OU) and responds to several treatment types with short and
// long-term additive effects. Treatment is more likely when the last reading
// is high, so the observed actions are confounded with the outcome; a
// per-subject propensity adds outcome-independent variation in treatment.

#ifndef CGP_ICU_SIM_H_
#define CGP_ICU_SIM_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgp/gp.h"
#include "cgp/kernels.h"
#include "cgp/response.h"
#include "cgp/trace.h"

namespace cgp {

struct IcuClass {
  double weight = 1.0;
  KernelSpec kernel;  // QuadPoly + IOU + WhiteNoise
  std::map<std::string, ResponseParams> responses;
};

struct IcuSimConfig {
  double lambda = 0.3;  // measurements per hour
  double tau = 72.0;
  std::vector<IcuClass> classes;
  // P(treat after a reading y) = sigmoid(policy_weight * (y - threshold) + u)
  // where u ~ N(0, propensity_sd^2) is drawn once per subject.
  double policy_weight = 1.0;
  double policy_threshold = 1.5;
  double propensity_sd = 1.0;
  double action_delay = 0.25;  // hours from reading to treatment
};

// Two classes (strong and weak responders) and three dialysis-like action
// types.
IcuSimConfig DefaultIcuSimConfig();

void ValidateIcuSimConfig(const IcuSimConfig& config);

// The mixture that generated the data (additive responses per class).
MixtureModel IcuGenerativeModel(const IcuSimConfig& config);

struct IcuCohort {
  Dataset dataset;
  std::vector<int> classes;
};

// Trace i uses child seed MixSeed(seed, i); ids are "<prefix><i>".
IcuCohort SimulateIcuCohort(const IcuSimConfig& config, int n, uint64_t seed,
                            const std::string& id_prefix = "icu");

}  // namespace cgp

#endif  // CGP_ICU_SIM_H_
