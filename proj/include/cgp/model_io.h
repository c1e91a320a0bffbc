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

// JSON model files. A file holds one fitted mixture plus the metadata needed
// to use it: which objective produced it, the outcome family and, optionally,
// the fitted event/action model.

#ifndef CGP_MODEL_IO_H_
#define CGP_MODEL_IO_H_

#include <optional>
#include <set>
#include <string>

#include "cgp/gp.h"
#include "cgp/learning.h"
#include "json.hpp"

namespace cgp {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  std::string family = "cgp";  // "cgp" or "baseline"
  OutcomeFamily outcome_family = OutcomeFamily::kSplineMatern;
  MixtureModel model;
  std::optional<EventActionModel> event_action_model;
  double final_objective = 0.0;
  bool converged = false;

  // Action types with a response term in any component.
  std::set<std::string> ActionVocabulary() const;
};

nlohmann::json KernelToJson(const KernelSpec& spec);
KernelSpec KernelFromJson(const nlohmann::json& j);
nlohmann::json MeanToJson(const MeanSpec& spec);
MeanSpec MeanFromJson(const nlohmann::json& j);
nlohmann::json ResponseToJson(const ActionResponse& r);
ActionResponse ResponseFromJson(const nlohmann::json& j);

nlohmann::json ModelToJson(const ModelFile& file);
// Throws ValidationError naming the offending field.
ModelFile ModelFromJson(const nlohmann::json& j);

void WriteModel(const ModelFile& file, const std::string& path);
ModelFile ReadModel(const std::string& path);

}  // namespace cgp

#endif  // CGP_MODEL_IO_H_
