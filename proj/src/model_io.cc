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

#include "cgp/model_io.h"

#include <fstream>

#include "cgp/errors.h"

namespace cgp {
namespace {

using nlohmann::json;

template <typename T>
T Field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::set<std::string> ModelFile::ActionVocabulary() const {
  std::set<std::string> v;
  for (const auto& c : model.components) {
    for (const auto& [name, _] : c.response) v.insert(name);
  }
  return v;
}

json KernelToJson(const KernelSpec& spec) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Matern32>) {
          return {{"type", "matern32"},
                  {"variance", k.variance},
                  {"lengthscale", k.lengthscale}};
        } else if constexpr (std::is_same_v<T, IOU>) {
          return {{"type", "iou"}, {"alpha", k.alpha}, {"nu", k.nu}};
        } else if constexpr (std::is_same_v<T, QuadPoly>) {
          json rows = json::array();
          for (int i = 0; i < 3; ++i) {
            rows.push_back({k.sigma(i, 0), k.sigma(i, 1), k.sigma(i, 2)});
          }
          return {{"type", "quad_poly"}, {"sigma", rows}};
        } else if constexpr (std::is_same_v<T, WhiteNoise>) {
          return {{"type", "white_noise"}, {"sigma", k.sigma}};
        } else {
          json terms = json::array();
          for (const auto& t : k.terms) terms.push_back(KernelToJson(t));
          return {{"type", "sum"}, {"terms", terms}};
        }
      },
      spec.v);
}

KernelSpec KernelFromJson(const json& j) {
  const std::string type = Field<std::string>(j, "type", "kernel");
  if (type == "matern32") {
    return Matern32{Field<double>(j, "variance", "matern32"),
                    Field<double>(j, "lengthscale", "matern32")};
  }
  if (type == "iou") {
    return IOU{Field<double>(j, "alpha", "iou"), Field<double>(j, "nu", "iou")};
  }
  if (type == "white_noise") {
    return WhiteNoise{Field<double>(j, "sigma", "white_noise")};
  }
  if (type == "quad_poly") {
    const auto rows =
        Field<std::vector<std::vector<double>>>(j, "sigma", "quad_poly");
    if (rows.size() != 3) throw ValidationError("quad_poly: sigma must be 3x3");
    QuadPoly q;
    for (int r = 0; r < 3; ++r) {
      if (rows[r].size() != 3) {
        throw ValidationError("quad_poly: sigma must be 3x3");
      }
      for (int c = 0; c < 3; ++c) q.sigma(r, c) = rows[r][c];
    }
    return q;
  }
  if (type == "sum") {
    if (!j.contains("terms") || !j["terms"].is_array()) {
      throw ValidationError("sum: missing field 'terms'");
    }
    SumKernel s;
    for (const json& t : j["terms"]) s.terms.push_back(KernelFromJson(t));
    return s;
  }
  throw ValidationError("kernel: unknown type '" + type + "'");
}

json MeanToJson(const MeanSpec& spec) {
  if (const auto* b = std::get_if<BSplineMean>(&spec.v)) {
    return {{"type", "bspline"},
            {"degree", b->degree},
            {"knots", b->knots},
            {"coeffs", b->coeffs}};
  }
  return {{"type", "zero"}};
}

MeanSpec MeanFromJson(const json& j) {
  const std::string type = Field<std::string>(j, "type", "mean");
  if (type == "zero") return ZeroMean{};
  if (type == "bspline") {
    BSplineMean b;
    b.degree = Field<int>(j, "degree", "bspline");
    b.knots = Field<std::vector<double>>(j, "knots", "bspline");
    b.coeffs = Field<std::vector<double>>(j, "coeffs", "bspline");
    return b;
  }
  throw ValidationError("mean: unknown type '" + type + "'");
}

json ResponseToJson(const ActionResponse& r) {
  if (const auto* p = std::get_if<ResponseParams>(&r)) {
    return {{"type", "additive"}, {"h1", p->h1}, {"a", p->a},
            {"b", p->b},          {"h2", p->h2}, {"r", p->r}};
  }
  const auto& s = std::get<SaturatingResponse>(r);
  return {{"type", "saturating"}, {"window", s.window}, {"effect", s.effect}};
}

ActionResponse ResponseFromJson(const json& j) {
  const std::string type = Field<std::string>(j, "type", "response");
  if (type == "additive") {
    return ResponseParams{Field<double>(j, "h1", "additive"),
                          Field<double>(j, "a", "additive"),
                          Field<double>(j, "b", "additive"),
                          Field<double>(j, "h2", "additive"),
                          Field<double>(j, "r", "additive")};
  }
  if (type == "saturating") {
    return SaturatingResponse{Field<double>(j, "window", "saturating"),
                              Field<double>(j, "effect", "saturating")};
  }
  throw ValidationError("response: unknown type '" + type + "'");
}

json ModelToJson(const ModelFile& file) {
  json components = json::array();
  for (const GPComponent& c : file.model.components) {
    json responses = json::object();
    for (const auto& [name, r] : c.response) responses[name] = ResponseToJson(r);
    components.push_back({{"mean", MeanToJson(c.mean)},
                          {"kernel", KernelToJson(c.kernel)},
                          {"response_mode", ResponseModeName(c.response_mode)},
                          {"response", responses}});
  }
  json j = {{"version", kModelFormatVersion},
            {"family", file.family},
            {"outcome_family", OutcomeFamilyName(file.outcome_family)},
            {"n_components", file.model.size()},
            {"log_weights", file.model.log_weights},
            {"components", components},
            {"final_objective", file.final_objective},
            {"converged", file.converged}};
  if (file.event_action_model) {
    const EventActionModel& e = *file.event_action_model;
    json ej = {{"lambda", e.lambda},
               {"action_weight", e.action_weight},
               {"action_bias", e.action_bias},
               {"feature_window", e.feature_window}};
    if (e.class_scales) ej["class_scales"] = *e.class_scales;
    j["event_action_model"] = ej;
  }
  return j;
}

ModelFile ModelFromJson(const json& j) {
  const int version = Field<int>(j, "version", "model");
  if (version != kModelFormatVersion) {
    throw ValidationError("model: unsupported version " +
                          std::to_string(version));
  }
  ModelFile f;
  f.family = Field<std::string>(j, "family", "model");
  if (f.family != "cgp" && f.family != "baseline") {
    throw ValidationError("model: family must be 'cgp' or 'baseline'");
  }
  try {
    f.outcome_family = OutcomeFamilyFromName(
        Field<std::string>(j, "outcome_family", "model"));
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  f.model.log_weights = Field<std::vector<double>>(j, "log_weights", "model");
  if (!j.contains("components") || !j["components"].is_array()) {
    throw ValidationError("model: missing field 'components'");
  }
  int index = 0;
  for (const json& jc : j["components"]) {
    const std::string where = "components[" + std::to_string(index++) + "]";
    GPComponent c;
    c.mean = MeanFromJson(Field<json>(jc, "mean", where));
    c.kernel = KernelFromJson(Field<json>(jc, "kernel", where));
    c.response_mode =
        ResponseModeFromName(Field<std::string>(jc, "response_mode", where));
    const json responses = jc.value("response", json::object());
    for (auto it = responses.begin(); it != responses.end(); ++it) {
      c.response[it.key()] = ResponseFromJson(it.value());
    }
    f.model.components.push_back(std::move(c));
  }
  if (Field<int>(j, "n_components", "model") != f.model.size()) {
    throw ValidationError("model: n_components does not match components");
  }
  f.final_objective = j.value("final_objective", 0.0);
  f.converged = j.value("converged", false);
  if (j.contains("event_action_model")) {
    const json& ej = j["event_action_model"];
    EventActionModel e;
    e.lambda = Field<double>(ej, "lambda", "event_action_model");
    e.action_weight = Field<double>(ej, "action_weight", "event_action_model");
    e.action_bias = Field<double>(ej, "action_bias", "event_action_model");
    e.feature_window = ej.value("feature_window", 2.0);
    if (ej.contains("class_scales")) {
      e.class_scales = ej["class_scales"].get<std::vector<double>>();
    }
    f.event_action_model = e;
  }
  ValidateModel(f.model);
  return f;
}

void WriteModel(const ModelFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << ModelToJson(file).dump(2) << '\n';
  if (!out) throw Error("failed writing model file " + path);
}

ModelFile ReadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("model file is not valid JSON: ") + e.what());
  }
  return ModelFromJson(j);
}

}  // namespace cgp
