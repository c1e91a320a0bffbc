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

#include "cgp/service.h"

#include <cmath>
#include <cstdio>

#include "cgp/errors.h"
#include "cgp/gp.h"
#include "httplib.h"

namespace cgp {
namespace {

using nlohmann::json;

constexpr size_t kMaxQueryTimes = 10000;

// A request field that fails validation; becomes a 400 reply.
struct FieldError {
  std::string field;
  std::string message;
};

HttpReply BadRequest(const FieldError& e) {
  return {400, {{"error", "bad_request"}, {"field", e.field},
                {"message", e.message}}};
}

std::string Indexed(const std::string& name, size_t i) {
  return name + "[" + std::to_string(i) + "]";
}

double FiniteNumber(const json& j, const std::string& field) {
  if (!j.is_number()) throw FieldError{field, "must be a number"};
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw FieldError{field, "must be finite"};
  return v;
}

History ParseHistory(const json& body,
                     const std::set<std::string>& vocabulary) {
  auto it = body.find("history");
  if (it == body.end() || !it->is_object()) {
    throw FieldError{"history", "required object"};
  }
  History h;
  auto cut = it->find("cut_time");
  if (cut == it->end()) throw FieldError{"history.cut_time", "required"};
  h.cut_time = FiniteNumber(*cut, "history.cut_time");
  if (h.cut_time < 0) throw FieldError{"history.cut_time", "must be >= 0"};
  if (auto id = it->find("trace_id"); id != it->end() && id->is_string()) {
    h.trace_id = id->get<std::string>();
  }
  auto ev = it->find("events");
  if (ev == it->end()) return h;
  if (!ev->is_array()) throw FieldError{"history.events", "must be an array"};
  for (size_t i = 0; i < ev->size(); ++i) {
    const std::string field = Indexed("history.events", i);
    Event e;
    try {
      e = EventsFromJson(json::array({(*ev)[i]})).front();
    } catch (const Error& err) {
      std::string msg = err.what();
      if (msg.rfind("line 0: ", 0) == 0) msg = msg.substr(8);
      throw FieldError{field, msg};
    }
    if (!std::isfinite(e.t) || (e.y && !std::isfinite(*e.y))) {
      throw FieldError{field, "values must be finite"};
    }
    if (!e.has_outcome() && !e.has_action()) {
      throw FieldError{field, "needs 'y' or 'a'"};
    }
    if (e.a && !vocabulary.empty() && !vocabulary.contains(*e.a)) {
      throw FieldError{field + ".a", "unknown action type '" + *e.a + "'"};
    }
    if (e.t < 0 || !(e.t < h.cut_time)) {
      throw FieldError{field + ".t", "must lie in [0, cut_time)"};
    }
    if (!h.events.empty() && e.t < h.events.back().t) {
      throw FieldError{field + ".t", "events must be sorted by time"};
    }
    h.events.push_back(std::move(e));
  }
  return h;
}

ActionPlan ParsePlan(const json& body, double cut,
                     const std::set<std::string>& vocabulary) {
  ActionPlan plan;
  auto it = body.find("plan");
  if (it == body.end() || it->is_null()) return plan;
  if (!it->is_array()) throw FieldError{"plan", "must be an array"};
  for (size_t i = 0; i < it->size(); ++i) {
    const json& ja = (*it)[i];
    const std::string field = Indexed("plan", i);
    if (!ja.is_object()) throw FieldError{field, "must be an object"};
    auto type = ja.find("type");
    if (type == ja.end() || !type->is_string() ||
        type->get<std::string>().empty()) {
      throw FieldError{field + ".type", "required non-empty string"};
    }
    Action a;
    a.type = type->get<std::string>();
    if (!vocabulary.empty() && !vocabulary.contains(a.type)) {
      throw FieldError{field + ".type", "unknown action type '" + a.type + "'"};
    }
    auto time = ja.find("time");
    if (time == ja.end()) throw FieldError{field + ".time", "required"};
    a.time = FiniteNumber(*time, field + ".time");
    if (!(a.time > cut)) {
      throw FieldError{field + ".time", "must be after cut_time"};
    }
    if (!plan.actions.empty() && !(plan.actions.back().time < a.time)) {
      throw FieldError{field + ".time", "plan times must be strictly increasing"};
    }
    plan.actions.push_back(std::move(a));
  }
  return plan;
}

std::vector<double> ParseQueryTimes(const json& body, double cut) {
  auto it = body.find("query_times");
  if (it == body.end() || !it->is_array() || it->empty()) {
    throw FieldError{"query_times", "required non-empty array"};
  }
  if (it->size() > kMaxQueryTimes) {
    throw FieldError{"query_times", "at most " +
                                        std::to_string(kMaxQueryTimes) +
                                        " entries"};
  }
  std::vector<double> q;
  for (size_t i = 0; i < it->size(); ++i) {
    const std::string field = Indexed("query_times", i);
    const double t = FiniteNumber((*it)[i], field);
    if (!(t > cut)) throw FieldError{field, "must be after cut_time"};
    q.push_back(t);
  }
  return q;
}

PredictMode ParseMode(const json& body) {
  auto it = body.find("mode");
  if (it == body.end() || it->is_null()) return PredictMode::kMixture;
  if (it->is_string()) {
    const std::string m = it->get<std::string>();
    if (m == "map_class") return PredictMode::kMapClass;
    if (m == "mixture") return PredictMode::kMixture;
  }
  throw FieldError{"mode", "must be \"map_class\" or \"mixture\""};
}

std::string Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

double DefaultCutTime(const Trace& trace) { return trace.tau / 2; }

PredictionService::PredictionService(ModelFile model, Dataset traces)
    : model_(std::move(model)), traces_(std::move(traces)) {
  for (size_t i = 0; i < traces_.traces.size(); ++i) {
    if (!index_.emplace(traces_.traces[i].id, i).second) {
      throw ValidationError("duplicate trace id '" + traces_.traces[i].id +
                            "'");
    }
  }
  vocabulary_ = model_.ActionVocabulary();
  model_id_ = model_.family + "-" + Fnv1a(ModelToJson(model_).dump());
}

HttpReply PredictionService::Traces() const {
  json list = json::array();
  for (const Trace& t : traces_.traces) {
    list.push_back({{"id", t.id},
                    {"tau", t.tau},
                    {"default_cut_time", DefaultCutTime(t)},
                    {"n_events", t.events.size()}});
  }
  return {200, {{"traces", list}}};
}

HttpReply PredictionService::TraceById(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    return {404, {{"error", "not_found"}, {"message", "unknown trace '" + id + "'"}}};
  }
  const Trace& t = traces_.traces[it->second];
  return {200, {{"id", t.id},
                {"tau", t.tau},
                {"default_cut_time", DefaultCutTime(t)},
                {"events", EventsToJson(t.events)}}};
}

HttpReply PredictionService::Model() const {
  json weights = json::array();
  for (double lw : model_.model.log_weights) weights.push_back(std::exp(lw));
  return {200, {{"model_id", model_id_},
                {"family", model_.family},
                {"outcome_family", OutcomeFamilyName(model_.outcome_family)},
                {"n_components", model_.model.size()},
                {"weights", weights},
                {"action_vocabulary", vocabulary_},
                {"final_objective", model_.final_objective},
                {"converged", model_.converged}}};
}

HttpReply PredictionService::Predict(const std::string& body) const {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return BadRequest({"body", std::string("invalid JSON: ") + e.what()});
  }
  if (!req.is_object()) return BadRequest({"body", "must be a JSON object"});

  History history;
  ActionPlan plan;
  std::vector<double> query;
  PredictMode mode;
  try {
    history = ParseHistory(req, vocabulary_);
    plan = ParsePlan(req, history.cut_time, vocabulary_);
    query = ParseQueryTimes(req, history.cut_time);
    mode = ParseMode(req);
  } catch (const FieldError& e) {
    return BadRequest(e);
  }

  try {
    const PosteriorPrediction p =
        cgp::Predict(model_.model, history, plan, query, mode);
    return {200, {{"times", p.times},
                  {"mean", p.mean},
                  {"lower95", p.lower95},
                  {"upper95", p.upper95},
                  {"class_log_posterior", p.class_log_posterior},
                  {"model_id", model_id_}}};
  } catch (const Error& e) {
    return {500, {{"error", e.kind()}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", "internal_error"}, {"message", e.what()}}};
  }
}

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void Reply(httplib::Response& res, const HttpReply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(const PredictionService& service)
    : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Get("/api/traces", [&service](const httplib::Request&,
                                  httplib::Response& res) {
    Reply(res, service.Traces());
  });
  s.Get(R"(/api/trace/([^/]+))", [&service](const httplib::Request& req,
                                           httplib::Response& res) {
    Reply(res, service.TraceById(req.matches[1]));
  });
  s.Get("/api/model", [&service](const httplib::Request&,
                                 httplib::Response& res) {
    Reply(res, service.Model());
  });
  s.Post("/api/predict", [&service](const httplib::Request& req,
                                    httplib::Response& res) {
    Reply(res, service.Predict(req.body));
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json({{"error", "not_found"},
                          {"message", "no such endpoint"}})
                        .dump(),
                    "application/json");
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::Bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host)
                              : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::Listen() { impl_->server.listen_after_bind(); }

void HttpServer::Stop() { impl_->server.stop(); }

}  // namespace cgp
