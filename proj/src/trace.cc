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

#include "cgp/trace.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "cgp/errors.h"

namespace cgp {

using nlohmann::json;

void ValidateTrace(const Trace& trace) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("trace '" + trace.id + "': " + what);
  };
  if (trace.id.empty()) fail("empty id");
  if (!std::isfinite(trace.tau) || trace.tau < 0) fail("tau must be >= 0");
  for (size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (!std::isfinite(e.t)) fail("non-finite event time");
    if (e.t < 0 || e.t > trace.tau) {
      fail("event time " + std::to_string(e.t) + " outside [0, tau]");
    }
    if (!e.has_outcome() && !e.has_action()) {
      fail("event at t=" + std::to_string(e.t) +
           " carries neither outcome nor action");
    }
    if (e.y && !std::isfinite(*e.y)) fail("non-finite outcome");
    if (e.a && e.a->empty()) fail("empty action type");
    if (i > 0 && !(trace.events[i - 1].t < e.t)) {
      fail("events not strictly sorted by time at index " + std::to_string(i));
    }
  }
}

void ValidatePlan(const ActionPlan& plan, double after_time) {
  for (size_t i = 0; i < plan.actions.size(); ++i) {
    const Action& a = plan.actions[i];
    if (a.type.empty()) throw ValidationError("plan: empty action type");
    if (!std::isfinite(a.time) || !(a.time > after_time)) {
      throw ValidationError("plan: action time " + std::to_string(a.time) +
                            " must be after " + std::to_string(after_time));
    }
    if (i > 0 && !(plan.actions[i - 1].time < a.time)) {
      throw ValidationError("plan: action times must be strictly increasing");
    }
  }
}

Dataset MakeDataset(std::vector<Trace> traces) {
  Dataset d;
  for (const Trace& t : traces) {
    ValidateTrace(t);
    for (const Event& e : t.events) {
      if (e.a) d.action_vocabulary.insert(*e.a);
    }
  }
  d.traces = std::move(traces);
  return d;
}

std::vector<Event> EventsFromJson(const json& j, int line) {
  if (!j.is_array()) throw ParseError(line, "'events' must be an array");
  std::vector<Event> events;
  events.reserve(j.size());
  for (const json& je : j) {
    if (!je.is_object()) throw ParseError(line, "event must be an object");
    Event e;
    auto t = je.find("t");
    if (t == je.end() || !t->is_number()) {
      throw ParseError(line, "event missing numeric 't'");
    }
    e.t = t->get<double>();
    if (auto y = je.find("y"); y != je.end() && !y->is_null()) {
      if (!y->is_number()) throw ParseError(line, "'y' must be a number");
      e.y = y->get<double>();
    }
    if (auto a = je.find("a"); a != je.end() && !a->is_null()) {
      if (!a->is_string()) throw ParseError(line, "'a' must be a string");
      e.a = a->get<std::string>();
    }
    events.push_back(std::move(e));
  }
  return events;
}

Trace TraceFromJson(const json& j, int line) {
  if (!j.is_object()) throw ParseError(line, "trace must be a JSON object");
  Trace trace;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) {
    throw ParseError(line, "missing string 'id'");
  }
  trace.id = id->get<std::string>();
  if (auto tau = j.find("tau"); tau != j.end()) {
    if (!tau->is_number()) throw ParseError(line, "'tau' must be a number");
    trace.tau = tau->get<double>();
  }
  auto events = j.find("events");
  if (events == j.end()) throw ParseError(line, "missing 'events'");
  trace.events = EventsFromJson(*events, line);
  return trace;
}

json EventsToJson(const std::vector<Event>& events) {
  json arr = json::array();
  for (const Event& e : events) {
    json je = {{"t", e.t}};
    if (e.y) je["y"] = *e.y;
    if (e.a) je["a"] = *e.a;
    arr.push_back(std::move(je));
  }
  return arr;
}

json TraceToJson(const Trace& trace) {
  return {{"id", trace.id}, {"tau", trace.tau},
          {"events", EventsToJson(trace.events)}};
}

Dataset ParseTraces(std::istream& in) {
  std::vector<Trace> traces;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    traces.push_back(TraceFromJson(j, line));
  }
  return MakeDataset(std::move(traces));
}

Dataset ParseTraces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  return ParseTraces(in);
}

void WriteTraces(const Dataset& dataset, std::ostream& out) {
  for (const Trace& t : dataset.traces) out << TraceToJson(t).dump() << '\n';
}

void WriteTraces(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteTraces(dataset, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

History TruncateHistory(const Trace& trace, double cut) {
  if (!(cut >= 0 && cut <= trace.tau)) {
    throw DomainError("cut time " + std::to_string(cut) + " outside [0, " +
                      std::to_string(trace.tau) + "] for trace '" + trace.id +
                      "'");
  }
  History h{trace.id, cut, {}};
  for (const Event& e : trace.events) {
    if (e.t < cut) h.events.push_back(e);
  }
  return h;
}

History TruncateHistory(const History& history, double cut) {
  if (!(cut >= 0 && cut <= history.cut_time)) {
    throw DomainError("cut time " + std::to_string(cut) +
                      " past the history's own cut");
  }
  History h{history.trace_id, cut, {}};
  for (const Event& e : history.events) {
    if (e.t < cut) h.events.push_back(e);
  }
  return h;
}

std::vector<Outcome> OutcomesOf(const std::vector<Event>& events) {
  std::vector<Outcome> out;
  for (const Event& e : events) {
    if (e.y) out.push_back({e.t, *e.y});
  }
  return out;
}

std::vector<Action> ActionsOf(const std::vector<Event>& events) {
  std::vector<Action> out;
  for (const Event& e : events) {
    if (e.a) out.push_back({*e.a, e.t});
  }
  return out;
}

}  // namespace cgp
