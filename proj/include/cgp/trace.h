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

// Observational traces: time-stamped outcome measurements and actions for one
// subject, plus the history/plan views used when querying a model.

#ifndef CGP_TRACE_H_
#define CGP_TRACE_H_

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace cgp {

// One point of the marked point process. At least one of `y` and `a` is set;
// a simultaneous measurement and action share a single event.
struct Event {
  double t = 0.0;
  std::optional<double> y;
  std::optional<std::string> a;

  bool has_outcome() const { return y.has_value(); }
  bool has_action() const { return a.has_value(); }
  bool operator==(const Event&) const = default;
};

struct Trace {
  std::string id;
  double tau = 24.0;
  std::vector<Event> events;

  bool operator==(const Trace&) const = default;
};

// Everything observed strictly before `cut_time`.
struct History {
  std::string trace_id;
  double cut_time = 0.0;
  std::vector<Event> events;

  bool operator==(const History&) const = default;
};

struct Action {
  std::string type;
  double time = 0.0;

  bool operator==(const Action&) const = default;
};

struct Outcome {
  double t = 0.0;
  double y = 0.0;
};

// Hypothetical future actions for a counterfactual query.
struct ActionPlan {
  std::vector<Action> actions;

  bool operator==(const ActionPlan&) const = default;
};

struct Dataset {
  std::vector<Trace> traces;
  std::set<std::string> action_vocabulary;

  bool operator==(const Dataset&) const = default;
};

// Throws ValidationError naming the trace id when an invariant fails.
void ValidateTrace(const Trace& trace);

// Throws ValidationError unless plan times are strictly increasing and all
// strictly after `after_time`.
void ValidatePlan(const ActionPlan& plan, double after_time);

// Builds a dataset (validating each trace) and collects the vocabulary.
Dataset MakeDataset(std::vector<Trace> traces);

// JSON-lines trace format: {"id", "tau", "events": [{"t", "y"?, "a"?}]}.
Trace TraceFromJson(const nlohmann::json& j, int line = 0);
nlohmann::json TraceToJson(const Trace& trace);
nlohmann::json EventsToJson(const std::vector<Event>& events);
std::vector<Event> EventsFromJson(const nlohmann::json& j, int line = 0);

Dataset ParseTraces(std::istream& in);
Dataset ParseTraces(const std::string& path);
void WriteTraces(const Dataset& dataset, std::ostream& out);
void WriteTraces(const Dataset& dataset, const std::string& path);

// Events with t < cut. Throws DomainError if cut is outside [0, tau].
History TruncateHistory(const Trace& trace, double cut);
// Re-truncation of a history; requires cut <= history.cut_time.
History TruncateHistory(const History& history, double cut);

std::vector<Outcome> OutcomesOf(const std::vector<Event>& events);
std::vector<Action> ActionsOf(const std::vector<Event>& events);
inline std::vector<Outcome> OutcomesOf(const Trace& t) {
  return OutcomesOf(t.events);
}
inline std::vector<Action> ActionsOf(const Trace& t) {
  return ActionsOf(t.events);
}

}  // namespace cgp

#endif  // CGP_TRACE_H_
