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

#include "cgp/cli.h"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cgp/errors.h"
#include "cgp/evaluation.h"
#include "cgp/icu_sim.h"
#include "cgp/learning.h"
#include "cgp/model_io.h"
#include "cgp/parallel.h"
#include "cgp/service.h"
#include "cgp/simulator.h"

namespace cgp {
namespace {

struct SimulateArgs {
  std::string generator = "mpp";
  std::string regime = "A";
  int n = 1000;
  uint64_t seed = 0;
  std::string out;
  std::string truth_out;
  double cut = -1.0;
};

struct FitArgs {
  std::string in;
  std::string family = "cgp";
  std::string outcome_family = "spline_matern";
  std::string init = "spline_cluster";
  int components = 3;
  uint64_t seed = 0;
  int restarts = 5;
  int max_iter = 300;
  bool share_kernel = true;
  bool share_response = true;
  std::string out;
};

struct EvaluateArgs {
  std::vector<std::string> models;
  std::string test;
  std::string truth;
  std::string out;
  double cut = 12.0;
  double horizon = 24.0;
};

struct ServeArgs {
  std::string model;
  std::string traces;
  std::string host = "127.0.0.1";
  int port = 8080;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string FormatDouble(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void WriteIcuTruth(const IcuCohort& cohort, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  for (size_t i = 0; i < cohort.classes.size(); ++i) {
    f << nlohmann::json{{"id", cohort.dataset.traces[i].id},
                        {"class", cohort.classes[i]}}
                .dump()
      << "\n";
  }
}

int Simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.generator == "icu") {
    const IcuCohort cohort =
        SimulateIcuCohort(DefaultIcuSimConfig(), a.n, a.seed);
    WriteTraces(cohort.dataset, a.out);
    if (!a.truth_out.empty()) WriteIcuTruth(cohort, a.truth_out);
    out << "wrote " << a.n << " traces to " << a.out << "\n";
    return kExitOk;
  }
  const SimConfig config = DefaultSimConfig();
  const Policy policy = Policy::FromName(a.regime);
  SimRegime regime;
  if (a.cut >= 0) {
    regime = MakeTestSet(config, policy, a.cut, a.n, a.seed).regime;
  } else {
    regime = SimulateRegime(config, policy, a.n, a.seed);
  }
  WriteTraces(regime.dataset, a.out);
  if (!a.truth_out.empty()) WriteGroundTruth(regime.traces, a.truth_out);
  out << "wrote " << a.n << " traces to " << a.out << "\n";
  return kExitOk;
}

int Fit(const FitArgs& a, std::ostream& out) {
  FitConfig config;
  config.n_components = a.components;
  config.seed = a.seed;
  config.restarts = a.restarts;
  config.max_iter = a.max_iter;
  config.family = OutcomeFamilyFromName(a.outcome_family);
  config.init_strategy = InitStrategyFromName(a.init);
  config.share_kernel = a.share_kernel;
  config.share_response = a.share_response;
  ValidateFitConfig(config);

  const Dataset data = ParseTraces(a.in);
  const bool cgp = a.family == "cgp";
  const FitResult r = cgp ? FitCgp(data, config) : FitBaseline(data, config);

  ModelFile file;
  file.family = a.family;
  file.outcome_family = config.family;
  file.model = r.model;
  file.final_objective = r.final_objective;
  file.converged = r.converged;
  if (cgp) file.event_action_model = FitEventActionModel(data);
  WriteModel(file, a.out);

  for (const RestartDiagnostics& d : r.restarts) {
    out << "restart " << d.index << ": ";
    if (d.ok) {
      out << "objective " << FormatDouble(d.objective) << " iterations "
          << d.iterations << (d.converged ? " converged" : " not converged")
          << "\n";
    } else {
      out << "failed: " << d.message << "\n";
    }
  }
  out << "objective " << FormatDouble(r.final_objective) << "\n";
  out << "converged " << (r.converged ? "yes" : "no") << "\n";
  out << "iterations " << r.iterations << "\n";
  out << "best_restart " << r.restart_index << "\n";
  return kExitOk;
}

// "A=path" or "A=path,B=path".
std::vector<std::pair<std::string, std::string>> SplitModelSpecs(
    const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& spec : specs) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const size_t eq = item.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
        throw UsageError("--models expects REGIME=PATH, got '" + item + "'");
      }
      out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
  }
  return out;
}

int Evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto specs = SplitModelSpecs(a.models);
  for (const auto& [regime, path] : specs) {
    std::ifstream probe(path);
    if (!probe) throw UsageError("model file not found: " + path);
  }
  std::map<std::string, std::map<std::string, MixtureModel>> models;
  for (const auto& [regime, path] : specs) {
    const ModelFile f = ReadModel(path);
    const std::string family = f.family == "cgp" ? "CGP" : "Baseline";
    if (!models[family].emplace(regime, f.model).second) {
      throw UsageError("two " + family + " models for regime " + regime);
    }
  }
  const Dataset test = ParseTraces(a.test);
  std::map<std::string, bool> labels;
  for (const GroundTruth& g : ReadGroundTruth(a.truth)) labels[g.id] = g.label;

  const RiskReport report =
      StabilityReport(models, test, labels, a.cut, a.horizon);
  {
    std::ofstream csv(a.out + ".csv");
    if (!csv) throw Error("cannot open '" + a.out + ".csv'");
    WriteRiskCsv(report, csv);
    std::ofstream txt(a.out + ".txt");
    if (!txt) throw Error("cannot open '" + a.out + ".txt'");
    WriteRiskTable(report, txt);
  }
  WriteRiskTable(report, out);
  return kExitOk;
}

int RunServe(const ServeArgs& a, std::ostream& out) {
  const PredictionService service(ReadModel(a.model), ParseTraces(a.traces));
  HttpServer server(service);
  const int port = server.Bind(a.host, a.port);
  out << "serving model " << service.model_id() << " on http://" << a.host
      << ":" << port << "\n"
      << std::flush;
  server.Listen();
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Counterfactual Gaussian process toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a cohort");
  simulate->add_option("--generator", sim.generator, "mpp or icu")
      ->check(CLI::IsMember({"mpp", "icu"}));
  simulate->add_option("--regime", sim.regime, "Treatment policy")
      ->check(CLI::IsMember({"A", "B", "C", "never"}));
  simulate->add_option("--n", sim.n, "Number of traces")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Trace JSON-lines output")
      ->required();
  simulate->add_option("--truth-out", sim.truth_out, "Ground-truth output");
  simulate->add_option("--cut", sim.cut,
                       "Test-set mode: no treatment at or after this time")
      ->check(CLI::NonNegativeNumber);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture model");
  fit_cmd->add_option("--in", fit.in, "Training traces")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--model-family", fit.family, "cgp or baseline")
      ->check(CLI::IsMember({"cgp", "baseline"}));
  fit_cmd->add_option("--outcome-family", fit.outcome_family,
                      "spline_matern or iou_poly")
      ->check(CLI::IsMember({"spline_matern", "iou_poly"}));
  fit_cmd->add_option("--init", fit.init, "spline_cluster or random_lognormal")
      ->check(CLI::IsMember({"spline_cluster", "random_lognormal"}));
  fit_cmd->add_option("--components", fit.components, "Mixture size K")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed, "Random seed");
  fit_cmd->add_option("--restarts", fit.restarts, "Optimizer restarts")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iterations per restart")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--share-kernel", fit.share_kernel,
                      "Tie kernel parameters across components");
  fit_cmd->add_option("--share-response", fit.share_response,
                      "Tie response parameters across components");
  fit_cmd->add_option("--out", fit.out, "Model JSON output")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Risk-score stability report");
  evaluate->add_option("--models", ev.models, "REGIME=PATH[,REGIME=PATH...]")
      ->required();
  evaluate->add_option("--test", ev.test, "Test traces")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--truth", ev.truth, "Test ground truth")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev.out, "Output prefix for .csv and .txt")
      ->required();
  evaluate->add_option("--cut", ev.cut, "History cut time")
      ->check(CLI::NonNegativeNumber);
  evaluate->add_option("--horizon", ev.horizon, "Risk horizon")
      ->check(CLI::PositiveNumber);

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Serve predictions over HTTP");
  serve->add_option("--model", srv.model, "Model JSON")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--traces", srv.traces, "Trace JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--host", srv.host, "Bind address");
  serve->add_option("--port", srv.port, "Port (0 = ephemeral)")
      ->check(CLI::Range(0, 65535));

  std::vector<std::string> argv_store{"cgp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const int saved_threads = DefaultThreadCount();
  SetDefaultThreadCount(threads);
  int code = kExitOk;
  try {
    if (*simulate) code = Simulate(sim, out);
    if (*fit_cmd) code = Fit(fit, out);
    if (*evaluate) code = Evaluate(ev, out);
    if (*serve) code = RunServe(srv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    code = kExitUsage;
  } catch (const Error& e) {
    err << "error (" << e.kind() << "): " << e.what() << "\n";
    code = kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = kExitFailure;
  }
  SetDefaultThreadCount(saved_threads);
  return code;
}

}  // namespace cgp
