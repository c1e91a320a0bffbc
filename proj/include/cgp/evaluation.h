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

// Stability and forecasting metrics: normalized risk scores, Kendall's tau-b,
// AUC, factual MAE by forecast horizon and pivotal bootstrap intervals.

#ifndef CGP_EVALUATION_H_
#define CGP_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgp/gp.h"
#include "cgp/trace.h"

namespace cgp {

struct RiskScoreResult {
  std::vector<double> scores;  // in [0, 1]
  std::vector<double> raw;     // negated predicted value at the horizon
  bool degenerate = false;
  std::string warning;
};

// Min-max normalizes raw scores over the cohort. A degenerate cohort (all
// raw scores equal) gets 0.5 everywhere and a warning.
RiskScoreResult NormalizeRiskScores(std::vector<double> raw);

// Scores each history by the negated mixture predictive mean at `horizon`
// under an empty plan. Throws DomainError for an empty cohort.
RiskScoreResult RiskScores(const MixtureModel& model,
                           const std::vector<History>& histories,
                           double horizon = 24.0, int threads = 0);
RiskScoreResult RiskScores(const MixtureModel& model, const Dataset& test,
                           double cut = 12.0, double horizon = 24.0,
                           int threads = 0);

// Tau-b in O(n log n). nullopt when either vector is constant. Throws
// ValidationError for mismatched lengths or fewer than two elements.
std::optional<double> KendallTau(std::span<const double> x,
                                 std::span<const double> y);

// Mann-Whitney statistic with half credit for ties. Throws DomainError if
// only one class is present.
double Auc(const std::vector<bool>& labels, std::span<const double> scores);

using HorizonBucket = std::pair<double, double>;  // (lo, hi] hours ahead

std::vector<HorizonBucket> DefaultHorizonBuckets();

// Absolute errors of factual predictions for one trace, per bucket.
struct TraceErrors {
  std::string id;
  std::vector<std::vector<double>> abs_errors;
};

// Conditions each trace on events before cuts[i] and predicts its later
// outcomes under the actions it actually received afterwards.
std::vector<TraceErrors> FactualErrors(
    const MixtureModel& model, const std::vector<Trace>& traces,
    std::span<const double> cuts,
    const std::vector<HorizonBucket>& buckets = DefaultHorizonBuckets(),
    PredictMode mode = PredictMode::kMixture, int threads = 0);

struct HorizonMae {
  std::vector<HorizonBucket> buckets;
  std::vector<std::optional<double>> mae;  // nullopt for an empty bucket
  std::vector<size_t> counts;
};

// Pools errors of the traces listed in `subset` (all traces when empty).
HorizonMae MaeByHorizon(const std::vector<TraceErrors>& errors,
                        const std::vector<HorizonBucket>& buckets,
                        std::span<const size_t> subset = {});
HorizonMae MaeByHorizon(
    const MixtureModel& model, const std::vector<Trace>& traces,
    std::span<const double> cuts,
    const std::vector<HorizonBucket>& buckets = DefaultHorizonBuckets(),
    int threads = 0);

struct BootstrapCI {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int draws = 0;
};

// Resamples indices 0..n-1 with replacement; `stat` maps a multiset of
// indices to a statistic. The interval is (2p - q_hi, 2p - q_lo). A
// resample with a non-finite statistic is redrawn once, then NumericalError.
using IndexStatistic = std::function<double(const std::vector<size_t>&)>;
BootstrapCI PivotalBootstrap(const IndexStatistic& stat, size_t n,
                             int draws = 1000, double level = 0.95,
                             uint64_t seed = 0, int threads = 0);
// Convenience overload for the mean of a sample.
BootstrapCI PivotalBootstrapMean(std::span<const double> data,
                                 int draws = 1000, double level = 0.95,
                                 uint64_t seed = 0);

struct RiskRow {
  std::string family;
  std::string regime;
  double delta_from_a = 0.0;
  std::optional<double> tau_from_a;
  std::optional<double> auc;
};

struct RiskReport {
  std::vector<std::string> ids;
  // family -> regime -> normalized scores
  std::map<std::string, std::map<std::string, std::vector<double>>> scores;
  std::vector<RiskRow> rows;
  std::vector<std::string> warnings;

  const RiskRow& Row(const std::string& family,
                     const std::string& regime) const;
};

// models: family -> regime -> model; every family needs regime "A".
// `labels` is keyed by trace id and must cover exactly the test ids.
RiskReport StabilityReport(
    const std::map<std::string, std::map<std::string, MixtureModel>>& models,
    const Dataset& test, const std::map<std::string, bool>& labels,
    double cut = 12.0, double horizon = 24.0, int threads = 0);

void WriteRiskCsv(const RiskReport& report, std::ostream& out);
void WriteRiskTable(const RiskReport& report, std::ostream& out);

}  // namespace cgp

#endif  // CGP_EVALUATION_H_
