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

#include "cgp/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "cgp/errors.h"
#include "cgp/parallel.h"

namespace cgp {
namespace {

// Number of pairs within runs of equal keys in a sorted sequence.
template <typename Eq>
int64_t TiedPairs(size_t n, Eq equal) {
  int64_t pairs = 0;
  size_t run = 1;
  for (size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      pairs += static_cast<int64_t>(run) * static_cast<int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

// Stable merge sort of v that returns the number of inversions.
int64_t SortCountingSwaps(std::vector<double>& v, std::vector<double>& buf,
                          size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t swaps = SortCountingSwaps(v, buf, lo, mid) +
                  SortCountingSwaps(v, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

double Quantile(std::vector<double> sorted, double p) {
  std::sort(sorted.begin(), sorted.end());
  const double h = p * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

std::string Fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string Fixed3(const std::optional<double>& v) {
  return v ? Fixed3(*v) : std::string("NA");
}

}  // namespace

RiskScoreResult NormalizeRiskScores(std::vector<double> raw) {
  if (raw.empty()) throw DomainError("risk scores need a nonempty cohort");
  RiskScoreResult r;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo, range = *hi - *lo;
  r.scores.resize(raw.size());
  if (!(range > 0)) {
    r.degenerate = true;
    r.warning = "degenerate cohort: all raw risk scores equal; using 0.5";
    std::fill(r.scores.begin(), r.scores.end(), 0.5);
  } else {
    for (size_t i = 0; i < raw.size(); ++i) {
      r.scores[i] = std::clamp((raw[i] - min) / range, 0.0, 1.0);
    }
  }
  r.raw = std::move(raw);
  return r;
}

RiskScoreResult RiskScores(const MixtureModel& model,
                           const std::vector<History>& histories,
                           double horizon, int threads) {
  if (histories.empty()) throw DomainError("risk scores need a nonempty cohort");
  std::vector<double> raw(histories.size());
  const double query[] = {horizon};
  ParallelFor(histories.size(), [&](size_t i) {
    const PosteriorPrediction p = Predict(model, histories[i], ActionPlan{},
                                          query, PredictMode::kMixture);
    raw[i] = -p.mean[0];
  }, threads);
  return NormalizeRiskScores(std::move(raw));
}

RiskScoreResult RiskScores(const MixtureModel& model, const Dataset& test,
                           double cut, double horizon, int threads) {
  std::vector<History> histories;
  histories.reserve(test.traces.size());
  for (const Trace& tr : test.traces) {
    histories.push_back(TruncateHistory(tr, cut));
  }
  return RiskScores(model, histories, horizon, threads);
}

std::optional<double> KendallTau(std::span<const double> x,
                                 std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("kendall_tau: length mismatch");
  const size_t n = x.size();
  if (n < 2) throw ValidationError("kendall_tau needs at least two elements");
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("kendall_tau: non-finite input");
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const int64_t n0 = static_cast<int64_t>(n) * static_cast<int64_t>(n - 1) / 2;
  const int64_t n1 = TiedPairs(n, [&](size_t a, size_t b) {
    return x[order[a]] == x[order[b]];
  });
  const int64_t n3 = TiedPairs(n, [&](size_t a, size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });
  std::vector<double> ys(n), buf(n);
  for (size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const int64_t swaps = SortCountingSwaps(ys, buf, 0, n);
  const int64_t n2 = TiedPairs(n, [&](size_t a, size_t b) {
    return ys[a] == ys[b];
  });
  if (n0 == n1 || n0 == n2) return std::nullopt;
  const int64_t numer = n0 - n1 - n2 + n3 - 2 * swaps;
  return static_cast<double>(numer) /
         std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

double Auc(const std::vector<bool>& labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ValidationError("auc: length mismatch");
  const size_t n = labels.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  size_t n_pos = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DomainError("auc needs both positive and negative labels");
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1) / 2) / (np * static_cast<double>(n_neg));
}

std::vector<HorizonBucket> DefaultHorizonBuckets() {
  return {{0.0, 24.0}, {24.0, 48.0}};
}

std::vector<TraceErrors> FactualErrors(const MixtureModel& model,
                                       const std::vector<Trace>& traces,
                                       std::span<const double> cuts,
                                       const std::vector<HorizonBucket>& buckets,
                                       PredictMode mode, int threads) {
  if (cuts.size() != traces.size()) {
    throw ValidationError("one cut time per trace required");
  }
  std::vector<TraceErrors> out(traces.size());
  ParallelFor(traces.size(), [&](size_t i) {
    const Trace& tr = traces[i];
    const double cut = cuts[i];
    TraceErrors& te = out[i];
    te.id = tr.id;
    te.abs_errors.assign(buckets.size(), {});
    ActionPlan plan;
    std::vector<double> query, truth;
    std::vector<size_t> bucket_of;
    for (const Event& e : tr.events) {
      if (e.a && e.t > cut) plan.actions.push_back({*e.a, e.t});
      if (!e.y || e.t <= cut) continue;
      for (size_t b = 0; b < buckets.size(); ++b) {
        const double ahead = e.t - cut;
        if (ahead > buckets[b].first && ahead <= buckets[b].second) {
          query.push_back(e.t);
          truth.push_back(*e.y);
          bucket_of.push_back(b);
          break;
        }
      }
    }
    if (query.empty()) return;
    const PosteriorPrediction p =
        Predict(model, TruncateHistory(tr, cut), plan, query, mode);
    for (size_t q = 0; q < query.size(); ++q) {
      te.abs_errors[bucket_of[q]].push_back(std::abs(p.mean[q] - truth[q]));
    }
  }, threads);
  return out;
}

HorizonMae MaeByHorizon(const std::vector<TraceErrors>& errors,
                        const std::vector<HorizonBucket>& buckets,
                        std::span<const size_t> subset) {
  HorizonMae m;
  m.buckets = buckets;
  std::vector<double> sums(buckets.size(), 0.0);
  m.counts.assign(buckets.size(), 0);
  auto add = [&](const TraceErrors& te) {
    if (te.abs_errors.size() != buckets.size()) {
      throw ValidationError("error buckets do not match");
    }
    for (size_t b = 0; b < buckets.size(); ++b) {
      for (double e : te.abs_errors[b]) sums[b] += e;
      m.counts[b] += te.abs_errors[b].size();
    }
  };
  if (subset.empty()) {
    for (const auto& te : errors) add(te);
  } else {
    for (size_t i : subset) add(errors.at(i));
  }
  for (size_t b = 0; b < buckets.size(); ++b) {
    m.mae.push_back(m.counts[b] > 0
                        ? std::optional<double>(sums[b] / m.counts[b])
                        : std::nullopt);
  }
  return m;
}

HorizonMae MaeByHorizon(const MixtureModel& model,
                        const std::vector<Trace>& traces,
                        std::span<const double> cuts,
                        const std::vector<HorizonBucket>& buckets,
                        int threads) {
  return MaeByHorizon(
      FactualErrors(model, traces, cuts, buckets, PredictMode::kMixture,
                    threads),
      buckets);
}

BootstrapCI PivotalBootstrap(const IndexStatistic& stat, size_t n, int draws,
                             double level, uint64_t seed, int threads) {
  if (n == 0) throw DomainError("bootstrap needs nonempty data");
  if (draws < 2) throw ConfigError("bootstrap needs at least two draws");
  if (!(level > 0 && level < 1)) throw ConfigError("level must be in (0, 1)");
  std::vector<size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  BootstrapCI ci;
  ci.level = level;
  ci.draws = draws;
  ci.point = stat(identity);
  if (!std::isfinite(ci.point)) {
    throw NumericalError("bootstrap statistic is not finite on the data");
  }
  std::vector<double> values(draws);
  ParallelFor(static_cast<size_t>(draws), [&](size_t d) {
    std::mt19937_64 rng(MixSeed(seed, d));
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::vector<size_t> idx(n);
    for (int attempt = 0; attempt < 2; ++attempt) {
      for (size_t& i : idx) i = pick(rng);
      const double v = stat(idx);
      if (std::isfinite(v)) {
        values[d] = v;
        return;
      }
    }
    throw NumericalError("bootstrap statistic not finite on resample " +
                         std::to_string(d) + " after a retry");
  }, threads);
  const double alpha = 1.0 - level;
  ci.lower = 2.0 * ci.point - Quantile(values, 1.0 - alpha / 2);
  ci.upper = 2.0 * ci.point - Quantile(values, alpha / 2);
  return ci;
}

BootstrapCI PivotalBootstrapMean(std::span<const double> data, int draws,
                                 double level, uint64_t seed) {
  return PivotalBootstrap(
      [&](const std::vector<size_t>& idx) {
        double s = 0.0;
        for (size_t i : idx) s += data[i];
        return s / static_cast<double>(idx.size());
      },
      data.size(), draws, level, seed);
}

const RiskRow& RiskReport::Row(const std::string& family,
                               const std::string& regime) const {
  for (const RiskRow& r : rows) {
    if (r.family == family && r.regime == regime) return r;
  }
  throw ValidationError("no report row for " + family + "/" + regime);
}

RiskReport StabilityReport(
    const std::map<std::string, std::map<std::string, MixtureModel>>& models,
    const Dataset& test, const std::map<std::string, bool>& labels,
    double cut, double horizon, int threads) {
  RiskReport report;
  std::vector<bool> truth;
  for (const Trace& tr : test.traces) {
    auto it = labels.find(tr.id);
    if (it == labels.end()) {
      throw ValidationError("no ground truth for test trace " + tr.id);
    }
    report.ids.push_back(tr.id);
    truth.push_back(it->second);
  }
  if (labels.size() != test.traces.size()) {
    throw ValidationError("ground truth ids do not match the test set");
  }
  const bool both_classes =
      std::find(truth.begin(), truth.end(), true) != truth.end() &&
      std::find(truth.begin(), truth.end(), false) != truth.end();
  if (!both_classes) {
    report.warnings.push_back("labels have a single class; AUC undefined");
  }

  for (const auto& [family, by_regime] : models) {
    if (!by_regime.count("A")) {
      throw ConfigError("family " + family + " has no regime A model");
    }
    for (const auto& [regime, model] : by_regime) {
      RiskScoreResult r = RiskScores(model, test, cut, horizon, threads);
      if (r.degenerate) {
        report.warnings.push_back(family + "/" + regime + ": " + r.warning);
      }
      report.scores[family][regime] = std::move(r.scores);
    }
    const std::vector<double>& ref = report.scores[family]["A"];
    for (const auto& [regime, scores] : report.scores[family]) {
      RiskRow row;
      row.family = family;
      row.regime = regime;
      double sum = 0.0;
      for (size_t i = 0; i < scores.size(); ++i) {
        sum += std::abs(scores[i] - ref[i]);
      }
      row.delta_from_a = sum / static_cast<double>(scores.size());
      if (scores.size() >= 2) row.tau_from_a = KendallTau(ref, scores);
      if (both_classes) row.auc = Auc(truth, scores);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void WriteRiskCsv(const RiskReport& report, std::ostream& out) {
  out << "family,regime,delta_from_A,tau_from_A,auc\n";
  for (const RiskRow& r : report.rows) {
    out << r.family << ',' << r.regime << ',' << Fixed3(r.delta_from_a) << ','
        << Fixed3(r.tau_from_a) << ',' << Fixed3(r.auc) << '\n';
  }
}

void WriteRiskTable(const RiskReport& report, std::ostream& out) {
  std::set<std::string> regimes;
  for (const RiskRow& r : report.rows) regimes.insert(r.regime);
  char line[256];
  out << "# Delta from A: mean over test traces of |score - score under A|\n";
  std::snprintf(line, sizeof(line), "%-10s %-14s", "", "");
  out << line;
  for (const auto& g : regimes) {
    std::snprintf(line, sizeof(line), " %8s", g.c_str());
    out << line;
  }
  out << '\n';
  for (const auto& [family, _] : report.scores) {
    const char* labels[] = {"Delta from A", "tau from A", "AUC"};
    for (int m = 0; m < 3; ++m) {
      std::snprintf(line, sizeof(line), "%-10s %-14s",
                    m == 0 ? family.c_str() : "", labels[m]);
      out << line;
      for (const auto& g : regimes) {
        std::string cell = "-";
        for (const RiskRow& r : report.rows) {
          if (r.family != family || r.regime != g) continue;
          cell = m == 0   ? Fixed3(r.delta_from_a)
                 : m == 1 ? Fixed3(r.tau_from_a)
                          : Fixed3(r.auc);
        }
        std::snprintf(line, sizeof(line), " %8s", cell.c_str());
        out << line;
      }
      out << '\n';
    }
  }
  for (const auto& w : report.warnings) out << "# warning: " << w << '\n';
}

}  // namespace cgp
