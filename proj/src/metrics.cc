/*
 * Copyright 2026 The ultr Authors.
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

#include "ultr/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "ultr/parallel.h"

namespace ultr {
namespace {

std::vector<std::size_t> RankOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double Gain(int label) { return std::exp2(label) - 1.0; }

double Discount(std::size_t rank) { return 1.0 / std::log2(1.0 + static_cast<double>(rank)); }

}  // namespace

std::optional<double> NdcgAtK(std::span<const int> labels, std::span<const double> scores,
                              std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (labels.size() != scores.size()) throw std::invalid_argument("labels/scores size mismatch");
  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const std::size_t depth = std::min(k, labels.size());
  double ideal_dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) ideal_dcg += Gain(ideal[r]) * Discount(r + 1);
  if (ideal_dcg <= 0.0) return std::nullopt;
  const auto order = RankOrder(scores);
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) dcg += Gain(labels[order[r]]) * Discount(r + 1);
  return dcg / ideal_dcg;
}

std::optional<double> AveragePrecision(std::span<const int> labels,
                                       std::span<const double> scores, int threshold) {
  if (labels.size() != scores.size()) throw std::invalid_argument("labels/scores size mismatch");
  const auto order = RankOrder(scores);
  std::size_t relevant = 0;
  double precision_sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] >= threshold) {
      ++relevant;
      precision_sum += static_cast<double>(relevant) / static_cast<double>(r + 1);
    }
  }
  if (relevant == 0) return std::nullopt;
  return precision_sum / static_cast<double>(relevant);
}

EvalReport Evaluate(const Dataset& dataset, std::span<const double> scores,
                    int relevance_threshold) {
  const auto offsets = dataset.QueryOffsets();
  if (scores.size() != offsets.back()) throw std::invalid_argument("one score per document required");
  const std::size_t n = dataset.queries.size();
  constexpr std::size_t kCuts = std::size(kReportCutoffs);
  // Per query: NDCG at each cutoff (NaN = skipped), then AP.
  std::vector<double> per_query(n * (kCuts + 1), std::nan(""));
  ParallelFor(n, [&](std::size_t q) {
    const auto& docs = dataset.queries[q].docs;
    std::vector<int> labels(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) labels[d] = docs[d].label;
    const auto s = scores.subspan(offsets[q], docs.size());
    for (std::size_t c = 0; c < kCuts; ++c) {
      if (auto v = NdcgAtK(labels, s, kReportCutoffs[c])) per_query[q * (kCuts + 1) + c] = *v;
    }
    if (auto ap = AveragePrecision(labels, s, relevance_threshold)) {
      per_query[q * (kCuts + 1) + kCuts] = *ap;
    }
  });
  EvalReport report;
  std::vector<double> sums(kCuts + 1, 0.0);
  std::size_t map_count = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double* row = per_query.data() + q * (kCuts + 1);
    if (std::isnan(row[0])) {
      ++report.n_queries_skipped;
    } else {
      ++report.n_queries_scored;
      for (std::size_t c = 0; c < kCuts; ++c) sums[c] += row[c];
    }
    if (std::isnan(row[kCuts])) {
      ++report.n_map_skipped;
    } else {
      ++map_count;
      sums[kCuts] += row[kCuts];
    }
  }
  for (std::size_t c = 0; c < kCuts; ++c) {
    report.ndcg_at[kReportCutoffs[c]] =
        report.n_queries_scored ? sums[c] / static_cast<double>(report.n_queries_scored) : 0.0;
  }
  report.map_score = map_count ? sums[kCuts] / static_cast<double>(map_count) : 0.0;
  return report;
}

EvalReport EvaluateModel(const Dataset& dataset, const Ensemble& model, int relevance_threshold) {
  if (model.num_features() != dataset.num_features) {
    throw std::invalid_argument("model expects " + std::to_string(model.num_features()) +
                                " features but the dataset has " +
                                std::to_string(dataset.num_features));
  }
  const auto scores = model.Predict(Densify(dataset));
  return Evaluate(dataset, scores, relevance_threshold);
}

std::string ReportToJson(const EvalReport& report) {
  nlohmann::json j;
  for (const auto& [k, v] : report.ndcg_at) j["ndcg@" + std::to_string(k)] = v;
  j["map"] = report.map_score;
  j["n_queries_scored"] = report.n_queries_scored;
  j["n_queries_skipped"] = report.n_queries_skipped;
  j["n_map_skipped"] = report.n_map_skipped;
  return j.dump(2);
}

void WriteReportCsv(const EvalReport& report, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "metric,value\n";
  for (const auto& [k, v] : report.ndcg_at) out << "ndcg@" << k << ',' << v << '\n';
  out << "map," << report.map_score << '\n';
  out << "n_queries_scored," << report.n_queries_scored << '\n';
  out << "n_queries_skipped," << report.n_queries_skipped << '\n';
  out << "n_map_skipped," << report.n_map_skipped << '\n';
  out.precision(old_precision);
}

std::vector<double> AverageRerankPositions(std::span<const std::vector<double>> scores) {
  std::size_t k = 0;
  for (const auto& s : scores) k = std::max(k, s.size());
  std::vector<double> sum(k, 0.0);
  std::vector<double> count(k, 0.0);
  for (const auto& s : scores) {
    const auto order = RankOrder(s);
    for (std::size_t r = 0; r < order.size(); ++r) {
      sum[order[r]] += static_cast<double>(r + 1);
      count[order[r]] += 1.0;
    }
  }
  std::vector<double> avg(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) avg[i] = count[i] > 0.0 ? sum[i] / count[i] : 0.0;
  return avg;
}

void WriteBiasCurvesCsv(std::span<const RoundRecord> history, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "round,position,t_plus,t_minus\n";
  for (const auto& r : history) {
    for (std::size_t i = 0; i < r.bias.positions(); ++i) {
      out << r.round << ',' << (i + 1) << ',' << r.bias.t_plus[i] << ',' << r.bias.t_minus[i]
          << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace ultr
