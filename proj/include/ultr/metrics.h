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

// Ranking evaluation (NDCG@k, MAP) and the re-ranking / bias-curve
// diagnostics.

#ifndef ULTR_METRICS_H_
#define ULTR_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ultr/data.h"
#include "ultr/gbdt.h"
#include "ultr/pairwise_debias.h"

namespace ultr {

inline constexpr std::size_t kReportCutoffs[] = {1, 3, 5, 10};

// DCG@k with gain 2^label - 1 and discount 1 / log2(1 + rank), over the
// ranking by score descending (ties: lower index first), divided by the ideal
// DCG@k. nullopt when the ideal DCG is 0.
std::optional<double> NdcgAtK(std::span<const int> labels, std::span<const double> scores,
                              std::size_t k);

// Average precision with relevance = (label >= threshold). nullopt when no
// document is relevant.
std::optional<double> AveragePrecision(std::span<const int> labels,
                                       std::span<const double> scores, int threshold = 1);

struct EvalReport {
  std::map<std::size_t, double> ndcg_at;
  double map_score = 0.0;
  std::size_t n_queries_scored = 0;
  std::size_t n_queries_skipped = 0;  // zero ideal DCG
  std::size_t n_map_skipped = 0;      // no relevant document
};

// scores: one per document in the flattened order of `dataset`. Skipped
// queries are left out of the averages.
EvalReport Evaluate(const Dataset& dataset, std::span<const double> scores,
                    int relevance_threshold = 1);
// Throws std::invalid_argument when the model and dataset disagree on the
// number of features.
EvalReport EvaluateModel(const Dataset& dataset, const Ensemble& model,
                         int relevance_threshold = 1);

std::string ReportToJson(const EvalReport& report);
// Columns: metric, value.
void WriteReportCsv(const EvalReport& report, std::ostream& out);

// For each original position i (1-based, result index i - 1): the mean
// position that the documents shown at i take after sorting each list by
// scores[q] descending, ties to the earlier original position. scores[q][k]
// is the new score of the document originally at position k + 1. Lists shorter
// than i do not contribute to position i.
std::vector<double> AverageRerankPositions(std::span<const std::vector<double>> scores);

// Long form: round, position, t_plus, t_minus; one row per position per
// history record.
void WriteBiasCurvesCsv(std::span<const RoundRecord> history, std::ostream& out);

}  // namespace ultr

#endif  // ULTR_METRICS_H_
