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

// Click-log simulation: an initial ranker trained on a small labeled sample,
// and position-based / cascade click models sampled over its rankings.

#ifndef ULTR_CLICK_SIM_H_
#define ULTR_CLICK_SIM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ultr/data.h"
#include "ultr/gbdt.h"
#include "ultr/rng.h"

namespace ultr {

// rho_i = 1 / i for i = 1..positions.
std::vector<double> DefaultRho(std::size_t positions = kDefaultTruncation);
// One real per line, position order.
std::vector<double> ReadRhoFile(const std::string& path);

struct PbmConfig {
  std::vector<double> rho = DefaultRho();
  double theta = 1.0;
  double epsilon = 0.1;
  int y_max = kDefaultMaxGrade;
  void Validate() const;
};

struct CascadeConfig {
  std::size_t positions = kDefaultTruncation;
  double beta = 0.5;
  double satisfaction_scale = 0.5;
  double epsilon = 0.1;
  int y_max = kDefaultMaxGrade;
  void Validate() const;
};

using ClickModel = std::variant<PbmConfig, CascadeConfig>;
std::size_t Truncation(const ClickModel& model);

// epsilon + (1 - epsilon) (2^y - 1) / (2^y_max - 1).
double RelevanceProb(int label, double epsilon, int y_max = kDefaultMaxGrade);

// Weak labeled LambdaMART (30 trees, other defaults) on a seeded sample of
// round(fraction * n_queries) queries. Throws when the sample is empty.
Ensemble TrainInitialRanker(const Dataset& dataset, double fraction, std::uint64_t seed);

// Document indices of `query` ordered by score descending (ties: lower index),
// truncated to `truncation`.
std::vector<std::uint32_t> RankQuery(const QueryGroup& query, const Ensemble& ranker,
                                     std::size_t num_features, std::size_t truncation);

// ranked_labels: labels in displayed order, already truncated.
std::vector<std::uint8_t> PbmSample(std::span<const int> ranked_labels, const PbmConfig& cfg,
                                    Engine& rng);
// Examination starts at position 1. An examined document is clicked with its
// relevance probability. After a click the user stops with probability
// satisfaction_scale * relevance; otherwise (and after a skip) the user moves
// on with probability beta.
std::vector<std::uint8_t> CascadeSample(std::span<const int> ranked_labels,
                                        const CascadeConfig& cfg, Engine& rng);

// Sessions draw a query uniformly with replacement; each session uses its own
// generator keyed by (seed, session index).
ClickDataset GenerateClickDataset(const Dataset& dataset, const Ensemble& initial_ranker,
                                  const ClickModel& model, std::size_t n_sessions,
                                  std::uint64_t seed);

// Same, with a precomputed ranking per query (see RankQuery).
ClickDataset GenerateClickDataset(const Dataset& dataset,
                                  std::span<const std::vector<std::uint32_t>> rankings,
                                  const ClickModel& model, std::size_t n_sessions,
                                  std::uint64_t seed);

// Empirical click-through rate per position (clicks / impressions).
std::vector<double> PositionCtr(const ClickDataset& clicks);

}  // namespace ultr

#endif  // ULTR_CLICK_SIM_H_
