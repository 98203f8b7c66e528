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

// LambdaMART gradients: NDCG swap deltas, the pairwise logistic loss, and
// per-document lambda accumulation with position-bias weighting.

#ifndef ULTR_LAMBDA_RANK_H_
#define ULTR_LAMBDA_RANK_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ultr/data.h"
#include "ultr/gbdt.h"

namespace ultr {

inline constexpr double kDefaultSigma = 2.0;

// Position-bias ratios at click (t_plus) and unclick (t_minus) positions.
// Index 0 is position 1. Both vectors are anchored to 1 at position 1.
struct BiasRatios {
  std::vector<double> t_plus;
  std::vector<double> t_minus;
  double p = 0.0;
  double floor = 0.01;

  static BiasRatios Ones(std::size_t positions, double p = 0.0, double floor = 0.01);
  std::size_t positions() const { return t_plus.size(); }
  // Positions are 1-based; positions past the end reuse the last entry.
  double Plus(std::size_t position) const;
  double Minus(std::size_t position) const;
  bool operator==(const BiasRatios&) const = default;
};

// A preference: the document at local index `preferred` should rank above the
// one at `other`. Positions are 1-based.
struct RankPair {
  std::uint32_t preferred;
  std::uint32_t other;
  std::uint32_t preferred_position;
  std::uint32_t other_position;
};

// One list (a labeled query or a click session). rows map local indices to
// rows of the training matrix; gains drive the NDCG swap deltas.
struct PairGroup {
  std::vector<std::uint32_t> rows;
  std::vector<double> gains;
  std::vector<RankPair> pairs;
};

struct PairSet {
  std::vector<PairGroup> groups;
  std::size_t num_rows = 0;
  std::size_t NumPairs() const;
};

// Labeled training: one group per query over all its documents, gains
// 2^label - 1, pairs wherever label_i > label_j. Rows follow the flattened
// document order of `dataset`; positions are the stored order.
PairSet BuildLabelPairs(const Dataset& dataset);

// Click training over the distinct documents shown in `clicks`. Every session
// becomes one group with click bits as gains and pairs (clicked, unclicked);
// sessions with no clicks or only clicks produce no pairs.
struct ClickPairs {
  PairSet pairs;
  // (query, doc) of each training row, ordered by first appearance.
  std::vector<std::pair<std::size_t, std::size_t>> row_docs;
};
ClickPairs BuildClickPairs(const ClickDataset& clicks);

// |NDCG after swapping items i and j - NDCG before|, where the ranking orders
// items by score descending (ties: lower index first), DCG uses
// gain / log2(1 + rank), and the ideal DCG normalizes over all items. Returns 0
// when the ideal DCG is 0. Throws std::invalid_argument when i == j.
double DeltaNdcg(std::span<const double> gains, std::span<const double> scores,
                 std::size_t i, std::size_t j,
                 std::optional<std::size_t> cutoff = std::nullopt);

// log(1 + exp(-sigma (f_i - f_j))) * delta_z, overflow-safe.
double PairwiseLoss(double f_i, double f_j, double delta_z, double sigma = kDefaultSigma);

struct PairGradient {
  double lambda;   // d loss / d f_i, <= 0
  double hessian;  // >= 0
};

// lambda = -sigma / (1 + exp(sigma (f_i - f_j))) * delta_z
// hessian = sigma^2 rho (1 - rho) * delta_z with rho = 1 / (1 + exp(sigma (f_i - f_j)))
PairGradient LambdaPair(double f_i, double f_j, double delta_z, double sigma = kDefaultSigma);

// Per-row first and second derivatives of the bias-weighted pairwise loss.
// lambda is the loss gradient: trees step along -lambda.
struct LambdaBuffer {
  std::vector<double> lambda;
  std::vector<double> hess;
};

// Unweighted per-pair quantities at fixed scores, flattened in group-then-pair
// order: delta-NDCG, pair lambda, pair hessian and pair loss.
struct PairEvaluation {
  std::vector<std::size_t> offsets;  // groups.size() + 1 entries
  std::vector<double> delta;
  std::vector<double> lambda;
  std::vector<double> hessian;
  std::vector<double> loss;
};

PairEvaluation EvaluatePairs(const PairSet& pairs, std::span<const double> scores,
                             double sigma = kDefaultSigma);

// For each pair, the pair gradient divided by t_plus[pos_i] * t_minus[pos_j]
// is added to the preferred row and subtracted from the other; the hessian
// gets the same weight and is added to both. Groups are processed in parallel
// and reduced in group order.
LambdaBuffer AccumulateLambdas(const PairSet& pairs, std::span<const double> scores,
                               const BiasRatios& bias, double sigma = kDefaultSigma);
LambdaBuffer AccumulateLambdas(const PairSet& pairs, const PairEvaluation& evaluation,
                               const BiasRatios& bias);

// Per-group delta-NDCG for every pair at the given scores, in pair order.
std::vector<double> PairDeltas(const PairGroup& group, std::span<const double> scores);

// Plain LambdaMART on graded labels.
Ensemble TrainLambdaMart(const Dataset& dataset, const BoostingParams& params,
                         double sigma = kDefaultSigma);

}  // namespace ultr

#endif  // ULTR_LAMBDA_RANK_H_
