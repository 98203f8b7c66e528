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

// Pairwise debiasing: closed-form estimation of position-bias ratios at click
// and unclick positions, the regularized objective, and the joint training
// loop that alternates boosting rounds with ratio updates.

#ifndef ULTR_PAIRWISE_DEBIAS_H_
#define ULTR_PAIRWISE_DEBIAS_H_

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ultr/data.h"
#include "ultr/gbdt.h"
#include "ultr/lambda_rank.h"

namespace ultr {

struct TrainConfig {
  BoostingParams boosting;  // boosting.num_trees is the number of rounds M
  double p = 0.0;
  double sigma = kDefaultSigma;
  std::size_t bias_update_interval = 1;
  double floor = 0.01;
  // false pins all ratios at 1 (training on raw clicks).
  bool debias = true;

  void Validate() const;
};

struct PositionLossSums {
  // plus[i]: sum of L_ij / t_minus[pos_j] over pairs whose clicked document is
  // at position i + 1. minus[j]: sum of L_ij / t_plus[pos_i] over pairs whose
  // unclicked document is at position j + 1.
  std::vector<double> plus;
  std::vector<double> minus;
};

// Total pair loss L_ij per (click position, unclick position); positions
// beyond K are clamped to K. Every bias-weighted quantity below is a weighted
// sum of these cells because the weight 1 / (t_plus[i] t_minus[j]) depends on
// the two positions only.
class PositionLossMatrix {
 public:
  explicit PositionLossMatrix(std::size_t positions)
      : positions_(positions), loss_(positions * positions, 0.0) {}
  std::size_t positions() const { return positions_; }
  double at(std::size_t click_pos, std::size_t unclick_pos) const {
    return loss_[click_pos * positions_ + unclick_pos];
  }
  double& at(std::size_t click_pos, std::size_t unclick_pos) {
    return loss_[click_pos * positions_ + unclick_pos];
  }

 private:
  std::size_t positions_;
  std::vector<double> loss_;
};

PositionLossMatrix ComputePositionLossMatrix(const PairSet& pairs,
                                             const PairEvaluation& evaluation,
                                             std::size_t positions);
PositionLossSums SumsFromMatrix(const PositionLossMatrix& matrix, const BiasRatios& bias);
double WeightedLoss(const PositionLossMatrix& matrix, const BiasRatios& bias);

// positions: length K of the result; pair positions beyond K are clamped to K.
PositionLossSums ComputePositionLossSums(const PairSet& pairs, std::span<const double> scores,
                                         const BiasRatios& bias, std::size_t positions,
                                         double sigma = kDefaultSigma);

// t[i] = (S[i] / S[1])^(1 / (p + 1)), floored. Each side whose anchor sum
// S[1] is not positive keeps its entries from `previous` and emits a warning.
// The result carries previous.p and previous.floor.
BiasRatios UpdateBias(const PositionLossSums& sums, const BiasRatios& previous);

// sum over pairs of L_ij / (t_plus[pos_i] t_minus[pos_j]) + ||t_plus||_p^p +
// ||t_minus||_p^p with p = bias.p. For p = 0 the norm counts nonzero entries,
// which is 2K because ratios never drop below the floor.
double ObjectiveValue(const PairSet& pairs, std::span<const double> scores,
                      const BiasRatios& bias, double sigma = kDefaultSigma);
double RegularizerValue(const BiasRatios& bias);

struct RoundRecord {
  std::size_t round = 0;  // 0 is the initial state before any tree
  double objective = 0.0;
  double mean_abs_lambda = 0.0;
  bool bias_updated = false;
  double exponent = 1.0;  // 1 / (p + 1)
  BiasRatios bias;
};

struct TrainResult {
  Ensemble ensemble;
  BiasRatios bias;
  std::vector<RoundRecord> history;
};

// Starts from all-ones ratios; each round computes adjusted lambdas at the
// current scores, fits one tree, and every bias_update_interval rounds
// re-estimates the ratios from the updated scores. Throws std::invalid_argument
// for an invalid config or when no session yields a pair.
TrainResult TrainUnbiasedLambdaMart(const Dataset& source, const ClickDataset& clicks,
                                    const TrainConfig& config);

// Columns: round, objective, mean_abs_lambda, bias_updated, exponent,
// t_plus_1..t_plus_K, t_minus_1..t_minus_K.
void WriteHistoryCsv(std::span<const RoundRecord> history, std::ostream& out);

}  // namespace ultr

#endif  // ULTR_PAIRWISE_DEBIAS_H_
