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

#include "ultr/pairwise_debias.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "ultr/log.h"
#include "ultr/parallel.h"

namespace ultr {
namespace {

std::size_t Clamp(std::size_t position, std::size_t positions) {
  return std::min(position, positions) - 1;
}

std::optional<std::vector<double>> Normalize(const std::vector<double>& sums, double p,
                                             double floor) {
  if (sums.empty() || !(sums[0] > 0.0)) return std::nullopt;
  const double exponent = 1.0 / (p + 1.0);
  std::vector<double> t(sums.size());
  t[0] = 1.0;
  for (std::size_t i = 1; i < sums.size(); ++i) {
    const double ratio = sums[i] / sums[0];
    t[i] = std::max(exponent == 1.0 ? ratio : std::pow(ratio, exponent), floor);
  }
  return t;
}

double NormPowP(const std::vector<double>& t, double p) {
  double s = 0.0;
  for (double v : t) {
    if (p == 0.0) {
      s += v != 0.0 ? 1.0 : 0.0;
    } else {
      s += std::pow(std::abs(v), p);
    }
  }
  return s;
}

}  // namespace

void TrainConfig::Validate() const {
  if (boosting.num_trees < 1) throw std::invalid_argument("number of rounds M must be >= 1");
  if (!(p >= 0.0)) throw std::invalid_argument("p must be >= 0");
  if (bias_update_interval < 1) throw std::invalid_argument("bias_update_interval must be >= 1");
  if (!(floor > 0.0)) throw std::invalid_argument("floor must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(boosting.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
}

PositionLossMatrix ComputePositionLossMatrix(const PairSet& pairs,
                                             const PairEvaluation& evaluation,
                                             std::size_t positions) {
  if (positions < 1) throw std::invalid_argument("positions must be >= 1");
  PositionLossMatrix matrix(positions);
  for (std::size_t g = 0; g < pairs.groups.size(); ++g) {
    const auto& group = pairs.groups[g];
    const std::size_t base = evaluation.offsets[g];
    for (std::size_t k = 0; k < group.pairs.size(); ++k) {
      const auto& pr = group.pairs[k];
      matrix.at(Clamp(pr.preferred_position, positions), Clamp(pr.other_position, positions)) +=
          evaluation.loss[base + k];
    }
  }
  return matrix;
}

PositionLossSums SumsFromMatrix(const PositionLossMatrix& matrix, const BiasRatios& bias) {
  const std::size_t k = matrix.positions();
  PositionLossSums sums;
  sums.plus.assign(k, 0.0);
  sums.minus.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double loss = matrix.at(i, j);
      if (loss == 0.0) continue;
      sums.plus[i] += loss / bias.Minus(j + 1);
      sums.minus[j] += loss / bias.Plus(i + 1);
    }
  }
  return sums;
}

double WeightedLoss(const PositionLossMatrix& matrix, const BiasRatios& bias) {
  const std::size_t k = matrix.positions();
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      total += matrix.at(i, j) / (bias.Plus(i + 1) * bias.Minus(j + 1));
    }
  }
  return total;
}

PositionLossSums ComputePositionLossSums(const PairSet& pairs, std::span<const double> scores,
                                         const BiasRatios& bias, std::size_t positions,
                                         double sigma) {
  const auto evaluation = EvaluatePairs(pairs, scores, sigma);
  return SumsFromMatrix(ComputePositionLossMatrix(pairs, evaluation, positions), bias);
}

BiasRatios UpdateBias(const PositionLossSums& sums, const BiasRatios& previous) {
  BiasRatios next = previous;
  if (auto t = Normalize(sums.plus, previous.p, previous.floor)) {
    next.t_plus = std::move(*t);
  } else {
    Warn("click-position loss at position 1 is zero; keeping previous t_plus");
  }
  if (auto t = Normalize(sums.minus, previous.p, previous.floor)) {
    next.t_minus = std::move(*t);
  } else {
    Warn("unclick-position loss at position 1 is zero; keeping previous t_minus");
  }
  return next;
}

double RegularizerValue(const BiasRatios& bias) {
  return NormPowP(bias.t_plus, bias.p) + NormPowP(bias.t_minus, bias.p);
}

double ObjectiveValue(const PairSet& pairs, std::span<const double> scores,
                      const BiasRatios& bias, double sigma) {
  const auto evaluation = EvaluatePairs(pairs, scores, sigma);
  double total = 0.0;
  for (std::size_t g = 0; g < pairs.groups.size(); ++g) {
    const auto& group = pairs.groups[g];
    const std::size_t base = evaluation.offsets[g];
    for (std::size_t k = 0; k < group.pairs.size(); ++k) {
      const auto& pr = group.pairs[k];
      total += evaluation.loss[base + k] /
               (bias.Plus(pr.preferred_position) * bias.Minus(pr.other_position));
    }
  }
  return total + RegularizerValue(bias);
}

TrainResult TrainUnbiasedLambdaMart(const Dataset& source, const ClickDataset& clicks,
                                    const TrainConfig& config) {
  config.Validate();
  if (clicks.sessions.empty()) throw std::invalid_argument("click data is empty");
  clicks.Validate(source);
  const ClickPairs click_pairs = BuildClickPairs(clicks);
  const PairSet& pairs = click_pairs.pairs;
  if (pairs.NumPairs() == 0) throw std::invalid_argument("no training pairs");

  const std::size_t positions = std::max<std::size_t>(clicks.MaxPosition(), 1);
  const DenseMatrix features = Densify(source, click_pairs.row_docs);
  const BinIndex bins = BuildBins(features, config.boosting.n_bins);

  TrainResult result;
  result.ensemble = Ensemble(config.boosting.learning_rate, source.num_features);
  result.ensemble.set_bin_boundaries(bins.AllBoundaries());
  result.bias = BiasRatios::Ones(positions, config.p, config.floor);
  const double exponent = 1.0 / (config.p + 1.0);

  std::vector<double> scores(bins.num_rows(), 0.0);
  auto evaluation = EvaluatePairs(pairs, scores, config.sigma);
  auto matrix = ComputePositionLossMatrix(pairs, evaluation, positions);
  const auto objective = [&] { return WeightedLoss(matrix, result.bias) + RegularizerValue(result.bias); };
  result.history.push_back({0, objective(), 0.0, false, exponent, result.bias});

  for (std::size_t m = 1; m <= config.boosting.num_trees; ++m) {
    const auto buffer = AccumulateLambdas(pairs, evaluation, result.bias);
    BoostOneRound(bins, buffer.lambda, buffer.hess, config.boosting, m - 1, result.ensemble,
                  scores);
    double mean_abs = 0.0;
    for (double l : buffer.lambda) mean_abs += std::abs(l);
    mean_abs /= static_cast<double>(buffer.lambda.size());

    // Pair quantities at the new scores serve both this round's bias update
    // and the next round's lambdas.
    evaluation = EvaluatePairs(pairs, scores, config.sigma);
    matrix = ComputePositionLossMatrix(pairs, evaluation, positions);
    bool updated = false;
    if (config.debias && m % config.bias_update_interval == 0) {
      result.bias = UpdateBias(SumsFromMatrix(matrix, result.bias), result.bias);
      updated = true;
    }
    result.history.push_back({m, objective(), mean_abs, updated, exponent, result.bias});
  }
  return result;
}

void WriteHistoryCsv(std::span<const RoundRecord> history, std::ostream& out) {
  const std::size_t k = history.empty() ? 0 : history.front().bias.positions();
  out << "round,objective,mean_abs_lambda,bias_updated,exponent";
  for (std::size_t i = 1; i <= k; ++i) out << ",t_plus_" << i;
  for (std::size_t i = 1; i <= k; ++i) out << ",t_minus_" << i;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& r : history) {
    out << r.round << ',' << r.objective << ',' << r.mean_abs_lambda << ','
        << (r.bias_updated ? 1 : 0) << ',' << r.exponent;
    for (double v : r.bias.t_plus) out << ',' << v;
    for (double v : r.bias.t_minus) out << ',' << v;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace ultr
