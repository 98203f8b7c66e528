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

#include "ultr/lambda_rank.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "ultr/parallel.h"

namespace ultr {
namespace {

// Items ordered by score descending, ties to the lower index.
std::vector<std::uint32_t> RankOrder(std::span<const double> scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

double Discount(std::size_t rank, std::optional<std::size_t> cutoff) {
  if (cutoff && rank > *cutoff) return 0.0;
  return 1.0 / std::log2(1.0 + static_cast<double>(rank));
}

double IdealDcg(std::span<const double> gains, std::optional<std::size_t> cutoff) {
  std::vector<double> sorted(gains.begin(), gains.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double dcg = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) dcg += sorted[r] * Discount(r + 1, cutoff);
  return dcg;
}

// 1 / (1 + exp(x)) without overflow warnings.
double Logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace

BiasRatios BiasRatios::Ones(std::size_t positions, double p, double floor) {
  BiasRatios b;
  b.t_plus.assign(std::max<std::size_t>(positions, 1), 1.0);
  b.t_minus.assign(std::max<std::size_t>(positions, 1), 1.0);
  b.p = p;
  b.floor = floor;
  return b;
}

double BiasRatios::Plus(std::size_t position) const {
  return t_plus[std::min(position, t_plus.size()) - 1];
}

double BiasRatios::Minus(std::size_t position) const {
  return t_minus[std::min(position, t_minus.size()) - 1];
}

std::size_t PairSet::NumPairs() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.pairs.size();
  return n;
}

PairSet BuildLabelPairs(const Dataset& dataset) {
  PairSet set;
  set.num_rows = dataset.NumDocs();
  std::uint32_t row = 0;
  for (const auto& q : dataset.queries) {
    PairGroup group;
    const auto n = static_cast<std::uint32_t>(q.docs.size());
    for (std::uint32_t d = 0; d < n; ++d) {
      group.rows.push_back(row++);
      group.gains.push_back(std::exp2(q.docs[d].label) - 1.0);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = 0; j < n; ++j) {
        if (q.docs[i].label > q.docs[j].label) group.pairs.push_back({i, j, i + 1, j + 1});
      }
    }
    set.groups.push_back(std::move(group));
  }
  return set;
}

ClickPairs BuildClickPairs(const ClickDataset& clicks) {
  ClickPairs out;
  std::unordered_map<std::uint64_t, std::uint32_t> row_of;
  for (const auto& s : clicks.sessions) {
    PairGroup group;
    const auto n = static_cast<std::uint32_t>(s.docs.size());
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint64_t key = (static_cast<std::uint64_t>(s.query) << 32) | s.docs[k];
      auto [it, inserted] = row_of.try_emplace(key, static_cast<std::uint32_t>(out.row_docs.size()));
      if (inserted) out.row_docs.emplace_back(s.query, s.docs[k]);
      group.rows.push_back(it->second);
      group.gains.push_back(s.clicks[k] ? 1.0 : 0.0);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!s.clicks[i]) continue;
      for (std::uint32_t j = 0; j < n; ++j) {
        if (!s.clicks[j]) group.pairs.push_back({i, j, i + 1, j + 1});
      }
    }
    out.pairs.groups.push_back(std::move(group));
  }
  out.pairs.num_rows = out.row_docs.size();
  return out;
}

double DeltaNdcg(std::span<const double> gains, std::span<const double> scores,
                 std::size_t i, std::size_t j, std::optional<std::size_t> cutoff) {
  if (i == j) throw std::invalid_argument("DeltaNdcg: i == j");
  if (gains.size() != scores.size() || i >= gains.size() || j >= gains.size()) {
    throw std::invalid_argument("DeltaNdcg: index out of range");
  }
  const double ideal = IdealDcg(gains, cutoff);
  if (ideal <= 0.0) return 0.0;
  const auto order = RankOrder(scores);
  std::size_t rank_i = 0;
  std::size_t rank_j = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (order[r] == i) rank_i = r + 1;
    if (order[r] == j) rank_j = r + 1;
  }
  return std::abs((gains[i] - gains[j]) * (Discount(rank_i, cutoff) - Discount(rank_j, cutoff))) /
         ideal;
}

std::vector<double> PairDeltas(const PairGroup& group, std::span<const double> scores) {
  std::vector<double> deltas(group.pairs.size(), 0.0);
  if (group.pairs.empty()) return deltas;
  const double ideal = IdealDcg(group.gains, std::nullopt);
  if (ideal <= 0.0) return deltas;
  std::vector<double> local(group.rows.size());
  for (std::size_t k = 0; k < group.rows.size(); ++k) local[k] = scores[group.rows[k]];
  const auto order = RankOrder(local);
  std::vector<double> discount(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) discount[order[r]] = Discount(r + 1, std::nullopt);
  for (std::size_t k = 0; k < group.pairs.size(); ++k) {
    const auto& pr = group.pairs[k];
    deltas[k] = std::abs((group.gains[pr.preferred] - group.gains[pr.other]) *
                         (discount[pr.preferred] - discount[pr.other])) /
                ideal;
  }
  return deltas;
}

double PairwiseLoss(double f_i, double f_j, double delta_z, double sigma) {
  const double x = -sigma * (f_i - f_j);
  const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  return softplus * delta_z;
}

PairGradient LambdaPair(double f_i, double f_j, double delta_z, double sigma) {
  const double rho = Logistic(sigma * (f_i - f_j));
  return {-sigma * rho * delta_z, sigma * sigma * rho * (1.0 - rho) * delta_z};
}

PairEvaluation EvaluatePairs(const PairSet& pairs, std::span<const double> scores,
                             double sigma) {
  if (scores.size() != pairs.num_rows) {
    throw std::invalid_argument("EvaluatePairs: score count mismatch");
  }
  PairEvaluation eval;
  eval.offsets.assign(pairs.groups.size() + 1, 0);
  for (std::size_t g = 0; g < pairs.groups.size(); ++g) {
    eval.offsets[g + 1] = eval.offsets[g] + pairs.groups[g].pairs.size();
  }
  const std::size_t n = eval.offsets.back();
  eval.delta.assign(n, 0.0);
  eval.lambda.assign(n, 0.0);
  eval.hessian.assign(n, 0.0);
  eval.loss.assign(n, 0.0);
  ParallelFor(pairs.groups.size(), [&](std::size_t g) {
    const auto& group = pairs.groups[g];
    if (group.pairs.empty()) return;
    const auto deltas = PairDeltas(group, scores);
    const std::size_t base = eval.offsets[g];
    for (std::size_t k = 0; k < group.pairs.size(); ++k) {
      const auto& pr = group.pairs[k];
      const double f_i = scores[group.rows[pr.preferred]];
      const double f_j = scores[group.rows[pr.other]];
      const auto grad = LambdaPair(f_i, f_j, deltas[k], sigma);
      eval.delta[base + k] = deltas[k];
      eval.lambda[base + k] = grad.lambda;
      eval.hessian[base + k] = grad.hessian;
      eval.loss[base + k] = PairwiseLoss(f_i, f_j, deltas[k], sigma);
    }
  });
  return eval;
}

LambdaBuffer AccumulateLambdas(const PairSet& pairs, const PairEvaluation& evaluation,
                               const BiasRatios& bias) {
  LambdaBuffer out;
  out.lambda.assign(pairs.num_rows, 0.0);
  out.hess.assign(pairs.num_rows, 0.0);
  // Each row belongs to many groups, so the reduction runs in group order on
  // one thread; the per-pair work it consumes was done in EvaluatePairs.
  for (std::size_t g = 0; g < pairs.groups.size(); ++g) {
    const auto& group = pairs.groups[g];
    const std::size_t base = evaluation.offsets[g];
    for (std::size_t k = 0; k < group.pairs.size(); ++k) {
      const auto& pr = group.pairs[k];
      const double weight =
          1.0 / (bias.Plus(pr.preferred_position) * bias.Minus(pr.other_position));
      const double l = evaluation.lambda[base + k] * weight;
      const double h = evaluation.hessian[base + k] * weight;
      const auto i = group.rows[pr.preferred];
      const auto j = group.rows[pr.other];
      out.lambda[i] += l;
      out.lambda[j] -= l;
      out.hess[i] += h;
      out.hess[j] += h;
    }
  }
  return out;
}

LambdaBuffer AccumulateLambdas(const PairSet& pairs, std::span<const double> scores,
                               const BiasRatios& bias, double sigma) {
  return AccumulateLambdas(pairs, EvaluatePairs(pairs, scores, sigma), bias);
}

Ensemble TrainLambdaMart(const Dataset& dataset, const BoostingParams& params,
                         double sigma) {
  const PairSet pairs = BuildLabelPairs(dataset);
  const BinIndex bins = BuildBins(dataset, params.n_bins);
  Ensemble ensemble(params.learning_rate, dataset.num_features);
  ensemble.set_bin_boundaries(bins.AllBoundaries());
  std::vector<double> scores(bins.num_rows(), 0.0);
  const BiasRatios unit = BiasRatios::Ones(1);
  for (std::size_t round = 0; round < params.num_trees; ++round) {
    const auto buffer = AccumulateLambdas(pairs, scores, unit, sigma);
    BoostOneRound(bins, buffer.lambda, buffer.hess, params, round, ensemble, scores);
  }
  return ensemble;
}

}  // namespace ultr
