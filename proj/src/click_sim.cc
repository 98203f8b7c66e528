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

#include "ultr/click_sim.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ultr/lambda_rank.h"
#include "ultr/parallel.h"

namespace ultr {

std::vector<double> DefaultRho(std::size_t positions) {
  std::vector<double> rho(positions);
  for (std::size_t i = 0; i < positions; ++i) rho[i] = 1.0 / static_cast<double>(i + 1);
  return rho;
}

std::vector<double> ReadRhoFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> rho;
  double v = 0.0;
  while (in >> v) rho.push_back(v);
  if (!in.eof()) throw std::runtime_error(path + ": non-numeric entry");
  if (rho.empty()) throw std::runtime_error(path + ": empty rho table");
  return rho;
}

void PbmConfig::Validate() const {
  if (rho.empty()) throw std::invalid_argument("rho must be nonempty");
  if (rho.front() != 1.0) throw std::invalid_argument("rho[1] must be 1");
  for (std::size_t i = 1; i < rho.size(); ++i) {
    if (rho[i] > rho[i - 1] || rho[i] < 0.0) {
      throw std::invalid_argument("rho must be non-increasing and non-negative");
    }
  }
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  if (y_max < 1) throw std::invalid_argument("y_max must be >= 1");
}

void CascadeConfig::Validate() const {
  if (positions < 1) throw std::invalid_argument("positions must be >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(satisfaction_scale >= 0.0 && satisfaction_scale <= 1.0)) {
    throw std::invalid_argument("satisfaction_scale must lie in [0, 1]");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  if (y_max < 1) throw std::invalid_argument("y_max must be >= 1");
}

std::size_t Truncation(const ClickModel& model) {
  if (const auto* pbm = std::get_if<PbmConfig>(&model)) return pbm->rho.size();
  return std::get<CascadeConfig>(model).positions;
}

double RelevanceProb(int label, double epsilon, int y_max) {
  if (label < 0 || label > y_max) throw std::invalid_argument("label out of range");
  return epsilon + (1.0 - epsilon) * (std::exp2(label) - 1.0) / (std::exp2(y_max) - 1.0);
}

Ensemble TrainInitialRanker(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  const std::size_t n = dataset.queries.size();
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (take == 0) throw std::invalid_argument("fraction selects no queries");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine engine = MakeEngine(seed, Stream::kInitialRanker);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(UniformUnit(engine) * static_cast<double>(n - i));
    std::swap(order[i], order[std::min(j, n - 1)]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + take);
  std::sort(chosen.begin(), chosen.end());
  BoostingParams params;
  params.num_trees = 30;
  params.seed = DeriveSeed(seed, static_cast<std::uint64_t>(Stream::kInitialRanker), 1);
  return TrainLambdaMart(SelectQueries(dataset, chosen), params);
}

std::vector<std::uint32_t> RankQuery(const QueryGroup& query, const Ensemble& ranker,
                                     std::size_t num_features, std::size_t truncation) {
  std::vector<double> scores(query.docs.size());
  for (std::size_t d = 0; d < query.docs.size(); ++d) {
    scores[d] = ranker.Predict(DenseFeatures(query.docs[d].features, num_features));
  }
  std::vector<std::uint32_t> order(query.docs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  if (order.size() > truncation) order.resize(truncation);
  return order;
}

std::vector<std::uint8_t> PbmSample(std::span<const int> ranked_labels, const PbmConfig& cfg,
                                    Engine& rng) {
  std::vector<std::uint8_t> clicks(ranked_labels.size(), 0);
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    const double rho = cfg.rho[std::min(i, cfg.rho.size() - 1)];
    const double examine = cfg.theta == 0.0 ? 1.0 : std::pow(rho, cfg.theta);
    const double p = examine * RelevanceProb(ranked_labels[i], cfg.epsilon, cfg.y_max);
    clicks[i] = UniformUnit(rng) < p ? 1 : 0;
  }
  return clicks;
}

std::vector<std::uint8_t> CascadeSample(std::span<const int> ranked_labels,
                                        const CascadeConfig& cfg, Engine& rng) {
  std::vector<std::uint8_t> clicks(ranked_labels.size(), 0);
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    const double rel = RelevanceProb(ranked_labels[i], cfg.epsilon, cfg.y_max);
    if (UniformUnit(rng) < rel) {
      clicks[i] = 1;
      if (UniformUnit(rng) < cfg.satisfaction_scale * rel) break;
    }
    if (!(UniformUnit(rng) < cfg.beta)) break;
  }
  return clicks;
}

ClickDataset GenerateClickDataset(const Dataset& dataset,
                                  std::span<const std::vector<std::uint32_t>> rankings,
                                  const ClickModel& model, std::size_t n_sessions,
                                  std::uint64_t seed) {
  if (n_sessions < 1) throw std::invalid_argument("n_sessions must be >= 1");
  if (dataset.queries.empty()) throw std::invalid_argument("dataset has no queries");
  std::visit([](const auto& cfg) { cfg.Validate(); }, model);
  const int y_max = std::visit([](const auto& cfg) { return cfg.y_max; }, model);
  dataset.Validate(y_max);
  if (rankings.size() != dataset.queries.size()) {
    throw std::invalid_argument("one ranking per query required");
  }
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    for (auto d : rankings[q]) {
      if (d >= dataset.queries[q].docs.size()) throw std::invalid_argument("ranking out of range");
    }
  }
  ClickDataset out;
  out.truncation = Truncation(model);
  out.sessions.resize(n_sessions);
  const auto n_queries = dataset.queries.size();
  ParallelFor(n_sessions, [&](std::size_t s) {
    Engine rng = MakeEngine(seed, Stream::kSessions, s);
    auto q = static_cast<std::size_t>(UniformUnit(rng) * static_cast<double>(n_queries));
    q = std::min(q, n_queries - 1);
    const auto& ranking = rankings[q];
    const std::size_t shown = std::min(ranking.size(), out.truncation);
    std::vector<int> labels(shown);
    for (std::size_t k = 0; k < shown; ++k) labels[k] = dataset.queries[q].docs[ranking[k]].label;
    ClickSession& session = out.sessions[s];
    session.query = q;
    session.docs.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(shown));
    session.clicks = std::visit(
        [&](const auto& cfg) {
          using T = std::decay_t<decltype(cfg)>;
          if constexpr (std::is_same_v<T, PbmConfig>) {
            return PbmSample(labels, cfg, rng);
          } else {
            return CascadeSample(labels, cfg, rng);
          }
        },
        model);
  });
  return out;
}

ClickDataset GenerateClickDataset(const Dataset& dataset, const Ensemble& initial_ranker,
                                  const ClickModel& model, std::size_t n_sessions,
                                  std::uint64_t seed) {
  const std::size_t truncation = Truncation(model);
  std::vector<std::vector<std::uint32_t>> rankings(dataset.queries.size());
  ParallelFor(dataset.queries.size(), [&](std::size_t q) {
    rankings[q] = RankQuery(dataset.queries[q], initial_ranker, dataset.num_features, truncation);
  });
  return GenerateClickDataset(dataset, rankings, model, n_sessions, seed);
}

std::vector<double> PositionCtr(const ClickDataset& clicks) {
  const std::size_t k = clicks.MaxPosition();
  std::vector<double> shown(k, 0.0);
  std::vector<double> clicked(k, 0.0);
  for (const auto& s : clicks.sessions) {
    for (std::size_t i = 0; i < s.docs.size(); ++i) {
      shown[i] += 1.0;
      clicked[i] += s.clicks[i];
    }
  }
  std::vector<double> ctr(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) ctr[i] = shown[i] > 0.0 ? clicked[i] / shown[i] : 0.0;
  return ctr;
}

}  // namespace ultr
