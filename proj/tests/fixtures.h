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

// Small deterministic inputs shared by the unit and acceptance tests.

#ifndef ULTR_TESTS_FIXTURES_H_
#define ULTR_TESTS_FIXTURES_H_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ultr/click_sim.h"
#include "ultr/data.h"
#include "ultr/lambda_rank.h"
#include "oracles.h"

namespace ultr::fixture {

// Click sessions over identity rankings of a small synthetic source, with a
// frozen random score per training row.
struct FrozenClicks {
  Dataset source;
  ClickDataset clicks;
  ClickPairs pairs;
  std::vector<double> scores;
};

inline FrozenClicks MakeFrozenClicks(std::size_t n_sessions, std::uint64_t seed,
                                     double theta = 1.0) {
  FrozenClicks fx;
  SyntheticConfig cfg;
  cfg.n_queries = 8;
  cfg.docs_per_query = 20;
  cfg.n_features = 6;
  cfg.seed = seed;
  fx.source = GenerateSynthetic(cfg);
  std::vector<std::vector<std::uint32_t>> rankings(fx.source.queries.size());
  for (auto& r : rankings) {
    r.resize(10);
    std::iota(r.begin(), r.end(), 0u);
  }
  PbmConfig pbm;
  pbm.theta = theta;
  fx.clicks = GenerateClickDataset(fx.source, rankings, pbm, n_sessions, seed);
  fx.pairs = BuildClickPairs(fx.clicks);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  fx.scores.resize(fx.pairs.pairs.num_rows);
  for (auto& s : fx.scores) s = normal(rng);
  return fx;
}

// One term of the pair sum, enumerated directly from the sessions: positions
// are 1-based display ranks, loss is the delta-weighted logistic loss at the
// frozen scores.
struct PairTerm {
  std::size_t click_pos;
  std::size_t unclick_pos;
  double loss;
};

inline std::vector<PairTerm> BrutePairTerms(const FrozenClicks& fx, double sigma = 2.0) {
  std::vector<PairTerm> terms;
  for (std::size_t s = 0; s < fx.clicks.sessions.size(); ++s) {
    const auto& session = fx.clicks.sessions[s];
    const auto& group = fx.pairs.pairs.groups[s];
    const std::size_t n = session.docs.size();
    std::vector<double> gains(n), scores(n);
    for (std::size_t k = 0; k < n; ++k) {
      gains[k] = session.clicks[k] ? 1.0 : 0.0;
      scores[k] = fx.scores[group.rows[k]];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!session.clicks[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (session.clicks[j]) continue;
        const double delta = oracle::SwapDelta(gains, scores, i, j);
        terms.push_back({i + 1, j + 1, oracle::NaivePairLoss(scores[i], scores[j], delta, sigma)});
      }
    }
  }
  return terms;
}

inline double PNorm(const std::vector<double>& t, double p) {
  double s = 0.0;
  for (double v : t) s += p == 0.0 ? (v != 0.0 ? 1.0 : 0.0) : std::pow(std::abs(v), p);
  return s;
}

inline double BruteObjective(const std::vector<PairTerm>& terms, const std::vector<double>& tp,
                             const std::vector<double>& tm, double p) {
  double total = 0.0;
  for (const auto& t : terms) total += t.loss / (tp[t.click_pos - 1] * tm[t.unclick_pos - 1]);
  return total + PNorm(tp, p) + PNorm(tm, p);
}

}  // namespace ultr::fixture

#endif  // ULTR_TESTS_FIXTURES_H_
