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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "ultr/metrics.h"
#include "ultr/pairwise_debias.h"

namespace ultr {
namespace {

TEST(NdcgTest, KnownValues) {
  const std::vector<int> perfect = {3, 1, 0};
  const std::vector<double> s3 = {3.0, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(*NdcgAtK(perfect, s3, 3), 1.0);
  const std::vector<int> two = {1, 0};
  const std::vector<double> reversed = {0.0, 1.0};
  EXPECT_NEAR(*NdcgAtK(two, reversed, 2), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(*NdcgAtK(two, reversed, 2), 0.63093, 1e-5);
  const std::vector<int> zeros = {0, 0, 0};
  EXPECT_FALSE(NdcgAtK(zeros, s3, 3).has_value());
  EXPECT_THROW(NdcgAtK(two, s3, 2), std::invalid_argument);
  EXPECT_THROW(NdcgAtK(two, reversed, 0), std::invalid_argument);
}

TEST(NdcgTest, TiesBreakTowardLowerIndex) {
  const std::vector<int> labels = {0, 2};
  const std::vector<double> tied = {1.0, 1.0};
  EXPECT_LT(*NdcgAtK(labels, tied, 1), 1e-15);
}

TEST(NdcgTest, IdealMatchesPermutationEnumeration) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> label(0, 4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = 1 + trial % 8;
    std::vector<int> labels(len);
    std::vector<double> scores(len), gains(len);
    for (std::size_t i = 0; i < len; ++i) {
      labels[i] = label(rng);
      gains[i] = oracle::GradedGain(labels[i]);
      scores[i] = n(rng);
    }
    for (std::size_t k = 1; k <= len + 1; ++k) {
      const double ideal = oracle::BruteForceIdealDcg(gains, k);
      const auto got = NdcgAtK(labels, scores, k);
      if (ideal == 0.0) {
        EXPECT_FALSE(got.has_value());
        continue;
      }
      const double dcg = oracle::DcgOfOrder(gains, oracle::OrderByScore(scores), k);
      ASSERT_TRUE(got.has_value());
      EXPECT_NEAR(*got, dcg / ideal, 1e-12);
      EXPECT_LE(*got, 1.0 + 1e-12);
    }
  }
}

TEST(AveragePrecisionTest, KnownValues) {
  const std::vector<int> first = {1, 0};
  const std::vector<double> desc = {2.0, 1.0};
  EXPECT_DOUBLE_EQ(*AveragePrecision(first, desc), 1.0);
  const std::vector<int> second = {0, 1};
  EXPECT_DOUBLE_EQ(*AveragePrecision(second, desc), 0.5);
  const std::vector<int> mixed = {1, 0, 1};
  const std::vector<double> listed = {3.0, 2.0, 1.0};
  EXPECT_NEAR(*AveragePrecision(mixed, listed), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(*AveragePrecision(mixed, listed), 0.8333, 1e-4);
  const std::vector<int> none = {0, 0};
  EXPECT_FALSE(AveragePrecision(none, desc).has_value());
  // Threshold 2 makes grade-1 documents irrelevant.
  const std::vector<int> graded = {1, 2};
  EXPECT_DOUBLE_EQ(*AveragePrecision(graded, desc, 2), 0.5);
}

Dataset TwoQueries() {
  Dataset d;
  d.num_features = 1;
  d.queries.push_back({"a", {{{}, 2}, {{}, 0}}});
  d.queries.push_back({"b", {{{}, 0}, {{}, 0}}});
  return d;
}

TEST(EvaluateTest, SkipsAndAverages) {
  const Dataset d = TwoQueries();
  const std::vector<double> scores = {0.0, 1.0, 0.5, 0.5};
  const EvalReport r = Evaluate(d, scores);
  EXPECT_EQ(r.n_queries_scored, 1u);
  EXPECT_EQ(r.n_queries_skipped, 1u);
  EXPECT_EQ(r.n_map_skipped, 1u);
  EXPECT_DOUBLE_EQ(r.ndcg_at.at(1), 0.0);
  EXPECT_NEAR(r.ndcg_at.at(3), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(r.map_score, 0.5);
  EXPECT_EQ(r.ndcg_at.size(), 4u);
  EXPECT_THROW(Evaluate(d, std::vector<double>(3)), std::invalid_argument);
}

TEST(EvaluateTest, ModelFeatureMismatch) {
  Dataset d = TwoQueries();
  d.num_features = 50;
  const Ensemble model(0.05, 49);
  EXPECT_THROW(EvaluateModel(d, model), std::invalid_argument);
  EXPECT_NO_THROW(EvaluateModel(d, Ensemble(0.05, 50)));
}

TEST(EvaluateTest, OutputFormats) {
  const EvalReport r = Evaluate(TwoQueries(), std::vector<double>{1.0, 0.0, 0.0, 0.0});
  const auto j = nlohmann::json::parse(ReportToJson(r));
  EXPECT_DOUBLE_EQ(j.at("ndcg@1").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j.at("map").get<double>(), 1.0);
  EXPECT_EQ(j.at("n_queries_skipped").get<int>(), 1);
  std::ostringstream csv;
  WriteReportCsv(r, csv);
  EXPECT_EQ(csv.str().substr(0, 22), "metric,value\nndcg@1,1\n");
}

TEST(RerankTest, IdentityAndTruth) {
  std::vector<std::vector<double>> same, truth;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> label(0, 4);
  for (int q = 0; q < 50; ++q) {
    std::vector<double> s(10), l(10);
    for (int i = 0; i < 10; ++i) {
      s[i] = 10.0 - i;  // the original ranker's order
      l[i] = label(rng);
    }
    same.push_back(s);
    truth.push_back(l);
  }
  const auto id = AverageRerankPositions(same);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(id[i], static_cast<double>(i + 1));
  EXPECT_EQ(AverageRerankPositions(truth), AverageRerankPositions(truth));
  // Labels as scores reproduce the label-sorted curve computed by hand.
  std::vector<double> sum(10, 0.0);
  for (const auto& l : truth) {
    const auto order = oracle::OrderByScore(l);
    for (std::size_t r = 0; r < 10; ++r) sum[order[r]] += static_cast<double>(r + 1);
  }
  const auto curve = AverageRerankPositions(truth);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(curve[i], sum[i] / 50.0);
}

TEST(RerankTest, RandomScoresAverageToMiddle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> scores(1000, std::vector<double>(10));
  for (auto& s : scores) {
    for (auto& v : s) v = n(rng);
  }
  const auto curve = AverageRerankPositions(scores);
  double mean = 0.0;
  for (double v : curve) {
    EXPECT_GT(v, 1.0);
    EXPECT_LT(v, 10.0);
    mean += v / 10.0;
  }
  EXPECT_NEAR(mean, 5.5, 0.2);
}

TEST(RerankTest, ShortListsOnlyCountWhereShown) {
  const std::vector<std::vector<double>> scores = {{1.0, 2.0, 3.0}, {5.0}};
  const auto curve = AverageRerankPositions(scores);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[0], 2.0);  // (3 + 1) / 2
  EXPECT_DOUBLE_EQ(curve[2], 1.0);
}

TEST(BiasCurvesTest, RowsPerSnapshot) {
  std::vector<RoundRecord> history(3);
  for (std::size_t r = 0; r < 3; ++r) {
    history[r].round = r;
    history[r].bias = BiasRatios::Ones(10);
  }
  std::ostringstream out;
  WriteBiasCurvesCsv(history, out);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "round,position,t_plus,t_minus");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 31);
  EXPECT_NE(text.find("\n0,1,1,1\n"), std::string::npos);
}

}  // namespace
}  // namespace ultr
