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

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ultr/gbdt.h"
#include "ultr/parallel.h"

namespace ultr {
namespace {

DenseMatrix RandomMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = n(rng);
  }
  return m;
}

TEST(BinTest, ConstantFeatureOneBin) {
  DenseMatrix m(30, 1);
  const BinIndex bins = BuildBins(m, 64);
  EXPECT_EQ(bins.NumBins(0), 1u);
  for (std::size_t r = 0; r < 30; ++r) EXPECT_EQ(bins.Bin(r, 0), 0);
}

TEST(BinTest, DistinctValuesGetOwnBins) {
  DenseMatrix m(128, 1);
  for (std::size_t r = 0; r < 128; ++r) m(r, 0) = static_cast<double>(r % 64) * 0.25;
  const BinIndex bins = BuildBins(m, 64);
  EXPECT_EQ(bins.NumBins(0), 64u);
  for (std::size_t r = 0; r < 128; ++r) EXPECT_EQ(bins.Bin(r, 0), r % 64);
}

TEST(BinTest, UniformCountsWithinMultinomialBand) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseMatrix m(10000, 1);
  for (std::size_t r = 0; r < 10000; ++r) m(r, 0) = u(rng);
  const BinIndex bins = BuildBins(m, 64);
  ASSERT_EQ(bins.NumBins(0), 64u);
  std::vector<std::size_t> counts(64, 0);
  for (std::size_t r = 0; r < 10000; ++r) ++counts[bins.Bin(r, 0)];
  const double expect = 10000.0 / 64.0;
  const double sd = std::sqrt(10000.0 * (1.0 / 64.0) * (63.0 / 64.0));
  for (std::size_t b = 0; b < 64; ++b) {
    EXPECT_LE(std::abs(static_cast<double>(counts[b]) - expect), 3.0 * sd) << "bin " << b;
  }
}

TEST(BinTest, BinsAreMonotoneInValue) {
  const DenseMatrix m = RandomMatrix(500, 3, 1);
  const BinIndex bins = BuildBins(m, 16);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_LE(bins.NumBins(f), 16u);
    EXPECT_TRUE(std::isinf(bins.Boundaries(f).back()));
    for (std::size_t a = 0; a < 500; ++a) {
      for (std::size_t b = 0; b < 500; b += 7) {
        if (m(a, f) < m(b, f)) {
          EXPECT_LE(bins.Bin(a, f), bins.Bin(b, f));
        }
      }
    }
  }
  EXPECT_THROW(BuildBins(m, 1), std::invalid_argument);
  EXPECT_THROW(BuildBins(m, 257), std::invalid_argument);
}

TEST(TreeTest, ZeroGradientSingleLeaf) {
  const DenseMatrix m = RandomMatrix(50, 2, 2);
  const BinIndex bins = BuildBins(m);
  std::vector<double> g(50, 0.0), h(50, 1.0);
  const Tree t = FitTree(bins, g, h, TreeParams{});
  EXPECT_EQ(t.NumLeaves(), 1u);
  EXPECT_EQ(t.nodes()[0].value, 0.0);
}

TEST(TreeTest, StepGradientSplitsOnceOnFeatureZero) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseMatrix m(100, 3);
  std::vector<double> g(100), h(100, 1.0);
  for (std::size_t r = 0; r < 100; ++r) {
    for (std::size_t c = 0; c < 3; ++c) m(r, c) = u(rng);
    // Few distinct values so 0.5 falls between two bins.
    m(r, 0) = (std::floor(m(r, 0) * 10.0) + 0.5) / 10.0;
    g[r] = m(r, 0) <= 0.5 ? -1.0 : 1.0;
  }
  TreeParams p;
  p.l2_leaf_reg = 0.0;
  p.min_docs_per_leaf = 1;
  const Tree t = FitTree(BuildBins(m), g, h, p);
  ASSERT_EQ(t.NumLeaves(), 2u);
  EXPECT_EQ(t.Depth(), 1u);
  const auto& root = t.nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes()[root.left].value, 1.0);
  EXPECT_DOUBLE_EQ(t.nodes()[root.right].value, -1.0);
  for (std::size_t r = 0; r < 100; ++r) {
    EXPECT_EQ(t.Predict(m.Row(r)), -g[r]);
  }
}

TEST(TreeTest, SingleDocLeafValue) {
  DenseMatrix m(1, 1);
  const std::vector<double> g = {-2.0}, h = {1.0};
  TreeParams p;
  p.l2_leaf_reg = 1.0;
  const Tree t = FitTree(BuildBins(m), g, h, p);
  EXPECT_EQ(t.NumLeaves(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes()[0].value, 1.0);
}

double Objective(double g, double h, double l2) { return g * g / (h + l2); }

// Exhaustive search over every (feature, boundary) on the raw values.
struct BruteSplit {
  int feature = -1;
  std::size_t bin = 0;
  double gain = 0.0;
};

BruteSplit ExhaustiveRootSplit(const DenseMatrix& m, const BinIndex& bins,
                               const std::vector<double>& g, const std::vector<double>& h,
                               const TreeParams& p) {
  double gt = 0.0, ht = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    gt += g[r];
    ht += h[r];
  }
  BruteSplit best;
  for (std::size_t f = 0; f < m.cols(); ++f) {
    const auto& bounds = bins.Boundaries(f);
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        if (m(r, f) <= bounds[b]) {
          gl += g[r];
          hl += h[r];
          ++nl;
        }
      }
      const std::size_t nr = m.rows() - nl;
      if (nl < p.min_docs_per_leaf || nr < p.min_docs_per_leaf || nl == 0 || nr == 0) continue;
      const double gain = Objective(gl, hl, p.l2_leaf_reg) +
                          Objective(gt - gl, ht - hl, p.l2_leaf_reg) -
                          Objective(gt, ht, p.l2_leaf_reg);
      if (gain > best.gain) best = {static_cast<int>(f), b, gain};
    }
  }
  return best;
}

TEST(TreeTest, RootSplitMatchesExhaustiveSearch) {
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    const std::size_t rows = 50 + trial * 6;  // up to 194
    const DenseMatrix m = RandomMatrix(rows, 4, 100 + trial);
    std::mt19937_64 rng(trial);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::vector<double> g(rows), h(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      g[r] = n(rng) + 0.8 * m(r, trial % 4);
      h[r] = u(rng);
    }
    const BinIndex bins = BuildBins(m, 16);
    TreeParams p;
    p.max_leaves = 2;
    p.min_docs_per_leaf = 5;
    const Tree t = FitTree(bins, g, h, p);
    const BruteSplit want = ExhaustiveRootSplit(m, bins, g, h, p);
    ASSERT_GE(want.feature, 0);
    ASSERT_EQ(t.NumLeaves(), 2u) << "trial " << trial;
    EXPECT_EQ(t.nodes()[0].feature, want.feature) << "trial " << trial;
    EXPECT_EQ(static_cast<std::size_t>(t.nodes()[0].threshold_bin), want.bin);
    EXPECT_NEAR(t.nodes()[0].gain, want.gain, 1e-9 * std::max(1.0, want.gain));
  }
}

TEST(TreeTest, RespectsLeafAndDepthLimits) {
  const DenseMatrix m = RandomMatrix(400, 5, 9);
  std::vector<double> g(400), h(400, 1.0);
  for (std::size_t r = 0; r < 400; ++r) g[r] = std::sin(3 * m(r, 0)) + m(r, 1) * m(r, 2);
  const BinIndex bins = BuildBins(m);
  TreeParams p;
  p.max_leaves = 7;
  p.min_docs_per_leaf = 20;
  const Tree t = FitTree(bins, g, h, p);
  EXPECT_LE(t.NumLeaves(), 7u);
  p.max_leaves = 31;
  p.max_depth = 2;
  EXPECT_LE(FitTree(bins, g, h, p).Depth(), 2u);
  // Every leaf holds at least min_docs rows.
  p.max_depth = -1;
  const Tree big = FitTree(bins, g, h, p);
  std::vector<std::size_t> count(big.nodes().size(), 0);
  for (std::size_t r = 0; r < 400; ++r) {
    int i = 0;
    while (!big.nodes()[i].IsLeaf()) {
      i = bins.Bin(r, big.nodes()[i].feature) <= big.nodes()[i].threshold_bin
              ? big.nodes()[i].left
              : big.nodes()[i].right;
    }
    ++count[i];
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (big.nodes()[i].IsLeaf()) {
      EXPECT_GE(count[i], 20u);
    }
  }
  // Raw-value and binned traversal agree.
  for (std::size_t r = 0; r < 400; ++r) {
    EXPECT_EQ(big.Predict(m.Row(r)), big.PredictBinned(bins, r));
  }
}

TEST(TreeTest, SubsetAndFeatureMask) {
  const DenseMatrix m = RandomMatrix(200, 3, 4);
  std::vector<double> g(200), h(200, 1.0);
  for (std::size_t r = 0; r < 200; ++r) g[r] = m(r, 0) > 0 ? 1.0 : -1.0;
  const BinIndex bins = BuildBins(m);
  const std::vector<std::uint8_t> mask = {0, 1, 1};
  std::vector<std::uint32_t> rows;
  for (std::uint32_t r = 0; r < 200; r += 2) rows.push_back(r);
  TreeParams p;
  p.min_docs_per_leaf = 5;
  const Tree t = FitTree(bins, g, h, p, {rows, mask});
  for (const auto& n : t.nodes()) {
    if (!n.IsLeaf()) {
      EXPECT_NE(n.feature, 0);
    }
  }
  EXPECT_THROW(FitTree(bins, std::vector<double>(3), h, p), std::invalid_argument);
}

TEST(EnsembleTest, Additivity) {
  const std::vector<double> x = {0.3, -1.0};
  Ensemble empty(0.05, 2);
  EXPECT_EQ(empty.Predict(x), 0.0);
  Ensemble one(0.05, 2);
  one.AddTree(Tree({TreeNode{.value = 3.0}}));
  EXPECT_DOUBLE_EQ(one.Predict(x), 0.15);
  Ensemble two = one;
  two.AddTree(Tree({TreeNode{.value = 3.0}}));
  EXPECT_EQ(two.Predict(x), 2.0 * one.Predict(x));
}

Ensemble TrainSmall(std::size_t n_trees, std::uint64_t seed) {
  const DenseMatrix m = RandomMatrix(300, 6, seed);
  const BinIndex bins = BuildBins(m);
  std::vector<double> y(300);
  for (std::size_t r = 0; r < 300; ++r) y[r] = m(r, 0) - 2 * m(r, 3) * m(r, 4);
  BoostingParams params;
  params.num_trees = n_trees;
  params.seed = seed;
  Ensemble e(params.learning_rate, 6);
  e.set_bin_boundaries(bins.AllBoundaries());
  std::vector<double> scores(300, 0.0), g(300), h(300, 1.0);
  for (std::size_t t = 0; t < n_trees; ++t) {
    for (std::size_t r = 0; r < 300; ++r) g[r] = scores[r] - y[r];
    BoostOneRound(bins, g, h, params, t, e, scores);
  }
  return e;
}

TEST(EnsembleTest, BoostingReducesSquaredError) {
  const DenseMatrix m = RandomMatrix(300, 6, 8);
  const Ensemble e = TrainSmall(40, 8);
  double before = 0.0, after = 0.0;
  for (std::size_t r = 0; r < 300; ++r) {
    const double y = m(r, 0) - 2 * m(r, 3) * m(r, 4);
    before += y * y;
    after += (e.Predict(m.Row(r)) - y) * (e.Predict(m.Row(r)) - y);
  }
  EXPECT_LT(after, 0.6 * before);
}

TEST(EnsembleTest, SerializationRoundTrip) {
  const Ensemble empty;
  EXPECT_EQ(DeserializeEnsemble(SerializeEnsemble(empty)), empty);
  const Ensemble e = TrainSmall(10, 2);
  const std::string text = SerializeEnsemble(e);
  const Ensemble back = DeserializeEnsemble(text);
  EXPECT_EQ(back, e);
  const DenseMatrix probe = RandomMatrix(100, 6, 77);
  for (std::size_t r = 0; r < 100; ++r) {
    EXPECT_EQ(back.Predict(probe.Row(r)), e.Predict(probe.Row(r)));
  }
  EXPECT_THROW(DeserializeEnsemble(text.substr(0, text.size() / 2)), std::runtime_error);
  EXPECT_THROW(DeserializeEnsemble("{\"format\":\"nope\"}"), std::runtime_error);
  EXPECT_THROW(LoadEnsemble("/nonexistent/model.json"), std::runtime_error);
}

TEST(EnsembleTest, SamplingIsSeededAndSized) {
  EXPECT_EQ(SampleRows(1000, 0.9, 1, 3), SampleRows(1000, 0.9, 1, 3));
  EXPECT_NE(SampleRows(1000, 0.9, 1, 3), SampleRows(1000, 0.9, 1, 4));
  EXPECT_EQ(SampleRows(10, 1.0, 1, 0).size(), 10u);
  const auto mask = SampleFeatures(50, 0.9, 1, 0);
  std::size_t on = 0;
  for (auto v : mask) on += v;
  EXPECT_EQ(on, 45u);
}

TEST(EnsembleTest, ThreadCountDoesNotChangeModel) {
  const int saved = NumThreads();
  SetNumThreads(1);
  const Ensemble a = TrainSmall(15, 21);
  SetNumThreads(4);
  const Ensemble b = TrainSmall(15, 21);
  SetNumThreads(saved);
  EXPECT_EQ(SerializeEnsemble(a), SerializeEnsemble(b));
}

}  // namespace
}  // namespace ultr
