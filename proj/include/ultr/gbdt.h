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

// Histogram-based second-order regression trees and additive ensembles.

#ifndef ULTR_GBDT_H_
#define ULTR_GBDT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ultr/data.h"

namespace ultr {

inline constexpr int kDefaultBins = 64;
inline constexpr int kMaxBins = 256;

// Per-feature quantile binning. boundaries[f] holds strictly increasing upper
// bin edges; the last edge is +inf. A value v falls in the first bin b with
// v <= boundaries[f][b].
class BinIndex {
 public:
  BinIndex() = default;

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_features() const { return boundaries_.size(); }
  std::size_t NumBins(std::size_t feature) const { return boundaries_[feature].size(); }
  std::uint8_t Bin(std::size_t row, std::size_t feature) const {
    return bins_[feature * num_rows_ + row];
  }
  std::span<const std::uint8_t> Column(std::size_t feature) const {
    return {bins_.data() + feature * num_rows_, num_rows_};
  }
  const std::vector<double>& Boundaries(std::size_t feature) const {
    return boundaries_[feature];
  }
  const std::vector<std::vector<double>>& AllBoundaries() const { return boundaries_; }

  static std::size_t BinOf(const std::vector<double>& boundaries, double value);

  friend BinIndex BuildBins(const DenseMatrix& features, int n_bins);

 private:
  std::size_t num_rows_ = 0;
  std::vector<std::vector<double>> boundaries_;
  std::vector<std::uint8_t> bins_;  // feature-major
};

// Quantile bins over the rows of `features`. Constant features get one bin;
// features with at most n_bins distinct values get one bin per value, cut at
// midpoints. n_bins must lie in [2, 256].
BinIndex BuildBins(const DenseMatrix& features, int n_bins = kDefaultBins);
BinIndex BuildBins(const Dataset& dataset, int n_bins = kDefaultBins);

struct TreeNode {
  // Internal nodes: feature >= 0; rows with value <= threshold go left.
  int feature = -1;
  int threshold_bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double gain = 0.0;
  // Leaves.
  double value = 0.0;
  bool IsLeaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class Tree {
 public:
  Tree() : nodes_(1) {}
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t NumLeaves() const;
  std::size_t Depth() const;

  double Predict(std::span<const double> features) const;
  double PredictBinned(const BinIndex& bins, std::size_t row) const;

  bool operator==(const Tree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_leaves = 31;
  int max_depth = -1;  // -1: unbounded
  std::size_t min_docs_per_leaf = 20;
  double l2_leaf_reg = 1.0;
  double min_split_gain = 0.0;
};

// Restricts a fit to a subset of rows (bagging) and/or features. Empty spans
// mean "all".
struct FitSubset {
  std::span<const std::uint32_t> rows;      // strictly increasing
  std::span<const std::uint8_t> features;  // mask, one entry per feature
};

// Grows one tree leaf-wise, always splitting the leaf with the largest gain
//   G_L^2 / (H_L + l2) + G_R^2 / (H_R + l2) - G^2 / (H + l2)
// until max_leaves is reached or no split has positive gain. Leaf values are
// -G / (H + l2). Ties between candidate splits go to the lower feature, then
// the lower bin; ties between leaves go to the earlier leaf.
Tree FitTree(const BinIndex& bins, std::span<const double> grad,
             std::span<const double> hess, const TreeParams& params,
             const FitSubset& subset = {});

class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(double learning_rate, std::size_t num_features)
      : learning_rate_(learning_rate), num_features_(num_features) {}

  double learning_rate() const { return learning_rate_; }
  double base_score() const { return base_score_; }
  std::size_t num_features() const { return num_features_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::vector<double>>& bin_boundaries() const { return bin_boundaries_; }

  void set_base_score(double v) { base_score_ = v; }
  void set_bin_boundaries(std::vector<std::vector<double>> b) { bin_boundaries_ = std::move(b); }
  void AddTree(Tree tree) { trees_.push_back(std::move(tree)); }

  // base_score + sum_t learning_rate * tree_t(x), accumulated in tree order.
  double Predict(std::span<const double> features) const;
  std::vector<double> Predict(const DenseMatrix& features) const;

  bool operator==(const Ensemble&) const = default;

 private:
  double learning_rate_ = 0.05;
  double base_score_ = 0.0;
  std::size_t num_features_ = 0;
  std::vector<Tree> trees_;
  std::vector<std::vector<double>> bin_boundaries_;
};

// Versioned JSON model file. Deserialize throws std::runtime_error on
// malformed input or version mismatch.
std::string SerializeEnsemble(const Ensemble& ensemble);
Ensemble DeserializeEnsemble(const std::string& text);
void SaveEnsemble(const Ensemble& ensemble, const std::string& path);
Ensemble LoadEnsemble(const std::string& path);

struct BoostingParams {
  std::size_t num_trees = 300;
  double learning_rate = 0.05;
  TreeParams tree;
  double feature_fraction = 0.9;
  double bagging_fraction = 0.9;
  int n_bins = kDefaultBins;
  std::uint64_t seed = 0;
};

// Rows kept for round `round`: each row independently with probability
// `fraction` from a stream keyed by (seed, round). fraction >= 1 keeps all.
std::vector<std::uint32_t> SampleRows(std::size_t n_rows, double fraction,
                                      std::uint64_t seed, std::size_t round);
// Feature mask with round(fraction * n) features (at least one) drawn without
// replacement from a stream keyed by (seed, round).
std::vector<std::uint8_t> SampleFeatures(std::size_t n_features, double fraction,
                                         std::uint64_t seed, std::size_t round);

// Fits one boosting round on the given gradients and adds the tree to
// `ensemble`; `scores` (one per row of `bins`) is advanced by the new tree's
// shrunken output.
const Tree& BoostOneRound(const BinIndex& bins, std::span<const double> grad,
                          std::span<const double> hess, const BoostingParams& params,
                          std::size_t round, Ensemble& ensemble,
                          std::span<double> scores);

}  // namespace ultr

#endif  // ULTR_GBDT_H_
