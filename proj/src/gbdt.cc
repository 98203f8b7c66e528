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

#include "ultr/gbdt.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ultr/parallel.h"
#include "ultr/rng.h"

namespace ultr {
namespace {

using Json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinGain = 1e-10;
constexpr int kFormatVersion = 1;

struct HistBin {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;
  bool Valid() const { return feature >= 0; }
};

// Per-leaf state during growth. Rows of the leaf are rows_[begin, end).
struct GrowLeaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  double grad = 0.0;
  double hess = 0.0;
  std::vector<HistBin> hist;
  SplitCandidate best;
};

double LeafObjective(double g, double h, double l2) {
  const double denom = h + l2;
  return denom > 0.0 ? g * g / denom : 0.0;
}

double LeafValue(double g, double h, double l2) {
  const double denom = h + l2;
  return denom > 0.0 ? -g / denom : 0.0;
}

class TreeGrower {
 public:
  TreeGrower(const BinIndex& bins, std::span<const double> grad,
             std::span<const double> hess, const TreeParams& params,
             const FitSubset& subset)
      : bins_(bins), grad_(grad), hess_(hess), params_(params) {
    const std::size_t n_features = bins.num_features();
    offsets_.assign(n_features + 1, 0);
    for (std::size_t f = 0; f < n_features; ++f) {
      offsets_[f + 1] = offsets_[f] + bins.NumBins(f);
    }
    active_.assign(n_features, 1);
    if (!subset.features.empty()) {
      if (subset.features.size() != n_features) {
        throw std::invalid_argument("feature mask size mismatch");
      }
      for (std::size_t f = 0; f < n_features; ++f) active_[f] = subset.features[f] ? 1 : 0;
    }
    if (subset.rows.empty()) {
      rows_.resize(bins.num_rows());
      for (std::size_t r = 0; r < rows_.size(); ++r) rows_[r] = static_cast<std::uint32_t>(r);
    } else {
      rows_.assign(subset.rows.begin(), subset.rows.end());
    }
  }

  Tree Grow() {
    std::vector<TreeNode> nodes(1);
    GrowLeaf root;
    root.node = 0;
    root.begin = 0;
    root.end = rows_.size();
    double total_hess = 0.0;
    for (auto r : rows_) total_hess += hess_[r];
    if (rows_.empty() || total_hess == 0.0) return Tree(std::move(nodes));

    root.hist = BuildHistogram(root.begin, root.end);
    SumHistogram(root);
    root.best = FindBestSplit(root);

    std::vector<GrowLeaf> leaves;
    leaves.push_back(std::move(root));
    while (static_cast<int>(leaves.size()) < params_.max_leaves) {
      int pick = -1;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto& best = leaves[i].best;
        if (!best.Valid()) continue;
        if (pick < 0 || best.gain > leaves[pick].best.gain) pick = static_cast<int>(i);
      }
      if (pick < 0) break;
      GrowLeaf parent = std::move(leaves[pick]);
      auto [left, right] = Split(parent, nodes);
      leaves[pick] = std::move(left);
      leaves.push_back(std::move(right));
    }

    for (const auto& leaf : leaves) {
      // Sum rows directly (ascending row order) instead of reusing histogram
      // totals, so leaf values do not carry histogram-subtraction rounding.
      double g = 0.0;
      double h = 0.0;
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
        g += grad_[rows_[i]];
        h += hess_[rows_[i]];
      }
      nodes[leaf.node].value = LeafValue(g, h, params_.l2_leaf_reg);
    }
    return Tree(std::move(nodes));
  }

 private:
  std::vector<HistBin> BuildHistogram(std::size_t begin, std::size_t end) const {
    std::vector<HistBin> hist(offsets_.back());
    const std::size_t n_features = bins_.num_features();
    ParallelFor(n_features, [&](std::size_t f) {
      if (!active_[f]) return;
      const auto column = bins_.Column(f);
      HistBin* out = hist.data() + offsets_[f];
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        HistBin& b = out[column[r]];
        b.grad += grad_[r];
        b.hess += hess_[r];
        ++b.count;
      }
    });
    return hist;
  }

  void SumHistogram(GrowLeaf& leaf) const {
    leaf.grad = 0.0;
    leaf.hess = 0.0;
    for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
      leaf.grad += grad_[rows_[i]];
      leaf.hess += hess_[rows_[i]];
    }
  }

  SplitCandidate FindBestSplit(const GrowLeaf& leaf) const {
    const std::size_t count = leaf.end - leaf.begin;
    if (params_.max_depth >= 0 && leaf.depth >= params_.max_depth) return {};
    if (count < 2 * std::max<std::size_t>(params_.min_docs_per_leaf, 1)) return {};
    const double l2 = params_.l2_leaf_reg;
    const double parent = LeafObjective(leaf.grad, leaf.hess, l2);
    const std::size_t n_features = bins_.num_features();
    std::vector<SplitCandidate> per_feature(n_features);
    ParallelFor(n_features, [&](std::size_t f) {
      if (!active_[f]) return;
      const std::size_t nb = bins_.NumBins(f);
      const HistBin* h = leaf.hist.data() + offsets_[f];
      double gl = 0.0;
      double hl = 0.0;
      std::size_t cl = 0;
      SplitCandidate best;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += h[b].grad;
        hl += h[b].hess;
        cl += h[b].count;
        if (cl < params_.min_docs_per_leaf) continue;
        const std::size_t cr = count - cl;
        if (cr < params_.min_docs_per_leaf || cr == 0) break;
        if (cl == 0) continue;
        const double gr = leaf.grad - gl;
        const double hr = leaf.hess - hl;
        const double gain =
            LeafObjective(gl, hl, l2) + LeafObjective(gr, hr, l2) - parent;
        if (gain > best.gain) {
          best = {gain, static_cast<int>(f), static_cast<int>(b)};
        }
      }
      per_feature[f] = best;
    });
    SplitCandidate best;
    for (const auto& c : per_feature) {
      if (c.Valid() && c.gain > best.gain) best = c;
    }
    if (!best.Valid() || best.gain <= std::max(kMinGain, params_.min_split_gain)) return {};
    return best;
  }

  std::pair<GrowLeaf, GrowLeaf> Split(GrowLeaf& parent, std::vector<TreeNode>& nodes) {
    const auto split = parent.best;
    const auto column = bins_.Column(split.feature);
    const auto mid = std::stable_partition(
        rows_.begin() + parent.begin, rows_.begin() + parent.end,
        [&](std::uint32_t r) { return column[r] <= split.bin; });
    const std::size_t mid_index = static_cast<std::size_t>(mid - rows_.begin());

    const int left_node = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    TreeNode& node = nodes[parent.node];
    node.feature = split.feature;
    node.threshold_bin = split.bin;
    node.threshold = bins_.Boundaries(split.feature)[split.bin];
    node.left = left_node;
    node.right = left_node + 1;
    node.gain = split.gain;

    GrowLeaf left;
    left.node = left_node;
    left.begin = parent.begin;
    left.end = mid_index;
    left.depth = parent.depth + 1;
    GrowLeaf right;
    right.node = left_node + 1;
    right.begin = mid_index;
    right.end = parent.end;
    right.depth = parent.depth + 1;

    GrowLeaf& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
    GrowLeaf& large = &small == &left ? right : left;
    small.hist = BuildHistogram(small.begin, small.end);
    large.hist = std::move(parent.hist);
    for (std::size_t i = 0; i < large.hist.size(); ++i) {
      large.hist[i].grad -= small.hist[i].grad;
      large.hist[i].hess -= small.hist[i].hess;
      large.hist[i].count -= small.hist[i].count;
    }
    SumHistogram(left);
    SumHistogram(right);
    left.best = FindBestSplit(left);
    right.best = FindBestSplit(right);
    return {std::move(left), std::move(right)};
  }

  const BinIndex& bins_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const TreeParams& params_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint32_t> rows_;
};

std::vector<double> ComputeBoundaries(std::vector<double> values, int n_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  for (double v : values) {
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
  }
  std::vector<double> boundaries;
  if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      boundaries.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    }
  } else {
    const std::size_t n = values.size();
    for (int k = 1; k < n_bins; ++k) {
      const std::size_t idx = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(n_bins);
      if (idx == 0 || idx >= n) continue;
      const double lo = values[idx - 1];
      const double hi = values[idx];
      if (lo == hi) continue;
      const double cut = lo + (hi - lo) / 2.0;
      if (boundaries.empty() || cut > boundaries.back()) boundaries.push_back(cut);
    }
  }
  boundaries.push_back(kInf);
  return boundaries;
}

Json TreeToJson(const Tree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes()) {
    if (n.IsLeaf()) {
      nodes.push_back({{"value", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"threshold_bin", n.threshold_bin},
                       {"left", n.left},
                       {"right", n.right},
                       {"gain", n.gain}});
    }
  }
  return nodes;
}

Tree TreeFromJson(const Json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j) {
    TreeNode n;
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.threshold_bin = jn.at("threshold_bin").get<int>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
      n.gain = jn.at("gain").get<double>();
    } else {
      n.value = jn.at("value").get<double>();
    }
    nodes.push_back(n);
  }
  if (nodes.empty()) throw std::runtime_error("model: tree without nodes");
  const int n_nodes = static_cast<int>(nodes.size());
  for (const auto& n : nodes) {
    if (!n.IsLeaf() && (n.left <= 0 || n.right <= 0 || n.left >= n_nodes || n.right >= n_nodes)) {
      throw std::runtime_error("model: child index out of range");
    }
  }
  return Tree(std::move(nodes));
}

}  // namespace

std::size_t BinIndex::BinOf(const std::vector<double>& boundaries, double value) {
  const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), value);
  if (it == boundaries.end()) return boundaries.size() - 1;  // NaN
  return static_cast<std::size_t>(it - boundaries.begin());
}

BinIndex BuildBins(const DenseMatrix& features, int n_bins) {
  if (n_bins < 2 || n_bins > kMaxBins) {
    throw std::invalid_argument("n_bins must lie in [2, 256]");
  }
  BinIndex index;
  const std::size_t rows = features.rows();
  const std::size_t cols = features.cols();
  index.num_rows_ = rows;
  index.boundaries_.resize(cols);
  index.bins_.assign(rows * cols, 0);
  ParallelFor(cols, [&](std::size_t f) {
    std::vector<double> column(rows);
    for (std::size_t r = 0; r < rows; ++r) column[r] = features(r, f);
    auto boundaries = ComputeBoundaries(column, n_bins);
    std::uint8_t* out = index.bins_.data() + f * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      out[r] = static_cast<std::uint8_t>(BinIndex::BinOf(boundaries, column[r]));
    }
    index.boundaries_[f] = std::move(boundaries);
  });
  return index;
}

BinIndex BuildBins(const Dataset& dataset, int n_bins) {
  return BuildBins(Densify(dataset), n_bins);
}

std::size_t Tree::NumLeaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.IsLeaf(); }));
}

std::size_t Tree::Depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t max_depth = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.IsLeaf()) continue;
    depth[n.left] = depth[n.right] = depth[i] + 1;
    max_depth = std::max(max_depth, depth[i] + 1);
  }
  return max_depth;
}

double Tree::Predict(std::span<const double> features) const {
  int i = 0;
  while (!nodes_[i].IsLeaf()) {
    const auto& n = nodes_[i];
    const double v = static_cast<std::size_t>(n.feature) < features.size() ? features[n.feature] : 0.0;
    i = v <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].value;
}

double Tree::PredictBinned(const BinIndex& bins, std::size_t row) const {
  int i = 0;
  while (!nodes_[i].IsLeaf()) {
    const auto& n = nodes_[i];
    i = bins.Bin(row, n.feature) <= n.threshold_bin ? n.left : n.right;
  }
  return nodes_[i].value;
}

Tree FitTree(const BinIndex& bins, std::span<const double> grad,
             std::span<const double> hess, const TreeParams& params,
             const FitSubset& subset) {
  if (grad.size() != bins.num_rows() || hess.size() != bins.num_rows()) {
    throw std::invalid_argument("gradient length does not match row count");
  }
  if (params.max_leaves < 1) throw std::invalid_argument("max_leaves must be >= 1");
  TreeGrower grower(bins, grad, hess, params, subset);
  return grower.Grow();
}

double Ensemble::Predict(std::span<const double> features) const {
  double score = base_score_;
  for (const auto& tree : trees_) score += learning_rate_ * tree.Predict(features);
  return score;
}

std::vector<double> Ensemble::Predict(const DenseMatrix& features) const {
  std::vector<double> out(features.rows());
  ParallelFor(features.rows(), [&](std::size_t r) { out[r] = Predict(features.Row(r)); });
  return out;
}

std::string SerializeEnsemble(const Ensemble& ensemble) {
  Json boundaries = Json::array();
  for (const auto& b : ensemble.bin_boundaries()) {
    // The trailing +inf edge is implicit; JSON has no infinity.
    Json finite = Json::array();
    for (double v : b) {
      if (std::isfinite(v)) finite.push_back(v);
    }
    boundaries.push_back(std::move(finite));
  }
  Json trees = Json::array();
  for (const auto& t : ensemble.trees()) trees.push_back(TreeToJson(t));
  Json j = {{"format", "ultr-ensemble"},
            {"version", kFormatVersion},
            {"learning_rate", ensemble.learning_rate()},
            {"base_score", ensemble.base_score()},
            {"num_features", ensemble.num_features()},
            {"bin_boundaries", std::move(boundaries)},
            {"trees", std::move(trees)}};
  return j.dump();
}

Ensemble DeserializeEnsemble(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("model: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "ultr-ensemble") {
      throw std::runtime_error("model: unknown format");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw std::runtime_error("model: unsupported version " +
                               std::to_string(j.at("version").get<int>()));
    }
    Ensemble ensemble(j.at("learning_rate").get<double>(),
                      j.at("num_features").get<std::size_t>());
    ensemble.set_base_score(j.at("base_score").get<double>());
    std::vector<std::vector<double>> boundaries;
    for (const auto& b : j.at("bin_boundaries")) {
      auto edges = b.get<std::vector<double>>();
      edges.push_back(kInf);
      boundaries.push_back(std::move(edges));
    }
    ensemble.set_bin_boundaries(std::move(boundaries));
    for (const auto& t : j.at("trees")) ensemble.AddTree(TreeFromJson(t));
    return ensemble;
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("model: malformed: ") + e.what());
  }
}

void SaveEnsemble(const Ensemble& ensemble, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << SerializeEnsemble(ensemble) << '\n';
}

Ensemble LoadEnsemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DeserializeEnsemble(buffer.str());
}

std::vector<std::uint32_t> SampleRows(std::size_t n_rows, double fraction,
                                      std::uint64_t seed, std::size_t round) {
  std::vector<std::uint32_t> rows;
  if (fraction >= 1.0) {
    rows.resize(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) rows[r] = static_cast<std::uint32_t>(r);
    return rows;
  }
  Engine engine = MakeEngine(seed, Stream::kBagging, round);
  rows.reserve(static_cast<std::size_t>(fraction * static_cast<double>(n_rows)) + 1);
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (UniformUnit(engine) < fraction) rows.push_back(static_cast<std::uint32_t>(r));
  }
  if (rows.empty() && n_rows > 0) rows.push_back(0);
  return rows;
}

std::vector<std::uint8_t> SampleFeatures(std::size_t n_features, double fraction,
                                         std::uint64_t seed, std::size_t round) {
  std::vector<std::uint8_t> mask(n_features, 1);
  if (fraction >= 1.0 || n_features == 0) return mask;
  auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_features)));
  keep = std::clamp<std::size_t>(keep, 1, n_features);
  std::vector<std::size_t> order(n_features);
  for (std::size_t f = 0; f < n_features; ++f) order[f] = f;
  Engine engine = MakeEngine(seed, Stream::kFeatureFraction, round);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto j = i + static_cast<std::size_t>(UniformUnit(engine) * static_cast<double>(n_features - i));
    std::swap(order[i], order[std::min(j, n_features - 1)]);
  }
  std::fill(mask.begin(), mask.end(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

const Tree& BoostOneRound(const BinIndex& bins, std::span<const double> grad,
                          std::span<const double> hess, const BoostingParams& params,
                          std::size_t round, Ensemble& ensemble,
                          std::span<double> scores) {
  const auto rows = SampleRows(bins.num_rows(), params.bagging_fraction, params.seed, round);
  const auto features = SampleFeatures(bins.num_features(), params.feature_fraction,
                                       params.seed, round);
  Tree tree = FitTree(bins, grad, hess, params.tree, {rows, features});
  const double lr = ensemble.learning_rate();
  ParallelFor(bins.num_rows(), [&](std::size_t r) {
    scores[r] += lr * tree.PredictBinned(bins, r);
  });
  ensemble.AddTree(std::move(tree));
  return ensemble.trees().back();
}

}  // namespace ultr
