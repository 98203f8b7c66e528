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

// Query-grouped ranking data, click logs, and synthetic data generation.

#ifndef ULTR_DATA_H_
#define ULTR_DATA_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ultr {

inline constexpr int kDefaultMaxGrade = 4;
inline constexpr std::size_t kDefaultTruncation = 10;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct FeatureEntry {
  std::uint32_t index;  // 0-based
  double value;
  bool operator==(const FeatureEntry&) const = default;
};

// Entries sorted by index, no duplicates. Absent entries are 0.
using SparseVector = std::vector<FeatureEntry>;

struct Document {
  SparseVector features;
  int label = 0;
  bool operator==(const Document&) const = default;
};

// Documents keep their stored order; nothing in the library sorts them.
struct QueryGroup {
  std::string query_id;
  std::vector<Document> docs;
  bool operator==(const QueryGroup&) const = default;
};

struct Dataset {
  std::vector<QueryGroup> queries;
  std::size_t num_features = 0;

  std::size_t NumDocs() const;
  // Offset of each query's first document in the flattened document order;
  // has queries.size() + 1 entries.
  std::vector<std::size_t> QueryOffsets() const;
  // Throws std::invalid_argument when an invariant does not hold.
  void Validate(int max_grade = kDefaultMaxGrade) const;

  bool operator==(const Dataset&) const = default;
};

// Row-major dense copy of feature vectors.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> Row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> Row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// All documents of the dataset in flattened order (see QueryOffsets).
DenseMatrix Densify(const Dataset& dataset);
// Selected documents, given as (query index, doc index) pairs.
DenseMatrix Densify(const Dataset& dataset,
                    std::span<const std::pair<std::size_t, std::size_t>> refs);
std::vector<double> DenseFeatures(const SparseVector& features,
                                  std::size_t num_features);

// SVMLight / LETOR text: `<label> qid:<id> <idx>:<val> ... [# comment]` with
// 1-based feature indices. Contiguous qid runs form one query; a qid that
// reappears after a different one starts a new query and triggers a warning.
Dataset ParseSvmlight(const std::string& path);
Dataset ParseSvmlightText(const std::string& text);
std::string ToSvmlightText(const Dataset& dataset);
void WriteSvmlight(const Dataset& dataset, const std::string& path);

struct SyntheticConfig {
  std::size_t n_queries = 2000;
  std::size_t docs_per_query = 20;
  std::size_t n_features = 50;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

// Features are i.i.d. N(0, 1). A hidden score
//   s = x0 + 0.8 x1 + 0.6 x2 + 0.5 x3 + 0.4 x4 + 0.6 x0 x1 + 0.4 x2 x4
// is cut at the dataset-wide 80/88/94/97.5 % quantiles into grades 0..4. With probability label_noise a
// grade is replaced by a uniform draw from 0..4. Features past x4 are noise.
Dataset GenerateSynthetic(const SyntheticConfig& config);

// Splits queries into (train, test) with round(train_fraction * n) train
// queries chosen by a seeded shuffle. Query order within each part follows the
// source order.
std::pair<Dataset, Dataset> SplitByQuery(const Dataset& dataset,
                                         double train_fraction,
                                         std::uint64_t seed);

// Dataset restricted to the given query indices, in the given order.
Dataset SelectQueries(const Dataset& dataset,
                      std::span<const std::size_t> query_indices);

// One logged impression: the documents shown for a query in logged order
// (position 1 first) with a click bit per position.
struct ClickSession {
  std::size_t query = 0;            // index into Dataset::queries
  std::vector<std::uint32_t> docs;  // indices into QueryGroup::docs
  std::vector<std::uint8_t> clicks;
  bool operator==(const ClickSession&) const = default;
};

struct ClickDataset {
  std::vector<ClickSession> sessions;
  std::size_t truncation = kDefaultTruncation;

  std::size_t MaxPosition() const;
  // Throws std::invalid_argument naming the first bad session.
  void Validate(const Dataset& source) const;
  bool operator==(const ClickDataset&) const = default;
};

// JSON lines. Line 1 is a header object
//   {"format":"ultr-click-log","version":1,"truncation":K,"sessions":N}
// followed by one {"qid":Q,"docs":[...],"clicks":[...]} per session, where
// qid is the query index in the source dataset.
void WriteClickLog(const ClickDataset& clicks, const std::string& path);
ClickDataset ReadClickLog(const std::string& path, const Dataset& source);
std::string ToClickLogText(const ClickDataset& clicks);
ClickDataset ParseClickLogText(const std::string& text, const Dataset& source);

}  // namespace ultr

#endif  // ULTR_DATA_H_
