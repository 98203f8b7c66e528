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

#include "ultr/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "json.hpp"
#include "ultr/log.h"
#include "ultr/rng.h"

namespace ultr {
namespace {

using Json = nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool ParseNumber(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t Dataset::NumDocs() const {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.docs.size();
  return n;
}

std::vector<std::size_t> Dataset::QueryOffsets() const {
  std::vector<std::size_t> offsets(queries.size() + 1, 0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    offsets[q + 1] = offsets[q] + queries[q].docs.size();
  }
  return offsets;
}

void Dataset::Validate(int max_grade) const {
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto& group = queries[q];
    if (group.docs.empty()) {
      throw std::invalid_argument("query " + group.query_id + " has no documents");
    }
    for (const auto& doc : group.docs) {
      if (doc.label < 0 || doc.label > max_grade) {
        throw std::invalid_argument("query " + group.query_id +
                                    ": label out of range");
      }
      for (std::size_t k = 0; k < doc.features.size(); ++k) {
        if (doc.features[k].index >= num_features) {
          throw std::invalid_argument("query " + group.query_id +
                                      ": feature index beyond num_features");
        }
        if (k > 0 && doc.features[k].index <= doc.features[k - 1].index) {
          throw std::invalid_argument("query " + group.query_id +
                                      ": unsorted sparse features");
        }
      }
    }
  }
}

std::vector<double> DenseFeatures(const SparseVector& features,
                                  std::size_t num_features) {
  std::vector<double> dense(num_features, 0.0);
  for (const auto& e : features) {
    if (e.index < num_features) dense[e.index] = e.value;
  }
  return dense;
}

DenseMatrix Densify(const Dataset& dataset) {
  DenseMatrix m(dataset.NumDocs(), dataset.num_features);
  std::size_t row = 0;
  for (const auto& q : dataset.queries) {
    for (const auto& doc : q.docs) {
      auto out = m.Row(row++);
      for (const auto& e : doc.features) {
        if (e.index < out.size()) out[e.index] = e.value;
      }
    }
  }
  return m;
}

DenseMatrix Densify(const Dataset& dataset,
                    std::span<const std::pair<std::size_t, std::size_t>> refs) {
  DenseMatrix m(refs.size(), dataset.num_features);
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const auto& doc = dataset.queries.at(refs[r].first).docs.at(refs[r].second);
    auto out = m.Row(r);
    for (const auto& e : doc.features) {
      if (e.index < out.size()) out[e.index] = e.value;
    }
  }
  return m;
}

Dataset ParseSvmlightText(const std::string& text) {
  Dataset dataset;
  std::unordered_set<std::string> seen_qids;
  std::string current_qid;
  bool have_query = false;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  std::size_t n_docs = 0;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      auto end = line.find_first_of(" \t", start);
      if (end == std::string_view::npos) end = line.size();
      tokens.push_back(line.substr(start, end - start));
      pos = end;
    }
    if (tokens.size() < 2) throw ParseError(line_no, "expected label and qid");

    int label = 0;
    if (!ParseNumber(tokens[0], label)) {
      throw ParseError(line_no, "label is not an integer: " + std::string(tokens[0]));
    }
    if (tokens[1].substr(0, 4) != "qid:" || tokens[1].size() == 4) {
      throw ParseError(line_no, "expected qid:<id>");
    }
    const std::string qid(tokens[1].substr(4));

    Document doc;
    doc.label = label;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "malformed feature " + std::string(tokens[t]));
      }
      std::uint32_t index = 0;
      double value = 0.0;
      if (!ParseNumber(tokens[t].substr(0, colon), index) || index == 0 ||
          !ParseNumber(tokens[t].substr(colon + 1), value)) {
        throw ParseError(line_no, "malformed feature " + std::string(tokens[t]));
      }
      doc.features.push_back({index - 1, value});
      max_index = std::max<std::size_t>(max_index, index);
    }
    std::sort(doc.features.begin(), doc.features.end(),
              [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
    for (std::size_t k = 1; k < doc.features.size(); ++k) {
      if (doc.features[k].index == doc.features[k - 1].index) {
        throw ParseError(line_no, "duplicate feature index");
      }
    }

    if (!have_query || qid != current_qid) {
      if (!seen_qids.insert(qid).second) {
        Warn("qid " + qid + " reappears at line " + std::to_string(line_no) +
             "; treating it as a separate query");
      }
      dataset.queries.push_back(QueryGroup{qid, {}});
      current_qid = qid;
      have_query = true;
    }
    dataset.queries.back().docs.push_back(std::move(doc));
    ++n_docs;
  }
  if (n_docs == 0) throw ParseError(line_no, "no documents");
  dataset.num_features = max_index;
  return dataset;
}

Dataset ParseSvmlight(const std::string& path) {
  return ParseSvmlightText(ReadFile(path));
}

std::string ToSvmlightText(const Dataset& dataset) {
  std::string out;
  for (const auto& q : dataset.queries) {
    for (const auto& doc : q.docs) {
      out += std::to_string(doc.label);
      out += " qid:";
      out += q.query_id;
      for (const auto& e : doc.features) {
        out += ' ';
        out += std::to_string(e.index + 1);
        out += ':';
        out += FormatDouble(e.value);
      }
      out += '\n';
    }
  }
  return out;
}

void WriteSvmlight(const Dataset& dataset, const std::string& path) {
  WriteFile(path, ToSvmlightText(dataset));
}

Dataset GenerateSynthetic(const SyntheticConfig& config) {
  if (config.n_queries < 1 || config.docs_per_query < 1) {
    throw std::invalid_argument("n_queries and docs_per_query must be >= 1");
  }
  if (config.n_features < 5) {
    throw std::invalid_argument("n_features must be >= 5");
  }
  if (config.label_noise < 0.0 || config.label_noise > 1.0) {
    throw std::invalid_argument("label_noise must lie in [0, 1]");
  }
  Engine engine = MakeEngine(config.seed, Stream::kSyntheticData);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset dataset;
  dataset.num_features = config.n_features;
  dataset.queries.resize(config.n_queries);
  std::vector<double> scores;
  scores.reserve(config.n_queries * config.docs_per_query);
  for (std::size_t q = 0; q < config.n_queries; ++q) {
    auto& group = dataset.queries[q];
    group.query_id = std::to_string(q + 1);
    group.docs.resize(config.docs_per_query);
    for (auto& doc : group.docs) {
      doc.features.resize(config.n_features);
      for (std::uint32_t f = 0; f < config.n_features; ++f) {
        doc.features[f] = {f, normal(engine)};
      }
      const auto x = [&](int k) { return doc.features[k].value; };
      scores.push_back(x(0) + 0.8 * x(1) + 0.6 * x(2) + 0.5 * x(3) + 0.4 * x(4) +
                       0.6 * x(0) * x(1) + 0.4 * x(2) * x(4));
    }
  }

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  // Sparse relevance: most documents are grade 0, as in web-search data.
  constexpr double kCuts[] = {0.80, 0.88, 0.94, 0.975};
  std::vector<double> thresholds;
  for (double c : kCuts) {
    const auto k = static_cast<std::size_t>(c * static_cast<double>(sorted.size()));
    thresholds.push_back(sorted[std::min(k, sorted.size() - 1)]);
  }

  std::uniform_int_distribution<int> uniform_grade(0, kDefaultMaxGrade);
  std::size_t i = 0;
  for (auto& group : dataset.queries) {
    for (auto& doc : group.docs) {
      const double s = scores[i++];
      int grade = 0;
      while (grade < 4 && s >= thresholds[grade]) ++grade;
      if (config.label_noise > 0.0 && UniformUnit(engine) < config.label_noise) {
        grade = uniform_grade(engine);
      }
      doc.label = grade;
    }
  }
  return dataset;
}

Dataset SelectQueries(const Dataset& dataset,
                      std::span<const std::size_t> query_indices) {
  Dataset out;
  out.num_features = dataset.num_features;
  out.queries.reserve(query_indices.size());
  for (std::size_t q : query_indices) out.queries.push_back(dataset.queries.at(q));
  return out;
}

std::pair<Dataset, Dataset> SplitByQuery(const Dataset& dataset,
                                         double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.queries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine engine = MakeEngine(seed, Stream::kSplit);
  // Fisher-Yates with our own uniform draw keeps the split independent of the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(UniformUnit(engine) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {SelectQueries(dataset, train), SelectQueries(dataset, test)};
}

std::size_t ClickDataset::MaxPosition() const {
  std::size_t k = 0;
  for (const auto& s : sessions) k = std::max(k, s.docs.size());
  return k;
}

void ClickDataset::Validate(const Dataset& source) const {
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const std::string name = "session " + std::to_string(i);
    if (s.query >= source.queries.size()) {
      throw std::invalid_argument(name + ": query index " + std::to_string(s.query) +
                                  " out of range");
    }
    if (s.docs.size() != s.clicks.size()) {
      throw std::invalid_argument(name + ": docs and clicks differ in length");
    }
    if (s.docs.size() > truncation) {
      throw std::invalid_argument(name + ": longer than truncation");
    }
    const auto n_docs = source.queries[s.query].docs.size();
    for (auto d : s.docs) {
      if (d >= n_docs) {
        throw std::invalid_argument(name + ": dangling doc_ref " + std::to_string(d));
      }
    }
    for (auto c : s.clicks) {
      if (c > 1) throw std::invalid_argument(name + ": click is not 0/1");
    }
  }
}

std::string ToClickLogText(const ClickDataset& clicks) {
  std::string out;
  Json header = {{"format", "ultr-click-log"},
                 {"version", 1},
                 {"truncation", clicks.truncation},
                 {"sessions", clicks.sessions.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& s : clicks.sessions) {
    Json line = {{"qid", s.query}, {"docs", s.docs}, {"clicks", s.clicks}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void WriteClickLog(const ClickDataset& clicks, const std::string& path) {
  WriteFile(path, ToClickLogText(clicks));
}

ClickDataset ParseClickLogText(const std::string& text, const Dataset& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  ClickDataset out;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (Trim(raw).empty()) continue;
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("format", "") != "ultr-click-log" || j.value("version", 0) != 1) {
          throw ParseError(line_no, "missing or unsupported click-log header");
        }
        out.truncation = j.at("truncation").get<std::size_t>();
        have_header = true;
        continue;
      }
      ClickSession s;
      s.query = j.at("qid").get<std::size_t>();
      s.docs = j.at("docs").get<std::vector<std::uint32_t>>();
      s.clicks = j.at("clicks").get<std::vector<std::uint8_t>>();
      out.sessions.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw ParseError(line_no, std::string("bad click-log record: ") + e.what());
    }
  }
  if (!have_header) throw ParseError(line_no, "empty click log");
  out.Validate(source);
  return out;
}

ClickDataset ReadClickLog(const std::string& path, const Dataset& source) {
  return ParseClickLogText(ReadFile(path), source);
}

}  // namespace ultr
