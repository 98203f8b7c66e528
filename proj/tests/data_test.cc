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

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ultr/data.h"
#include "ultr/log.h"

namespace ultr {
namespace {

TEST(SvmlightTest, SingleLine) {
  const Dataset d = ParseSvmlightText("2 qid:1 5:0.5\n");
  ASSERT_EQ(d.queries.size(), 1u);
  ASSERT_EQ(d.queries[0].docs.size(), 1u);
  EXPECT_EQ(d.queries[0].query_id, "1");
  EXPECT_EQ(d.queries[0].docs[0].label, 2);
  ASSERT_EQ(d.queries[0].docs[0].features.size(), 1u);
  EXPECT_EQ(d.queries[0].docs[0].features[0].index, 4u);
  EXPECT_EQ(d.queries[0].docs[0].features[0].value, 0.5);
  EXPECT_EQ(d.num_features, 5u);
}

TEST(SvmlightTest, TwoQueries) {
  const Dataset d = ParseSvmlightText("1 qid:1 1:1\n0 qid:2 1:2\n");
  ASSERT_EQ(d.queries.size(), 2u);
  EXPECT_EQ(d.queries[0].docs.size(), 1u);
  EXPECT_EQ(d.queries[1].docs.size(), 1u);
}

TEST(SvmlightTest, CommentsBlankLinesAndUnsortedFeatures) {
  const Dataset d = ParseSvmlightText("# header\n\n3 qid:a 3:1.5 1:-2 # trailing\n");
  ASSERT_EQ(d.queries.size(), 1u);
  const auto& f = d.queries[0].docs[0].features;
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].index, 0u);
  EXPECT_EQ(f[1].index, 2u);
  EXPECT_NO_THROW(d.Validate());
}

TEST(SvmlightTest, BadLabelReportsLine) {
  try {
    ParseSvmlightText("x qid:1 1:1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(SvmlightTest, MalformedInputs) {
  EXPECT_THROW(ParseSvmlightText(""), ParseError);
  EXPECT_THROW(ParseSvmlightText("1 1:1\n"), ParseError);
  EXPECT_THROW(ParseSvmlightText("1 qid:1 0:1\n"), ParseError);
  EXPECT_THROW(ParseSvmlightText("1 qid:1 2:abc\n"), ParseError);
  EXPECT_THROW(ParseSvmlightText("1 qid:1 2:1 2:3\n"), ParseError);
  try {
    ParseSvmlightText("1 qid:1 1:1\n1 qid:1 1:1 nope\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(SvmlightTest, ReappearingQidWarnsAndSplits) {
  std::vector<std::string> warnings;
  SetWarningSink([&](const std::string& m) { warnings.push_back(m); });
  const Dataset d = ParseSvmlightText("1 qid:1 1:1\n0 qid:2 1:1\n2 qid:1 1:1\n");
  SetWarningSink(nullptr);
  EXPECT_EQ(d.queries.size(), 3u);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SvmlightTest, WriteParseIsIdempotent) {
  SyntheticConfig cfg;
  cfg.n_queries = 7;
  cfg.docs_per_query = 5;
  cfg.n_features = 6;
  const Dataset d = GenerateSynthetic(cfg);
  const std::string text = ToSvmlightText(d);
  const Dataset back = ParseSvmlightText(text);
  EXPECT_EQ(back, d);
  EXPECT_EQ(ToSvmlightText(back), text);
}

TEST(DatasetTest, ValidateRejectsBadData) {
  Dataset d;
  d.num_features = 2;
  d.queries.push_back({"q", {}});
  EXPECT_THROW(d.Validate(), std::invalid_argument);
  d.queries[0].docs.push_back({{{0, 1.0}}, 5});
  EXPECT_THROW(d.Validate(), std::invalid_argument);
  d.queries[0].docs[0].label = 4;
  EXPECT_NO_THROW(d.Validate());
  d.queries[0].docs[0].features = {{1, 1.0}, {0, 1.0}};
  EXPECT_THROW(d.Validate(), std::invalid_argument);
  d.queries[0].docs[0].features = {{2, 1.0}};
  EXPECT_THROW(d.Validate(), std::invalid_argument);
}

TEST(DatasetTest, OffsetsAndDensify) {
  const Dataset d = ParseSvmlightText("1 qid:1 2:3\n0 qid:1 1:1\n2 qid:2 3:4\n");
  EXPECT_EQ(d.QueryOffsets(), (std::vector<std::size_t>{0, 2, 3}));
  const DenseMatrix m = Densify(d);
  ASSERT_EQ(m.rows(), 3u);
  ASSERT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(0, 1), 3.0);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(2, 2), 4.0);
  const std::vector<std::pair<std::size_t, std::size_t>> refs = {{1, 0}, {0, 1}};
  const DenseMatrix sub = Densify(d, refs);
  EXPECT_EQ(sub(0, 2), 4.0);
  EXPECT_EQ(sub(1, 0), 1.0);
}

TEST(SyntheticTest, ShapeAndDeterminism) {
  SyntheticConfig cfg;
  cfg.n_queries = 100;
  cfg.docs_per_query = 20;
  cfg.seed = 3;
  const Dataset a = GenerateSynthetic(cfg);
  const Dataset b = GenerateSynthetic(cfg);
  ASSERT_EQ(a.queries.size(), 100u);
  for (const auto& q : a.queries) EXPECT_EQ(q.docs.size(), 20u);
  EXPECT_EQ(a, b);
  EXPECT_NO_THROW(a.Validate());
  cfg.seed = 4;
  EXPECT_NE(GenerateSynthetic(cfg), a);
}

TEST(SyntheticTest, EveryGradeAtLeastTwoPercent) {
  for (double noise : {0.0, 0.1}) {
    SyntheticConfig cfg;
    cfg.n_queries = 500;
    cfg.docs_per_query = 20;
    cfg.label_noise = noise;
    const Dataset d = GenerateSynthetic(cfg);
    std::array<std::size_t, 5> hist{};
    for (const auto& q : d.queries) {
      for (const auto& doc : q.docs) ++hist.at(doc.label);
    }
    for (int g = 0; g < 5; ++g) {
      EXPECT_GE(static_cast<double>(hist[g]) / 1e4, 0.02) << "grade " << g << " noise " << noise;
    }
  }
}

TEST(SyntheticTest, RejectsBadConfig) {
  SyntheticConfig cfg;
  cfg.n_features = 4;
  EXPECT_THROW(GenerateSynthetic(cfg), std::invalid_argument);
  cfg.n_features = 10;
  cfg.label_noise = 1.5;
  EXPECT_THROW(GenerateSynthetic(cfg), std::invalid_argument);
  cfg.label_noise = 0.0;
  cfg.n_queries = 0;
  EXPECT_THROW(GenerateSynthetic(cfg), std::invalid_argument);
}

TEST(SplitTest, PartitionIsDisjointAndSeeded) {
  SyntheticConfig cfg;
  cfg.n_queries = 50;
  cfg.docs_per_query = 2;
  cfg.n_features = 5;
  const Dataset d = GenerateSynthetic(cfg);
  const auto [train, test] = SplitByQuery(d, 0.8, 11);
  EXPECT_EQ(train.queries.size(), 40u);
  EXPECT_EQ(test.queries.size(), 10u);
  std::vector<std::string> ids;
  for (const auto& q : train.queries) ids.push_back(q.query_id);
  for (const auto& q : test.queries) ids.push_back(q.query_id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::unique(ids.begin(), ids.end()), ids.end());
  EXPECT_EQ(ids.size(), 50u);
  const auto again = SplitByQuery(d, 0.8, 11);
  EXPECT_EQ(again.first, train);
  EXPECT_THROW(SplitByQuery(d, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(SplitByQuery(d, 0.0, 0), std::invalid_argument);
}

Dataset TwentyDocSource() {
  SyntheticConfig cfg;
  cfg.n_queries = 3;
  cfg.docs_per_query = 20;
  cfg.n_features = 5;
  return GenerateSynthetic(cfg);
}

TEST(ClickLogTest, EmptyRoundTrip) {
  const Dataset src = TwentyDocSource();
  ClickDataset empty;
  const std::string text = ToClickLogText(empty);
  EXPECT_NE(text.find("ultr-click-log"), std::string::npos);
  const ClickDataset back = ParseClickLogText(text, src);
  EXPECT_TRUE(back.sessions.empty());
}

TEST(ClickLogTest, OneSessionRoundTripThroughFile) {
  const Dataset src = TwentyDocSource();
  ClickDataset c;
  c.sessions.push_back({1, {4, 7}, {1, 0}});
  const auto path = (std::filesystem::temp_directory_path() / "ultr_click_rt.jsonl").string();
  WriteClickLog(c, path);
  EXPECT_EQ(ReadClickLog(path, src), c);
  std::remove(path.c_str());
}

TEST(ClickLogTest, DanglingDocRef) {
  const Dataset src = TwentyDocSource();
  ClickDataset c;
  c.sessions.push_back({0, {99}, {0}});
  const std::string text = ToClickLogText(c);
  try {
    ParseClickLogText(text, src);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dangling"), std::string::npos);
  }
}

TEST(ClickLogTest, MalformedRecords) {
  const Dataset src = TwentyDocSource();
  EXPECT_THROW(ParseClickLogText("", src), ParseError);
  EXPECT_THROW(ParseClickLogText("{\"format\":\"other\",\"version\":1}\n", src), ParseError);
  const std::string header = ToClickLogText(ClickDataset{});
  EXPECT_THROW(ParseClickLogText(header + "{not json\n", src), ParseError);
  EXPECT_THROW(ParseClickLogText(header + "{\"qid\":0}\n", src), ParseError);
  EXPECT_THROW(ParseClickLogText(header + "{\"qid\":0,\"docs\":[1,2],\"clicks\":[1]}\n", src),
               std::invalid_argument);
  EXPECT_THROW(ParseClickLogText(header + "{\"qid\":9,\"docs\":[1],\"clicks\":[1]}\n", src),
               std::invalid_argument);
}

}  // namespace
}  // namespace ultr
