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

#include "ultr/experiment.h"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ultr/lambda_rank.h"
#include "ultr/version.h"

namespace ultr {
namespace {

using Json = nlohmann::json;

Json BoostingToJson(const BoostingParams& b) {
  return {{"num_trees", b.num_trees},
          {"learning_rate", b.learning_rate},
          {"max_leaves", b.tree.max_leaves},
          {"max_depth", b.tree.max_depth},
          {"min_docs_per_leaf", b.tree.min_docs_per_leaf},
          {"l2_leaf_reg", b.tree.l2_leaf_reg},
          {"min_split_gain", b.tree.min_split_gain},
          {"feature_fraction", b.feature_fraction},
          {"bagging_fraction", b.bagging_fraction},
          {"n_bins", b.n_bins},
          {"seed", b.seed}};
}

BoostingParams BoostingFromJson(const Json& j) {
  BoostingParams b;
  b.num_trees = j.at("num_trees").get<std::size_t>();
  b.learning_rate = j.at("learning_rate").get<double>();
  b.tree.max_leaves = j.at("max_leaves").get<int>();
  b.tree.max_depth = j.at("max_depth").get<int>();
  b.tree.min_docs_per_leaf = j.at("min_docs_per_leaf").get<std::size_t>();
  b.tree.l2_leaf_reg = j.at("l2_leaf_reg").get<double>();
  b.tree.min_split_gain = j.at("min_split_gain").get<double>();
  b.feature_fraction = j.at("feature_fraction").get<double>();
  b.bagging_fraction = j.at("bagging_fraction").get<double>();
  b.n_bins = j.at("n_bins").get<int>();
  b.seed = j.at("seed").get<std::uint64_t>();
  return b;
}

Json ClickModelToJson(const ClickModel& model) {
  if (const auto* pbm = std::get_if<PbmConfig>(&model)) {
    return {{"type", "pbm"},
            {"rho", pbm->rho},
            {"theta", pbm->theta},
            {"epsilon", pbm->epsilon},
            {"y_max", pbm->y_max}};
  }
  const auto& c = std::get<CascadeConfig>(model);
  return {{"type", "cascade"},
          {"positions", c.positions},
          {"beta", c.beta},
          {"satisfaction_scale", c.satisfaction_scale},
          {"epsilon", c.epsilon},
          {"y_max", c.y_max}};
}

ClickModel ClickModelFromJson(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "pbm") {
    PbmConfig c;
    c.rho = j.at("rho").get<std::vector<double>>();
    c.theta = j.at("theta").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.y_max = j.at("y_max").get<int>();
    return c;
  }
  if (type == "cascade") {
    CascadeConfig c;
    c.positions = j.at("positions").get<std::size_t>();
    c.beta = j.at("beta").get<double>();
    c.satisfaction_scale = j.at("satisfaction_scale").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.y_max = j.at("y_max").get<int>();
    return c;
  }
  throw std::invalid_argument("unknown click model " + type);
}

std::uint64_t SeedFor(const ExperimentSpec& spec, std::size_t seed_index) {
  return spec.base_seed + seed_index;
}

std::vector<double> ValuesOf(const ComparisonResult& result, Condition c,
                             const std::string& metric) {
  std::vector<double> values;
  for (const auto& run : result.runs) {
    if (run.condition == c && run.error.empty()) values.push_back(MetricValue(run.report, metric));
  }
  return values;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string ConditionName(Condition c) {
  switch (c) {
    case Condition::kLabeledUpper:
      return "labeled_upper";
    case Condition::kClickLower:
      return "click_lower";
    case Condition::kPairwiseDebias:
      return "pairwise_debias";
  }
  return "unknown";
}

Condition ParseCondition(const std::string& name) {
  if (name == "labeled_upper") return Condition::kLabeledUpper;
  if (name == "click_lower") return Condition::kClickLower;
  if (name == "pairwise_debias") return Condition::kPairwiseDebias;
  throw std::invalid_argument("unknown condition " + name);
}

void ExperimentSpec::Validate() const {
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  if (conditions.empty()) throw std::invalid_argument("conditions must be nonempty");
  if (n_sessions < 1) throw std::invalid_argument("n_sessions must be >= 1");
  if (!(session_fraction > 0.0 && session_fraction <= 1.0)) {
    throw std::invalid_argument("session_fraction must lie in (0, 1]");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  train.Validate();
  std::visit([](const auto& cfg) { cfg.Validate(); }, click_model);
}

Json SpecToJson(const ExperimentSpec& spec) {
  Json conditions = Json::array();
  for (auto c : spec.conditions) conditions.push_back(ConditionName(c));
  return {{"artifact_version", kVersion},
          {"name", spec.name},
          {"dataset_path", spec.dataset_path ? Json(*spec.dataset_path) : Json(nullptr)},
          {"synthetic",
           {{"n_queries", spec.synthetic.n_queries},
            {"docs_per_query", spec.synthetic.docs_per_query},
            {"n_features", spec.synthetic.n_features},
            {"label_noise", spec.synthetic.label_noise},
            {"seed", spec.synthetic.seed}}},
          {"click_model", ClickModelToJson(spec.click_model)},
          {"conditions", conditions},
          {"train",
           {{"boosting", BoostingToJson(spec.train.boosting)},
            {"p", spec.train.p},
            {"sigma", spec.train.sigma},
            {"bias_update_interval", spec.train.bias_update_interval},
            {"floor", spec.train.floor},
            {"debias", spec.train.debias}}},
          {"n_sessions", spec.n_sessions},
          {"session_fraction", spec.session_fraction},
          {"initial_ranker_fraction", spec.initial_ranker_fraction},
          {"train_fraction", spec.train_fraction},
          {"n_seeds", spec.n_seeds},
          {"base_seed", spec.base_seed}};
}

ExperimentSpec SpecFromJson(const Json& j) {
  ExperimentSpec spec;
  spec.name = j.at("name").get<std::string>();
  if (!j.at("dataset_path").is_null()) spec.dataset_path = j.at("dataset_path").get<std::string>();
  const auto& s = j.at("synthetic");
  spec.synthetic.n_queries = s.at("n_queries").get<std::size_t>();
  spec.synthetic.docs_per_query = s.at("docs_per_query").get<std::size_t>();
  spec.synthetic.n_features = s.at("n_features").get<std::size_t>();
  spec.synthetic.label_noise = s.at("label_noise").get<double>();
  spec.synthetic.seed = s.at("seed").get<std::uint64_t>();
  spec.click_model = ClickModelFromJson(j.at("click_model"));
  spec.conditions.clear();
  for (const auto& c : j.at("conditions")) spec.conditions.push_back(ParseCondition(c.get<std::string>()));
  const auto& t = j.at("train");
  spec.train.boosting = BoostingFromJson(t.at("boosting"));
  spec.train.p = t.at("p").get<double>();
  spec.train.sigma = t.at("sigma").get<double>();
  spec.train.bias_update_interval = t.at("bias_update_interval").get<std::size_t>();
  spec.train.floor = t.at("floor").get<double>();
  spec.train.debias = t.at("debias").get<bool>();
  spec.n_sessions = j.at("n_sessions").get<std::size_t>();
  spec.session_fraction = j.at("session_fraction").get<double>();
  spec.initial_ranker_fraction = j.at("initial_ranker_fraction").get<double>();
  spec.train_fraction = j.at("train_fraction").get<double>();
  spec.n_seeds = j.at("n_seeds").get<std::size_t>();
  spec.base_seed = j.at("base_seed").get<std::uint64_t>();
  return spec;
}

std::string ConfigHash(const ExperimentSpec& spec) {
  const std::string text = SpecToJson(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& MetricNames() {
  static const std::vector<std::string> names = {"ndcg@1", "ndcg@3", "ndcg@5", "ndcg@10", "map"};
  return names;
}

double MetricValue(const EvalReport& report, const std::string& metric) {
  if (metric == "map") return report.map_score;
  if (metric.rfind("ndcg@", 0) == 0) {
    const auto k = static_cast<std::size_t>(std::stoul(metric.substr(5)));
    const auto it = report.ndcg_at.find(k);
    if (it != report.ndcg_at.end()) return it->second;
  }
  throw std::invalid_argument("unknown metric " + metric);
}

std::optional<double> ComparisonResult::Mean(Condition c, const std::string& metric) const {
  const auto values = ValuesOf(*this, c, metric);
  if (values.empty()) return std::nullopt;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::optional<double> ComparisonResult::StdDev(Condition c, const std::string& metric) const {
  const auto values = ValuesOf(*this, c, metric);
  if (values.empty()) return std::nullopt;
  const double mean = *Mean(c, metric);
  double s = 0.0;
  for (double v : values) s += (v - mean) * (v - mean);
  return values.size() > 1 ? std::sqrt(s / static_cast<double>(values.size() - 1)) : 0.0;
}

Dataset LoadExperimentData(const ExperimentSpec& spec) {
  if (spec.dataset_path) return ParseSvmlight(*spec.dataset_path);
  return GenerateSynthetic(spec.synthetic);
}

ComparisonResult RunComparison(const ExperimentSpec& spec, const Dataset& data) {
  spec.Validate();
  ComparisonResult result;
  result.config_hash = ConfigHash(spec);
  const std::size_t truncation = Truncation(spec.click_model);
  for (std::size_t s = 0; s < spec.n_seeds; ++s) {
    const std::uint64_t seed = SeedFor(spec, s);
    auto [train, test] = SplitByQuery(data, spec.train_fraction, seed);

    // Original (initial-ranker) lists of the held-out queries, for the
    // re-ranking diagnostic.
    std::vector<std::vector<std::uint32_t>> test_lists;
    ClickDataset clicks;
    std::string setup_error;
    try {
      const Ensemble initial = TrainInitialRanker(train, spec.initial_ranker_fraction, seed);
      std::vector<std::vector<std::uint32_t>> rankings(train.queries.size());
      for (std::size_t q = 0; q < train.queries.size(); ++q) {
        rankings[q] = RankQuery(train.queries[q], initial, train.num_features, truncation);
      }
      const auto n_sessions = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::llround(spec.session_fraction * static_cast<double>(spec.n_sessions))));
      clicks = GenerateClickDataset(train, rankings, spec.click_model, n_sessions, seed);
      for (const auto& q : test.queries) {
        test_lists.push_back(RankQuery(q, initial, test.num_features, truncation));
      }
    } catch (const std::exception& e) {
      setup_error = e.what();
    }

    std::vector<std::vector<double>> truth(test_lists.size());
    for (std::size_t q = 0; q < test_lists.size(); ++q) {
      for (auto d : test_lists[q]) truth[q].push_back(test.queries[q].docs[d].label);
    }
    result.truth_rerank_positions.push_back(AverageRerankPositions(truth));

    for (Condition condition : spec.conditions) {
      ConditionRun run;
      run.condition = condition;
      run.seed_index = s;
      run.seed = seed;
      try {
        if (!setup_error.empty()) throw std::runtime_error(setup_error);
        Ensemble model;
        TrainConfig cfg = spec.train;
        cfg.boosting.seed = seed;
        if (condition == Condition::kLabeledUpper) {
          model = TrainLambdaMart(train, cfg.boosting, cfg.sigma);
        } else {
          cfg.debias = condition == Condition::kPairwiseDebias;
          auto trained = TrainUnbiasedLambdaMart(train, clicks, cfg);
          model = std::move(trained.ensemble);
          run.history = std::move(trained.history);
        }
        run.report = EvaluateModel(test, model);
        std::vector<std::vector<double>> rescored(test_lists.size());
        for (std::size_t q = 0; q < test_lists.size(); ++q) {
          for (auto d : test_lists[q]) {
            rescored[q].push_back(
                model.Predict(DenseFeatures(test.queries[q].docs[d].features, test.num_features)));
          }
        }
        run.rerank_positions = AverageRerankPositions(rescored);
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      result.runs.push_back(std::move(run));
    }
  }
  return result;
}

namespace {

// "score,error" cells of one run; failed runs keep their row with the message.
void WriteScoreCells(const ConditionRun& run, const std::string& metric, std::ostream& out) {
  if (run.error.empty()) {
    out << MetricValue(run.report, metric) << ",\n";
    return;
  }
  std::string msg = run.error;
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  out << "," << msg << '\n';
}

}  // namespace

void WriteComparisonTable(const ComparisonResult& result, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "config_hash,condition,metric,seed,score,error\n";
  std::vector<Condition> seen;
  for (const auto& run : result.runs) {
    if (std::find(seen.begin(), seen.end(), run.condition) == seen.end()) seen.push_back(run.condition);
    for (const auto& metric : MetricNames()) {
      out << result.config_hash << ',' << ConditionName(run.condition) << ',' << metric << ','
          << run.seed_index << ',';
      WriteScoreCells(run, metric, out);
    }
  }
  for (Condition c : seen) {
    for (const auto& metric : MetricNames()) {
      const auto mean = result.Mean(c, metric);
      const auto sd = result.StdDev(c, metric);
      out << result.config_hash << ',' << ConditionName(c) << ',' << metric << ",mean,";
      if (mean) out << *mean;
      out << ",\n";
      out << result.config_hash << ',' << ConditionName(c) << ',' << metric << ",std,";
      if (sd) out << *sd;
      out << ",\n";
    }
  }
  out.precision(old_precision);
}

void WriteRerankCsv(const ExperimentSpec& spec, const ComparisonResult& result,
                    std::ostream& out) {
  (void)spec;
  const auto old_precision = out.precision(17);
  out << "config_hash,condition,seed,position,avg_position\n";
  for (std::size_t s = 0; s < result.truth_rerank_positions.size(); ++s) {
    const auto& curve = result.truth_rerank_positions[s];
    for (std::size_t i = 0; i < curve.size(); ++i) {
      out << result.config_hash << ",ground_truth," << s << ',' << (i + 1) << ',' << curve[i]
          << '\n';
    }
  }
  for (const auto& run : result.runs) {
    for (std::size_t i = 0; i < run.rerank_positions.size(); ++i) {
      out << result.config_hash << ',' << ConditionName(run.condition) << ',' << run.seed_index
          << ',' << (i + 1) << ',' << run.rerank_positions[i] << '\n';
    }
  }
  out.precision(old_precision);
}

void WriteComparisonBiasCurves(const ComparisonResult& result, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "config_hash,seed,round,position,t_plus,t_minus\n";
  for (const auto& run : result.runs) {
    if (run.condition != Condition::kPairwiseDebias) continue;
    for (const auto& r : run.history) {
      for (std::size_t i = 0; i < r.bias.positions(); ++i) {
        out << result.config_hash << ',' << run.seed_index << ',' << r.round << ',' << (i + 1)
            << ',' << r.bias.t_plus[i] << ',' << r.bias.t_minus[i] << '\n';
      }
    }
  }
  out.precision(old_precision);
}

std::string AxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kP:
      return "p";
    case SweepAxis::kTheta:
      return "theta";
    case SweepAxis::kBeta:
      return "beta";
    case SweepAxis::kDataFraction:
      return "data_fraction";
  }
  return "unknown";
}

SweepAxis ParseAxis(const std::string& name) {
  if (name == "p") return SweepAxis::kP;
  if (name == "theta") return SweepAxis::kTheta;
  if (name == "beta") return SweepAxis::kBeta;
  if (name == "data_fraction") return SweepAxis::kDataFraction;
  throw std::invalid_argument("unknown sweep axis " + name);
}

ExperimentSpec ApplyAxis(const ExperimentSpec& spec, SweepAxis axis, double value) {
  ExperimentSpec out = spec;
  switch (axis) {
    case SweepAxis::kP:
      out.train.p = value;
      break;
    case SweepAxis::kTheta: {
      auto* pbm = std::get_if<PbmConfig>(&out.click_model);
      if (!pbm) throw std::invalid_argument("theta sweep needs the pbm click model");
      pbm->theta = value;
      break;
    }
    case SweepAxis::kBeta: {
      auto* cascade = std::get_if<CascadeConfig>(&out.click_model);
      if (!cascade) throw std::invalid_argument("beta sweep needs the cascade click model");
      cascade->beta = value;
      break;
    }
    case SweepAxis::kDataFraction:
      out.session_fraction = value;
      break;
  }
  out.Validate();
  return out;
}

std::vector<SweepPoint> RunSweep(const ExperimentSpec& spec, const Dataset& data,
                                 SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<ExperimentSpec> specs;
  for (double v : values) specs.push_back(ApplyAxis(spec, axis, v));
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < values.size(); ++i) {
    points.push_back({values[i], RunComparison(specs[i], data)});
  }
  return points;
}

void WriteSweepCsv(SweepAxis axis, const std::vector<SweepPoint>& points, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "config_hash,axis,value,condition,metric,seed,score,error\n";
  for (const auto& point : points) {
    for (const auto& run : point.result.runs) {
      for (const auto& metric : MetricNames()) {
        out << point.result.config_hash << ',' << AxisName(axis) << ',' << point.value << ','
            << ConditionName(run.condition) << ',' << metric << ',' << run.seed_index << ',';
        WriteScoreCells(run, metric, out);
      }
    }
  }
  out.precision(old_precision);
}

void WriteComparisonOutputs(const std::string& dir, const ExperimentSpec& spec,
                            const ComparisonResult& result) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  std::ostringstream table;
  WriteComparisonTable(result, table);
  WriteText(root / "table.csv", table.str());
  std::ostringstream curves;
  WriteComparisonBiasCurves(result, curves);
  WriteText(root / "bias_curves.csv", curves.str());
  std::ostringstream rerank;
  WriteRerankCsv(spec, result, rerank);
  WriteText(root / "rerank_positions.csv", rerank.str());
  WriteText(root / "config.json", SpecToJson(spec).dump(2) + "\n");
}

}  // namespace ultr
