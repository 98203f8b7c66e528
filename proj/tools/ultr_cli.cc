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

// ultr: simulate, train, evaluate, compare, sweep, inspect-model.
//
// Every subcommand resolves one JSON run config -- built-in defaults, then
// --config FILE, then flags -- and writes it as config.json next to its
// outputs. `ultr <cmd> --config out/config.json` replays a run.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ultr/click_sim.h"
#include "ultr/data.h"
#include "ultr/experiment.h"
#include "ultr/gbdt.h"
#include "ultr/lambda_rank.h"
#include "ultr/metrics.h"
#include "ultr/pairwise_debias.h"
#include "ultr/parallel.h"
#include "ultr/version.h"

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Thrown for bad flag combinations and invalid configs; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json DefaultClickModel(const std::string& type) {
  ultr::ExperimentSpec spec;
  if (type == "cascade") {
    spec.click_model = ultr::CascadeConfig{};
  } else if (type != "pbm") {
    throw UsageError("unknown click model '" + type + "' (pbm or cascade)");
  }
  return ultr::SpecToJson(spec)["click_model"];
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Like merge_patch, but null is a value (no dataset path), not a deletion.
void MergeInto(Json& dst, const Json& src) {
  if (!dst.is_object() || !src.is_object()) {
    dst = src;
    return;
  }
  for (const auto& [key, value] : src.items()) MergeInto(dst[key], value);
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// One subcommand: its flags, each a deferred edit of the run config that
// only fires when the flag was given on the command line.
class Command {
 public:
  Command(CLI::App& parent, std::string name, std::string help, Json io)
      : name_(std::move(name)), io_(std::move(io)) {
    app_ = parent.add_subcommand(name_, std::move(help));
    app_->add_option("--config", config_path_, "JSON run config (a previous config.json works)");
  }

  CLI::App* app() { return app_; }

  template <typename T>
  CLI::Option* Option(const std::string& flag, const std::string& pointer, const std::string& help,
                      const std::string& only_model = "") {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(flag, *value, help);
    const std::string long_name = opt->get_name();
    edits_.push_back([=](Json& cfg) {
      if (opt->count() == 0) return;
      if (!only_model.empty() && cfg["spec"]["click_model"]["type"] != only_model) {
        throw UsageError(long_name + " applies to the " + only_model + " click model only");
      }
      cfg[Json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::Option* Flag(const std::string& flag, const std::string& pointer, const Json& value,
                    const std::string& help) {
    CLI::Option* opt = app_->add_flag(flag, help);
    edits_.push_back([=](Json& cfg) {
      if (opt->count() > 0) cfg[Json::json_pointer(pointer)] = value;
    });
    return opt;
  }

  // Copies `from` to `to` when `flag` was given.
  void Mirror(const std::string& flag, const std::string& from, const std::string& to) {
    CLI::Option* opt = app_->get_option(flag);
    edits_.push_back([=](Json& cfg) {
      if (opt->count() > 0) cfg[Json::json_pointer(to)] = cfg[Json::json_pointer(from)];
    });
  }

  // Switching model type resets its parameters to that type's defaults;
  // must be registered before the model-specific flags.
  void ClickModelOption() {
    auto type = std::make_shared<std::string>();
    CLI::Option* opt = app_->add_option("--click-model", *type, "pbm | cascade");
    edits_.push_back([=](Json& cfg) {
      if (opt->count() == 0) return;
      if (cfg["spec"]["click_model"]["type"] != *type) cfg["spec"]["click_model"] = DefaultClickModel(*type);
    });
  }

  Json Resolve() const {
    Json cfg = {{"artifact_version", ultr::kVersion},
                {"command", name_},
                {"spec", ultr::SpecToJson(ultr::ExperimentSpec{})},
                {"io", io_}};
    if (!config_path_.empty()) {
      Json file = ReadJsonFile(config_path_);
      // A bare experiment spec (compare's config.json) is accepted as well.
      Json spec = file.contains("spec") ? file["spec"] : file;
      if (spec.contains("click_model") && spec["click_model"].contains("type")) {
        Json model = DefaultClickModel(spec["click_model"]["type"]);
        MergeInto(model, spec["click_model"]);
        spec["click_model"] = model;
      }
      MergeInto(cfg["spec"], spec);
      if (file.contains("io") && file.value("command", name_) == name_) MergeInto(cfg["io"], file["io"]);
    }
    for (const auto& edit : edits_) edit(cfg);
    cfg["spec"]["artifact_version"] = ultr::kVersion;
    return cfg;
  }

 private:
  std::string name_;
  Json io_;
  CLI::App* app_ = nullptr;
  std::string config_path_;
  std::vector<std::function<void(Json&)>> edits_;
};

ultr::ExperimentSpec SpecOf(const Json& cfg) {
  ultr::ExperimentSpec spec;
  try {
    spec = ultr::SpecFromJson(cfg.at("spec"));
    spec.Validate();
    spec.train.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const Json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return spec;
}

std::string RequiredPath(const Json& cfg, const std::string& key, const std::string& flag) {
  const Json& v = cfg["io"][key];
  if (v.is_null() || v.get<std::string>().empty()) throw UsageError(flag + " is required");
  return v.get<std::string>();
}

fs::path OutDir(const Json& cfg) {
  const fs::path dir = cfg["io"]["out"].get<std::string>();
  fs::create_directories(dir);
  return dir;
}

void WriteConfig(const fs::path& dir, const Json& cfg) {
  WriteFile(dir / "config.json", cfg.dump(2) + "\n");
}

// Flags shared by the commands that build data and clicks from a spec.
void AddDataFlags(Command& c) {
  c.Option<std::string>("--data", "/spec/dataset_path", "SVMLight dataset (default: synthetic)");
  c.Flag("--synthetic", "/spec/dataset_path", nullptr, "use the synthetic generator");
  c.Option<std::size_t>("--queries", "/spec/synthetic/n_queries", "synthetic queries");
  c.Option<std::size_t>("--docs", "/spec/synthetic/docs_per_query", "synthetic documents per query");
  c.Option<std::size_t>("--features", "/spec/synthetic/n_features", "synthetic feature count");
  c.Option<double>("--label-noise", "/spec/synthetic/label_noise", "synthetic label-noise rate");
  c.Option<double>("--train-fraction", "/spec/train_fraction", "share of queries used for clicks/training");
}

void AddClickFlags(Command& c) {
  c.ClickModelOption();
  c.Option<double>("--theta", "/spec/click_model/theta", "PBM bias severity", "pbm");
  c.Option<std::vector<double>>("--rho", "/spec/click_model/rho", "PBM examination curve", "pbm")
      ->delimiter(',');
  c.Option<double>("--beta", "/spec/click_model/beta", "cascade continuation after a click", "cascade");
  c.Option<double>("--satisfaction", "/spec/click_model/satisfaction_scale",
                   "cascade satisfaction scale", "cascade");
  c.Option<double>("--epsilon", "/spec/click_model/epsilon", "click noise for irrelevant docs");
  c.Option<std::size_t>("--sessions", "/spec/n_sessions", "simulated sessions");
  c.Option<double>("--session-fraction", "/spec/session_fraction", "share of --sessions generated");
  c.Option<double>("--initial-fraction", "/spec/initial_ranker_fraction",
                   "labeled share for the logging ranker");
}

void AddTrainFlags(Command& c) {
  c.Option<std::size_t>("--trees", "/spec/train/boosting/num_trees", "boosting rounds");
  c.Option<double>("--lr", "/spec/train/boosting/learning_rate", "learning rate");
  c.Option<int>("--leaves", "/spec/train/boosting/max_leaves", "leaves per tree");
  c.Option<std::size_t>("--min-docs", "/spec/train/boosting/min_docs_per_leaf", "min docs per leaf");
  c.Option<double>("--p", "/spec/train/p", "regularization norm");
  c.Option<std::size_t>("--interval", "/spec/train/bias_update_interval", "rounds between bias updates");
  c.Flag("--no-debias", "/spec/train/debias", false, "freeze all ratios at 1");
}

// -- simulate ---------------------------------------------------------------

int Simulate(const Json& cfg) {
  const auto spec = SpecOf(cfg);
  const std::uint64_t seed = spec.base_seed;
  const ultr::Dataset data = ultr::LoadExperimentData(spec);
  ultr::Dataset train = data, test;
  if (spec.train_fraction < 1.0) std::tie(train, test) = ultr::SplitByQuery(data, spec.train_fraction, seed);

  const ultr::Ensemble initial = ultr::TrainInitialRanker(train, spec.initial_ranker_fraction, seed);
  const auto n_sessions = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.session_fraction * static_cast<double>(spec.n_sessions))));
  const ultr::ClickDataset clicks =
      ultr::GenerateClickDataset(train, initial, spec.click_model, n_sessions, seed);

  const fs::path dir = OutDir(cfg);
  ultr::WriteSvmlight(train, (dir / "train.svm").string());
  if (!test.queries.empty()) ultr::WriteSvmlight(test, (dir / "test.svm").string());
  ultr::SaveEnsemble(initial, (dir / "initial_ranker.json").string());
  ultr::WriteClickLog(clicks, (dir / "clicks.jsonl").string());

  const auto ctr = ultr::PositionCtr(clicks);
  std::ostringstream csv;
  csv.precision(17);
  csv << "position,ctr\n";
  for (std::size_t i = 0; i < ctr.size(); ++i) csv << i + 1 << ',' << ctr[i] << '\n';
  WriteFile(dir / "ctr.csv", csv.str());
  WriteConfig(dir, cfg);

  std::printf("%zu sessions over %zu queries -> %s\n", clicks.sessions.size(), train.queries.size(),
              (dir / "clicks.jsonl").c_str());
  std::printf("position  ctr\n");
  for (std::size_t i = 0; i < ctr.size(); ++i) std::printf("%8zu  %.4f\n", i + 1, ctr[i]);
  return 0;
}

// -- train ------------------------------------------------------------------

int Train(const Json& cfg) {
  const auto spec = SpecOf(cfg);
  const ultr::Dataset data = ultr::ParseSvmlight(RequiredPath(cfg, "data", "--data"));
  ultr::TrainConfig tc = spec.train;
  tc.boosting.seed = spec.base_seed;

  const bool labels = cfg["io"]["labels"].get<bool>();
  const fs::path dir = OutDir(cfg);
  if (labels) {
    const ultr::Ensemble model = ultr::TrainLambdaMart(data, tc.boosting, tc.sigma);
    ultr::SaveEnsemble(model, (dir / "model.json").string());
    WriteConfig(dir, cfg);
    std::printf("labeled LambdaMART, %zu trees -> %s\n", model.trees().size(), (dir / "model.json").c_str());
    return 0;
  }

  const ultr::ClickDataset clicks = ultr::ReadClickLog(RequiredPath(cfg, "clicks", "--clicks"), data);
  const auto result = ultr::TrainUnbiasedLambdaMart(data, clicks, tc);
  ultr::SaveEnsemble(result.ensemble, (dir / "model.json").string());
  std::ostringstream history, curves;
  ultr::WriteHistoryCsv(result.history, history);
  ultr::WriteBiasCurvesCsv(result.history, curves);
  WriteFile(dir / "history.csv", history.str());
  WriteFile(dir / "bias_curves.csv", curves.str());
  WriteConfig(dir, cfg);

  std::printf("%s, %zu trees -> %s\n", tc.debias ? "pairwise debias" : "raw clicks",
              result.ensemble.trees().size(), (dir / "model.json").c_str());
  std::printf("position  t_plus   t_minus\n");
  for (std::size_t i = 0; i < result.bias.t_plus.size(); ++i) {
    std::printf("%8zu  %.4f   %.4f\n", i + 1, result.bias.t_plus[i], result.bias.t_minus[i]);
  }
  return 0;
}

// -- evaluate ---------------------------------------------------------------

int Evaluate(const Json& cfg) {
  const ultr::Ensemble model = ultr::LoadEnsemble(RequiredPath(cfg, "model", "--model"));
  const ultr::Dataset data = ultr::ParseSvmlight(RequiredPath(cfg, "data", "--data"));
  const int threshold = cfg["io"]["threshold"].get<int>();
  const ultr::EvalReport report = ultr::EvaluateModel(data, model, threshold);
  const fs::path dir = OutDir(cfg);
  const std::string json = ultr::ReportToJson(report);
  WriteFile(dir / "report.json", json + "\n");
  std::ostringstream csv;
  ultr::WriteReportCsv(report, csv);
  WriteFile(dir / "report.csv", csv.str());
  WriteConfig(dir, cfg);
  std::printf("%s\n", json.c_str());
  return 0;
}

// -- compare / sweep --------------------------------------------------------

void PrintSummary(const ultr::ExperimentSpec& spec, const ultr::ComparisonResult& r) {
  std::printf("%-16s", "condition");
  for (const auto& m : ultr::MetricNames()) std::printf(" %17s", m.c_str());
  std::printf("\n");
  for (auto c : spec.conditions) {
    std::printf("%-16s", ultr::ConditionName(c).c_str());
    for (const auto& m : ultr::MetricNames()) {
      const auto mean = r.Mean(c, m);
      if (mean) {
        std::printf("   %.4f +- %.4f", *mean, *r.StdDev(c, m));
      } else {
        std::printf(" %17s", "failed");
      }
    }
    std::printf("\n");
  }
}

// Failed conditions are kept in the table with their error; surface them.
bool ReportFailures(const ultr::ComparisonResult& r) {
  bool any = false;
  for (const auto& run : r.runs) {
    if (run.error.empty()) continue;
    any = true;
    std::fprintf(stderr, "ultr: %s seed %zu failed: %s\n", ultr::ConditionName(run.condition).c_str(),
                 run.seed_index, run.error.c_str());
  }
  return any;
}

fs::path ExperimentDir(Json& cfg, const ultr::ExperimentSpec& spec) {
  if (cfg["io"]["out"].is_null()) cfg["io"]["out"] = (fs::path("results") / spec.name).string();
  return OutDir(cfg);
}

int Compare(Json cfg) {
  const auto spec = SpecOf(cfg);
  const auto result = ultr::RunComparison(spec, ultr::LoadExperimentData(spec));
  const fs::path dir = ExperimentDir(cfg, spec);
  ultr::WriteComparisonOutputs(dir.string(), spec, result);
  WriteConfig(dir, cfg);
  PrintSummary(spec, result);
  ReportFailures(result);
  std::printf("config %s -> %s\n", result.config_hash.c_str(), dir.c_str());
  return 0;
}

int Sweep(Json cfg) {
  const auto spec = SpecOf(cfg);
  if (cfg["io"]["axis"].is_null()) throw UsageError("--axis is required");
  const auto values = cfg["io"]["values"].get<std::vector<double>>();
  ultr::SweepAxis axis;
  try {
    axis = ultr::ParseAxis(cfg["io"]["axis"].get<std::string>());
    if (values.empty()) throw std::invalid_argument("--values is required");
    for (double v : values) ultr::ApplyAxis(spec, axis, v).Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto points = ultr::RunSweep(spec, ultr::LoadExperimentData(spec), axis, values);
  const fs::path dir = ExperimentDir(cfg, spec);
  std::ostringstream csv;
  ultr::WriteSweepCsv(axis, points, csv);
  WriteFile(dir / "sweep.csv", csv.str());
  WriteConfig(dir, cfg);
  for (const auto& point : points) {
    std::printf("%s = %g\n", ultr::AxisName(axis).c_str(), point.value);
    PrintSummary(ultr::ApplyAxis(spec, axis, point.value), point.result);
    ReportFailures(point.result);
  }
  std::printf("-> %s\n", (dir / "sweep.csv").c_str());
  return 0;
}

// -- inspect-model ----------------------------------------------------------

int InspectModel(const Json& cfg) {
  const ultr::Ensemble model = ultr::LoadEnsemble(RequiredPath(cfg, "model", "--model"));
  std::size_t leaves = 0, max_leaves = 0, max_depth = 0;
  std::map<int, std::pair<std::size_t, double>> usage;  // feature -> (splits, gain)
  for (const auto& tree : model.trees()) {
    leaves += tree.NumLeaves();
    max_leaves = std::max(max_leaves, tree.NumLeaves());
    max_depth = std::max(max_depth, tree.Depth());
    for (const auto& node : tree.nodes()) {
      if (node.left < 0) continue;
      auto& u = usage[node.feature];
      ++u.first;
      u.second += node.gain;
    }
  }
  std::vector<std::pair<int, std::pair<std::size_t, double>>> ranked(usage.begin(), usage.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.second > b.second.second; });

  Json summary = {{"trees", model.trees().size()},
                  {"learning_rate", model.learning_rate()},
                  {"base_score", model.base_score()},
                  {"num_features", model.num_features()},
                  {"mean_leaves", model.trees().empty() ? 0.0
                                                        : static_cast<double>(leaves) /
                                                              static_cast<double>(model.trees().size())},
                  {"max_leaves", max_leaves},
                  {"max_depth", max_depth},
                  {"features_used", usage.size()}};
  Json top = Json::array();
  const std::size_t limit = cfg["io"]["top"].get<std::size_t>();
  for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) {
    top.push_back({{"feature", ranked[i].first + 1},  // SVMLight ids are 1-based
                   {"splits", ranked[i].second.first},
                   {"total_gain", ranked[i].second.second}});
  }
  summary["top_features"] = top;
  std::printf("%s\n", summary.dump(2).c_str());
  if (!cfg["io"]["out"].is_null()) {
    const fs::path dir = OutDir(cfg);
    WriteFile(dir / "summary.json", summary.dump(2) + "\n");
    WriteConfig(dir, cfg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ultr: unbiased learning-to-rank from click logs"};
  app.set_version_flag("--version", std::string(ultr::kVersion));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: all cores)")
      ->envname("ULTR_NUM_THREADS")
      ->check(CLI::NonNegativeNumber);

  Command simulate(app, "simulate", "generate a click log from a dataset",
                   {{"out", "results/simulate"}});
  AddDataFlags(simulate);
  AddClickFlags(simulate);

  Command train(app, "train", "train LambdaMART on a click log (or labels)",
                {{"data", nullptr}, {"clicks", nullptr}, {"labels", false}, {"out", "results/train"}});
  train.Option<std::string>("--data", "/io/data", "SVMLight training data");
  train.Option<std::string>("--clicks", "/io/clicks", "click log over --data");
  train.Flag("--labels", "/io/labels", true, "train on the labels instead (upper bound)");
  AddTrainFlags(train);

  Command evaluate(app, "evaluate", "NDCG@k and MAP of a model",
                   {{"data", nullptr}, {"model", nullptr}, {"threshold", 1}, {"out", "results/evaluate"}});
  evaluate.Option<std::string>("--data", "/io/data", "labeled SVMLight data");
  evaluate.Option<std::string>("--model", "/io/model", "model file");
  evaluate.Option<int>("--threshold", "/io/threshold", "minimum relevant grade for MAP");

  Command compare(app, "compare", "labeled / click / debiased comparison over seeds", {{"out", nullptr}});
  Command sweep(app, "sweep", "comparison along one parameter axis",
                {{"out", nullptr}, {"axis", nullptr}, {"values", Json::array()}});
  for (Command* c : {&compare, &sweep}) {
    c->Option<std::string>("--name", "/spec/name", "experiment name (output dir results/<name>)");
    AddDataFlags(*c);
    AddClickFlags(*c);
    AddTrainFlags(*c);
    c->Option<std::size_t>("--seeds", "/spec/n_seeds", "number of seeds");
    c->Option<std::vector<std::string>>("--conditions", "/spec/conditions",
                                        "labeled_upper,click_lower,pairwise_debias")
        ->delimiter(',');
  }
  sweep.Option<std::string>("--axis", "/io/axis", "p | theta | beta | data_fraction");
  sweep.Option<std::vector<double>>("--values", "/io/values", "comma-separated axis values")->delimiter(',');

  Command inspect(app, "inspect-model", "summarize a model file",
                  {{"model", nullptr}, {"top", 10}, {"out", nullptr}});
  inspect.Option<std::string>("--model", "/io/model", "model file");
  inspect.Option<std::size_t>("--top", "/io/top", "features to list");

  // --seed is the master seed: the synthetic data and every stream after it.
  for (Command* c : {&simulate, &train, &compare, &sweep}) {
    c->Option<std::uint64_t>("--seed", "/spec/base_seed", "master seed");
    c->Mirror("--seed", "/spec/base_seed", "/spec/synthetic/seed");
  }
  for (Command* c : {&simulate, &train, &evaluate, &compare, &sweep, &inspect}) {
    c->Option<std::string>("--out", "/io/out", "output directory");
  }

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) ultr::SetNumThreads(threads);

  try {
    if (simulate.app()->parsed()) return Simulate(simulate.Resolve());
    if (train.app()->parsed()) return Train(train.Resolve());
    if (evaluate.app()->parsed()) return Evaluate(evaluate.Resolve());
    if (compare.app()->parsed()) return Compare(compare.Resolve());
    if (sweep.app()->parsed()) return Sweep(sweep.Resolve());
    if (inspect.app()->parsed()) return InspectModel(inspect.Resolve());
  } catch (const UsageError& e) {
    std::fprintf(stderr, "ultr: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ultr: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
