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

// Experiment driver: the labeled / raw-click / debiased comparison and
// one-dimensional sweeps over it.

#ifndef ULTR_EXPERIMENT_H_
#define ULTR_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ultr/click_sim.h"
#include "ultr/data.h"
#include "ultr/metrics.h"
#include "ultr/pairwise_debias.h"

namespace ultr {

enum class Condition { kLabeledUpper, kClickLower, kPairwiseDebias };

std::string ConditionName(Condition c);
Condition ParseCondition(const std::string& name);

struct ExperimentSpec {
  std::string name = "default";
  std::optional<std::string> dataset_path;  // SVMLight; synthetic when empty
  SyntheticConfig synthetic{.label_noise = 0.1};
  ClickModel click_model = PbmConfig{};
  std::vector<Condition> conditions = {Condition::kLabeledUpper, Condition::kClickLower,
                                       Condition::kPairwiseDebias};
  TrainConfig train;
  std::size_t n_sessions = 20000;
  double session_fraction = 1.0;  // share of n_sessions actually generated
  double initial_ranker_fraction = 0.01;
  double train_fraction = 0.8;
  std::size_t n_seeds = 5;
  std::uint64_t base_seed = 0;

  void Validate() const;
};

nlohmann::json SpecToJson(const ExperimentSpec& spec);
ExperimentSpec SpecFromJson(const nlohmann::json& j);
// FNV-1a of the canonical JSON, as 16 hex digits.
std::string ConfigHash(const ExperimentSpec& spec);

struct ConditionRun {
  Condition condition;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  EvalReport report;
  std::string error;  // nonempty when the condition failed
  std::vector<double> rerank_positions;
  std::vector<RoundRecord> history;  // click conditions only
};

struct ComparisonResult {
  std::vector<ConditionRun> runs;  // seed-major, then spec.conditions order
  // Per seed, the ground-truth re-ranking curve (labels as scores).
  std::vector<std::vector<double>> truth_rerank_positions;
  std::string config_hash;

  // Mean of `metric` ("ndcg@1", "ndcg@3", "ndcg@5", "ndcg@10", "map") across
  // successful seeds of condition c; nullopt when none succeeded.
  std::optional<double> Mean(Condition c, const std::string& metric) const;
  std::optional<double> StdDev(Condition c, const std::string& metric) const;
};

double MetricValue(const EvalReport& report, const std::string& metric);
const std::vector<std::string>& MetricNames();

// Loads the dataset named by the spec (or generates the synthetic one).
Dataset LoadExperimentData(const ExperimentSpec& spec);

// Per seed: 80/20 query split, initial ranker on the training queries, click
// simulation, training of each condition, evaluation on the held-out queries.
ComparisonResult RunComparison(const ExperimentSpec& spec, const Dataset& data);

// Columns: config_hash, condition, metric, seed, score; followed by mean and
// std rows (seed = "mean" / "std").
void WriteComparisonTable(const ComparisonResult& result, std::ostream& out);
// Columns: condition, seed, position, avg_position (condition "ground_truth"
// for the label-sorted curve).
void WriteRerankCsv(const ExperimentSpec& spec, const ComparisonResult& result,
                    std::ostream& out);
// Bias curves of every pairwise_debias run, prefixed with the seed index.
void WriteComparisonBiasCurves(const ComparisonResult& result, std::ostream& out);

enum class SweepAxis { kP, kTheta, kBeta, kDataFraction };
std::string AxisName(SweepAxis axis);
SweepAxis ParseAxis(const std::string& name);

// Copy of `spec` with the axis parameter set to `value`. Throws
// std::invalid_argument when the axis does not apply to the click model.
ExperimentSpec ApplyAxis(const ExperimentSpec& spec, SweepAxis axis, double value);

struct SweepPoint {
  double value;
  ComparisonResult result;
};

std::vector<SweepPoint> RunSweep(const ExperimentSpec& spec, const Dataset& data,
                                 SweepAxis axis, const std::vector<double>& values);

// Long form: config_hash, axis, value, condition, metric, seed, score, error
// (failed runs keep their rows with an empty score).
void WriteSweepCsv(SweepAxis axis, const std::vector<SweepPoint>& points, std::ostream& out);

// Writes table.csv, bias_curves.csv, rerank_positions.csv and config.json
// under `dir` (created if missing).
void WriteComparisonOutputs(const std::string& dir, const ExperimentSpec& spec,
                            const ComparisonResult& result);

}  // namespace ultr

#endif  // ULTR_EXPERIMENT_H_
