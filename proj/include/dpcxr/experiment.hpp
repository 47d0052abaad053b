// Copyright 2026 The dpcxr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPCXR_EXPERIMENT_HPP_
#define DPCXR_EXPERIMENT_HPP_

// End-to-end runs. A run directory holds:
//   manifest.json       resolved config, seed lineage, privacy, data summary
//   timing.json         wall time (kept apart so everything else is
//                       byte-reproducible)
//   checkpoint.{bin,json}
//   predictions.csv     test-split scores, targets and subgroup keys
//   metrics.csv         per-label metric grid with Average row
//   subgroups.csv          Mean/StD/PtD by age bin and sex
//   sex_metrics.csv     label-averaged metrics per sex
//   sample_size_auroc.csv
//   report.json

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpcxr/dataset.hpp"
#include "dpcxr/experiment_config.hpp"
#include "dpcxr/fairness.hpp"
#include "dpcxr/model.hpp"

namespace dpcxr::run {

std::string_view code_version();

struct Splits {
  data::PreparedDataset train;
  data::PreparedDataset test;
  std::string fingerprint;  // hash of the cohort spec or metadata file
};

// Generates (or reads) the studies and splits them patient-wise with
// cohort.split_fractions / cohort.seed.
Splits load_splits(const ExperimentConfig& config);

struct TrainingOutcome {
  explicit TrainingOutcome(nn::Model m) : model(std::move(m)) {}

  nn::Model model;
  std::vector<double> pos_weights;
  std::int64_t steps = 0;
  std::size_t steps_per_epoch = 0;
  double learning_rate = 0.0;
  // Private runs only.
  double sampling_rate = 0.0;
  double expected_batch_size = 0.0;
  double noise_multiplier = 0.0;
  double achieved_epsilon = 0.0;
  double epsilon_order = 0.0;
};

// Throws BudgetExceeded (with the offending step) when a private run's spent
// epsilon passes the configured target.
TrainingOutcome train_model(const ExperimentConfig& config,
                            const data::PreparedDataset& train);

eval::PredictionSet predict(const nn::Model& model,
                            const data::PreparedDataset& data);

struct RunResult {
  std::filesystem::path output_dir;
  nlohmann::json manifest;
  std::string manifest_hash;
  eval::PredictionSet predictions;
  eval::MetricReport metrics;
  eval::FairnessReport age;
  eval::FairnessReport sex;
  double achieved_epsilon = 0.0;  // +inf for non-private runs
  double noise_multiplier = 0.0;
  double wall_seconds = 0.0;
};

RunResult run_experiment(const ExperimentConfig& config);

// Evaluates an existing checkpoint on the test split of the configured data.
RunResult evaluate_checkpoint(const ExperimentConfig& config,
                              const std::filesystem::path& checkpoint_stem);

struct SweepEntry {
  double target_epsilon = 0.0;  // +inf for the non-private reference
  std::optional<RunResult> result;
  std::string error;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // ascending epsilon, reference last
  std::string manifest_hash;
};

// One private run per target (ascending, positive) with sigma calibrated to
// that target, optionally followed by a non-private reference run. Failed runs
// are recorded and the sweep continues. Writes sweep_manifest.json,
// trend.csv, summary.csv, subgroups.csv and sex_trend.csv under
// config.output_dir.
SweepResult sweep_epsilon(const ExperimentConfig& config,
                          std::vector<double> targets,
                          bool include_non_private);

struct AuditResult {
  std::string manifest_hash;
  std::optional<eval::FairnessReport> age;
  std::optional<eval::FairnessReport> sex;
};

// Reads predictions.csv (a file, or a run directory containing one) and
// writes audit_subgroups.csv, audit_sex_metrics.csv, audit_sample_size_auroc.csv
// and audit.json to `output_dir`.
AuditResult audit(const std::filesystem::path& source,
                  const std::filesystem::path& output_dir, bool by_age,
                  bool by_sex);

}  // namespace dpcxr::run

#endif  // DPCXR_EXPERIMENT_HPP_
