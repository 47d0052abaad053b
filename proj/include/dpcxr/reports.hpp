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

#ifndef DPCXR_REPORTS_HPP_
#define DPCXR_REPORTS_HPP_

// CSV / JSON emission. Every CSV starts with a `# manifest_hash=<hex>` line
// tying it to the run manifest that produced it; readers skip `#` lines.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpcxr/fairness.hpp"

namespace dpcxr::run {

std::string format_number(double v, int decimals = 6);
// "inf" for non-private runs, otherwise the value to two decimals.
std::string epsilon_label(double epsilon);

void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json to_json(const eval::MetricReport& report);
nlohmann::json to_json(const eval::FairnessReport& report);

// Per-label grid: AUROC, accuracy, specificity, sensitivity with spreads,
// then the Average row (mean and std over labels).
std::string metric_table_csv(const eval::MetricReport& report,
                             std::string_view manifest_hash);

// Labels x epsilon columns of bootstrapped AUROC.
struct SummaryColumn {
  std::string epsilon;
  const eval::MetricReport* report = nullptr;
};
std::string summary_csv(std::span<const SummaryColumn> columns,
                       std::string_view manifest_hash);

// Epsilon blocks x {Mean, StD, PtD} x age bins and sexes. The sex PtD is the
// minority sex vs the other and is written under the minority column only.
struct SubgroupBlock {
  std::string epsilon;
  const eval::FairnessReport* age = nullptr;
  const eval::FairnessReport* sex = nullptr;
};
std::string subgroups_csv(std::span<const SubgroupBlock> blocks,
                       std::string_view manifest_hash);

struct TrendRow {
  double target_epsilon = 0.0;  // +inf for the non-private reference
  double achieved_epsilon = 0.0;
  double noise_multiplier = 0.0;
  eval::AverageRow average;
  std::string status = "ok";
};
std::string trend_csv(std::span<const TrendRow> rows,
                      std::string_view manifest_hash);

struct SexTrendRow {
  std::string epsilon;
  std::string sex;
  eval::GroupAverages metrics;
};
std::string sex_trend_csv(std::span<const SexTrendRow> rows,
                          std::string_view manifest_hash);

// Per-label sample size vs AUROC with the Pearson correlation as trailer.
std::string sample_size_csv(std::span<const std::string> labels,
                            std::span<const double> sample_sizes,
                            std::span<const double> aurocs,
                            std::string_view manifest_hash);

void write_predictions(const std::filesystem::path& path,
                       const eval::PredictionSet& predictions,
                       std::string_view manifest_hash);

struct LoadedPredictions {
  eval::PredictionSet predictions;
  std::string manifest_hash;
};
// Throws FormatError when subgroup columns are absent or malformed.
LoadedPredictions read_predictions(const std::filesystem::path& path);

}  // namespace dpcxr::run

#endif  // DPCXR_REPORTS_HPP_
