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

#ifndef DPCXR_FAIRNESS_HPP_
#define DPCXR_FAIRNESS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpcxr/labels.hpp"
#include "dpcxr/metrics.hpp"

namespace dpcxr::eval {

using data::SubgroupKey;

// Model outputs on an evaluation split, row-major n x num_labels.
struct PredictionSet {
  std::size_t num_labels = data::kNumFindings;
  std::vector<double> scores;
  std::vector<std::uint8_t> targets;
  std::vector<SubgroupKey> subgroups;

  std::size_t size() const { return subgroups.size(); }
  // Throws ConfigError on inconsistent sizes or non-finite scores.
  void validate() const;
  std::vector<double> label_scores(std::size_t label,
                                   std::span<const std::size_t> rows) const;
  std::vector<std::uint8_t> label_targets(
      std::size_t label, std::span<const std::size_t> rows) const;
  std::vector<std::size_t> all_rows() const;
};

struct Estimate {
  double point = 0.0;   // on the full evaluation set
  double mean = 0.0;    // bootstrap mean
  double spread = 0.0;  // bootstrap standard deviation
};

struct LabelMetrics {
  std::string code;
  double threshold = 0.0;
  bool degenerate_threshold = false;
  std::size_t positives = 0;
  Estimate auroc, accuracy, sensitivity, specificity;
};

// Unweighted mean and population standard deviation over labels of the
// bootstrap means.
struct AverageRow {
  double auroc = 0.0, auroc_std = 0.0;
  double accuracy = 0.0, accuracy_std = 0.0;
  double sensitivity = 0.0, sensitivity_std = 0.0;
  double specificity = 0.0, specificity_std = 0.0;
};

struct MetricReport {
  std::size_t samples = 0;
  std::size_t redraws = 0;
  std::size_t rejected_resamples = 0;
  std::vector<LabelMetrics> labels;
  AverageRow average;

  std::vector<double> thresholds() const;
};

// Youden thresholds are fit per label on the full set and held fixed while
// rows are bootstrapped jointly across labels.
MetricReport evaluate_predictions(const PredictionSet& predictions,
                                  std::size_t redraws, std::uint64_t seed);

// Same, with thresholds supplied by the caller (e.g. fit on another split).
MetricReport evaluate_predictions(const PredictionSet& predictions,
                                  std::span<const double> thresholds,
                                  std::size_t redraws, std::uint64_t seed);

// Label-averaged point metrics on a subset of rows at fixed thresholds;
// labels undefined on the subset are skipped.
struct GroupAverages {
  double auroc = 0.0, accuracy = 0.0, sensitivity = 0.0, specificity = 0.0;
  std::size_t labels_defined = 0;
};
GroupAverages group_averages(const PredictionSet& predictions,
                             std::span<const std::size_t> rows,
                             std::span<const double> thresholds);

enum class Grouping { kAge, kSex };
std::string_view to_string(Grouping g);
Grouping parse_grouping(std::string_view s);

struct SubgroupStats {
  std::string name;
  std::size_t samples = 0;
  // Over labels with both classes in the subgroup; NaN when there are none.
  double mean_auroc = 0.0;
  double std_auroc = 0.0;  // population std over the same labels
  std::size_t labels_defined = 0;
  double ptd = 0.0;         // vs all other patients
};

struct FairnessReport {
  Grouping grouping = Grouping::kAge;
  std::vector<SubgroupStats> groups;   // non-empty groups, canonical order
  std::vector<std::string> missing;    // empty groups
  std::string minority;                // smallest group (the sex PtD owner)

  const SubgroupStats* find(std::string_view name) const;
};

// Correctness of each (row, label) cell at the given thresholds.
std::vector<std::uint8_t> correct_cells(const PredictionSet& predictions,
                                        std::span<const double> thresholds);

// Per-subgroup label-mean AUROC and its spread over labels, plus the parity
// difference of correct (row, label) cells in the group vs its complement.
// Throws UndefinedMetric when all rows fall into a single group.
FairnessReport subgroup_report(const PredictionSet& predictions,
                               Grouping grouping,
                               std::span<const double> thresholds);

// Predictions whose (row, label) cells are correct with probability
// accuracy(key). Correct positives score U(0.6, 0.9) and correct negatives
// U(0.1, 0.4). Wrong positives score U(0, 0.1) and wrong negatives U(0.9, 1),
// outside the correct bands. When TPR - FPR is positive in the gap, every
// other candidate threshold scores lower, so the Youden threshold falls in
// (0.4, 0.6) and correctness at it matches the planted draws.
PredictionSet simulate_predictions(
    std::span<const SubgroupKey> subgroups,
    std::span<const std::uint8_t> targets,
    const std::function<double(const SubgroupKey&)>& accuracy,
    std::uint64_t seed);

}  // namespace dpcxr::eval

#endif  // DPCXR_FAIRNESS_HPP_
