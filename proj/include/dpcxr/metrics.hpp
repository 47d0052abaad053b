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

#ifndef DPCXR_METRICS_HPP_
#define DPCXR_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace dpcxr::eval {

// Mann-Whitney statistic P(s+ > s-) + 0.5 P(s+ = s-). Throws UndefinedMetric
// unless both classes are present.
double auroc(std::span<const double> scores,
             std::span<const std::uint8_t> labels);

struct YoudenResult {
  double threshold = 0.0;  // may be -inf or +inf
  double j = 0.0;          // TPR - FPR at the threshold
  bool degenerate = false; // best J <= 0, a sentinel was returned
};

// Searches midpoints between adjacent distinct scores plus -inf / +inf
// (score >= threshold is positive) and returns the smallest threshold with
// maximal TPR - FPR.
YoudenResult youden_threshold(std::span<const double> scores,
                              std::span<const std::uint8_t> labels);

struct ConfusionMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// Throws UndefinedMetric when either class is absent.
ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels,
                                   double threshold);

// Product-moment correlation. Throws UndefinedMetric for fewer than two
// points or zero variance in either input.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Pearson correlation of mid-ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// P(correct | minority) - P(correct | majority). Throws UndefinedMetric if
// either group is empty.
double statistical_parity_difference(std::span<const std::uint8_t> correct,
                                     std::span<const std::uint8_t> minority);

// Mid-ranks (1-based) with ties sharing the average rank.
std::vector<double> midranks(std::span<const double> values);

}  // namespace dpcxr::eval

#endif  // DPCXR_METRICS_HPP_
