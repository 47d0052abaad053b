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

#include "dpcxr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "dpcxr/errors.hpp"

namespace dpcxr::eval {
namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ConfigError(std::string(what) + ": length mismatch (" +
                      std::to_string(a) + " vs " + std::to_string(b) + ")");
}

std::pair<std::size_t, std::size_t> class_counts(
    std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (auto y : labels) pos += y ? 1 : 0;
  return {pos, labels.size() - pos};
}

void require_both_classes(std::size_t pos, std::size_t neg, const char* what) {
  if (pos == 0 || neg == 0)
    throw UndefinedMetric(std::string(what) + " undefined: " +
                          (pos == 0 ? "no positive" : "no negative") +
                          " samples");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double auroc(std::span<const double> scores,
             std::span<const std::uint8_t> labels) {
  check_sizes(scores.size(), labels.size(), "auroc");
  const auto [pos, neg] = class_counts(labels);
  require_both_classes(pos, neg, "AUROC");
  const auto idx = order_by_score(scores);
  // Pair counts are integers, so the sums below are exact.
  double concordant = 0.0, ties = 0.0, neg_below = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double p = 0.0, n = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? p : n) += 1.0;
      ++j;
    }
    concordant += p * neg_below;
    ties += p * n;
    neg_below += n;
    i = j;
  }
  return (concordant + 0.5 * ties) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

YoudenResult youden_threshold(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  check_sizes(scores.size(), labels.size(), "youden_threshold");
  const auto [pos, neg] = class_counts(labels);
  require_both_classes(pos, neg, "Youden threshold");
  const auto idx = order_by_score(scores);
  const double inf = std::numeric_limits<double>::infinity();
  // Threshold -inf: everything positive, TPR = FPR = 1. J is compared as
  // the exact integer tp * neg - fp * pos so ties resolve to the smallest
  // threshold regardless of rounding.
  YoudenResult best{-inf, 0.0, true};
  std::int64_t best_num = 0;
  auto tp = static_cast<std::int64_t>(pos);
  auto fp = static_cast<std::int64_t>(neg);
  const auto p = static_cast<std::int64_t>(pos);
  const auto n = static_cast<std::int64_t>(neg);
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      --(labels[idx[j]] ? tp : fp);
      ++j;
    }
    // Candidate just above this tie group.
    const double thr =
        j < idx.size() ? 0.5 * (scores[idx[i]] + scores[idx[j]]) : inf;
    const std::int64_t num = tp * n - fp * p;
    if (num > best_num) {
      best_num = num;
      best = {thr,
              static_cast<double>(tp) / static_cast<double>(p) -
                  static_cast<double>(fp) / static_cast<double>(n),
              false};
    }
    i = j;
  }
  return best;
}

ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels,
                                   double threshold) {
  check_sizes(scores.size(), labels.size(), "confusion_metrics");
  const auto [pos, neg] = class_counts(labels);
  require_both_classes(pos, neg, "sensitivity/specificity");
  std::size_t tp = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] && predicted) ++tp;
    if (!labels[i] && !predicted) ++tn;
  }
  return {static_cast<double>(tp + tn) / static_cast<double>(scores.size()),
          static_cast<double>(tp) / static_cast<double>(pos),
          static_cast<double>(tn) / static_cast<double>(neg)};
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size(), "pearson_r");
  if (x.size() < 2) throw UndefinedMetric("Pearson r needs at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedMetric("Pearson r undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> midranks(std::span<const double> values) {
  const auto idx = order_by_score(values);
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size(), "spearman_rho");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson_r(rx, ry);
}

double statistical_parity_difference(std::span<const std::uint8_t> correct,
                                     std::span<const std::uint8_t> minority) {
  check_sizes(correct.size(), minority.size(), "statistical_parity_difference");
  double hits[2] = {0.0, 0.0}, counts[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < correct.size(); ++i) {
    const int g = minority[i] ? 1 : 0;
    counts[g] += 1.0;
    hits[g] += correct[i] ? 1.0 : 0.0;
  }
  if (counts[0] == 0.0 || counts[1] == 0.0)
    throw UndefinedMetric(std::string("parity difference undefined: ") +
                          (counts[1] == 0.0 ? "minority" : "majority") +
                          " group is empty");
  return hits[1] / counts[1] - hits[0] / counts[0];
}

}  // namespace dpcxr::eval
