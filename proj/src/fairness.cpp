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

#include "dpcxr/fairness.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "dpcxr/bootstrap.hpp"
#include "dpcxr/errors.hpp"
#include "dpcxr/rng.hpp"

namespace dpcxr::eval {
namespace {

constexpr std::size_t kMetricsPerLabel = 4;

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / n)};
}

std::string group_name(Grouping g, std::size_t index) {
  if (g == Grouping::kAge) return std::string(data::kAgeBinNames[index]);
  return index == 0 ? "Female" : "Male";
}

std::size_t group_count(Grouping g) {
  return g == Grouping::kAge ? data::kNumAgeBins : 2;
}

std::size_t group_of(Grouping g, const SubgroupKey& key) {
  return g == Grouping::kAge ? key.age_bin
                             : (key.sex == data::Sex::kFemale ? 0 : 1);
}

}  // namespace

void PredictionSet::validate() const {
  const std::size_t n = subgroups.size();
  if (num_labels == 0) throw ConfigError("predictions: num_labels is 0");
  if (scores.size() != n * num_labels || targets.size() != n * num_labels)
    throw ConfigError("predictions: scores/targets/subgroups size mismatch");
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!std::isfinite(scores[i]))
      throw ConfigError("predictions: non-finite score at row " +
                        std::to_string(i / num_labels));
}

std::vector<double> PredictionSet::label_scores(
    std::size_t label, std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[k] = scores[rows[k] * num_labels + label];
  return out;
}

std::vector<std::uint8_t> PredictionSet::label_targets(
    std::size_t label, std::span<const std::size_t> rows) const {
  std::vector<std::uint8_t> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[k] = targets[rows[k] * num_labels + label];
  return out;
}

std::vector<std::size_t> PredictionSet::all_rows() const {
  std::vector<std::size_t> rows(size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::vector<double> MetricReport::thresholds() const {
  std::vector<double> t;
  for (const auto& l : labels) t.push_back(l.threshold);
  return t;
}

MetricReport evaluate_predictions(const PredictionSet& predictions,
                                  std::size_t redraws, std::uint64_t seed) {
  predictions.validate();
  const auto rows = predictions.all_rows();
  std::vector<double> thresholds(predictions.num_labels);
  for (std::size_t l = 0; l < predictions.num_labels; ++l)
    thresholds[l] = youden_threshold(predictions.label_scores(l, rows),
                                     predictions.label_targets(l, rows))
                        .threshold;
  return evaluate_predictions(predictions, thresholds, redraws, seed);
}

MetricReport evaluate_predictions(const PredictionSet& predictions,
                                  std::span<const double> thresholds,
                                  std::size_t redraws, std::uint64_t seed) {
  predictions.validate();
  const std::size_t L = predictions.num_labels;
  if (thresholds.size() != L)
    throw ConfigError("evaluate: expected " + std::to_string(L) +
                      " thresholds");
  const auto all = predictions.all_rows();

  auto statistic = [&](std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(L * kMetricsPerLabel);
    for (std::size_t l = 0; l < L; ++l) {
      const auto s = predictions.label_scores(l, rows);
      const auto y = predictions.label_targets(l, rows);
      const double a = auroc(s, y);
      const auto c = confusion_metrics(s, y, thresholds[l]);
      out.insert(out.end(), {a, c.accuracy, c.sensitivity, c.specificity});
    }
    return out;
  };

  MetricReport report;
  report.samples = predictions.size();
  report.redraws = redraws;
  const auto point = statistic(all);
  const auto boot = bootstrap(all.size(), statistic, redraws, seed);
  report.rejected_resamples = boot.front().rejected;

  std::vector<double> col[kMetricsPerLabel];
  for (std::size_t l = 0; l < L; ++l) {
    LabelMetrics m;
    m.code = L == data::kNumFindings ? std::string(data::kFindingCodes[l])
                                     : "L" + std::to_string(l);
    m.threshold = thresholds[l];
    m.degenerate_threshold = !std::isfinite(thresholds[l]);
    for (auto y : predictions.label_targets(l, all)) m.positives += y;
    Estimate* fields[kMetricsPerLabel] = {&m.auroc, &m.accuracy,
                                          &m.sensitivity, &m.specificity};
    for (std::size_t k = 0; k < kMetricsPerLabel; ++k) {
      const std::size_t i = l * kMetricsPerLabel + k;
      *fields[k] = {point[i], boot[i].mean, boot[i].spread};
      col[k].push_back(boot[i].mean);
    }
    report.labels.push_back(std::move(m));
  }
  const auto a = mean_std(col[0]), b = mean_std(col[1]),
             c = mean_std(col[2]), d = mean_std(col[3]);
  report.average = {a.mean, a.std, b.mean, b.std, c.mean, c.std, d.mean, d.std};
  return report;
}

GroupAverages group_averages(const PredictionSet& predictions,
                             std::span<const std::size_t> rows,
                             std::span<const double> thresholds) {
  GroupAverages g;
  for (std::size_t l = 0; l < predictions.num_labels; ++l) {
    const auto s = predictions.label_scores(l, rows);
    const auto y = predictions.label_targets(l, rows);
    try {
      const double a = auroc(s, y);
      const auto c = confusion_metrics(s, y, thresholds[l]);
      g.auroc += a;
      g.accuracy += c.accuracy;
      g.sensitivity += c.sensitivity;
      g.specificity += c.specificity;
      ++g.labels_defined;
    } catch (const UndefinedMetric&) {
    }
  }
  if (g.labels_defined == 0)
    throw UndefinedMetric("no label has both classes in the subgroup");
  const double n = static_cast<double>(g.labels_defined);
  g.auroc /= n;
  g.accuracy /= n;
  g.sensitivity /= n;
  g.specificity /= n;
  return g;
}

std::string_view to_string(Grouping g) {
  return g == Grouping::kAge ? "age" : "sex";
}

Grouping parse_grouping(std::string_view s) {
  if (s == "age") return Grouping::kAge;
  if (s == "sex") return Grouping::kSex;
  throw ConfigError("unknown grouping '" + std::string(s) +
                    "' (expected age|sex)");
}

const SubgroupStats* FairnessReport::find(std::string_view name) const {
  for (const auto& g : groups)
    if (g.name == name) return &g;
  return nullptr;
}

std::vector<std::uint8_t> correct_cells(const PredictionSet& predictions,
                                        std::span<const double> thresholds) {
  const std::size_t L = predictions.num_labels;
  std::vector<std::uint8_t> out(predictions.scores.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool predicted = predictions.scores[i] >= thresholds[i % L];
    out[i] = predicted == (predictions.targets[i] != 0) ? 1 : 0;
  }
  return out;
}

FairnessReport subgroup_report(const PredictionSet& predictions,
                               Grouping grouping,
                               std::span<const double> thresholds) {
  predictions.validate();
  const std::size_t L = predictions.num_labels;
  if (thresholds.size() != L)
    throw ConfigError("subgroup_report: expected " + std::to_string(L) +
                      " thresholds");
  const std::size_t G = group_count(grouping);
  std::vector<std::vector<std::size_t>> members(G);
  for (std::size_t i = 0; i < predictions.size(); ++i)
    members[group_of(grouping, predictions.subgroups[i])].push_back(i);

  FairnessReport report;
  report.grouping = grouping;
  std::size_t nonempty = 0;
  for (const auto& m : members) nonempty += m.empty() ? 0 : 1;
  if (nonempty < 2)
    throw UndefinedMetric(
        "parity difference vs complement undefined: all samples fall into "
        "one " + std::string(to_string(grouping)) + " group");

  const auto correct = correct_cells(predictions, thresholds);
  std::size_t smallest = predictions.size() + 1;
  for (std::size_t g = 0; g < G; ++g) {
    const std::string name = group_name(grouping, g);
    if (members[g].empty()) {
      report.missing.push_back(name);
      continue;
    }
    SubgroupStats s;
    s.name = name;
    s.samples = members[g].size();
    std::vector<double> aurocs;
    for (std::size_t l = 0; l < L; ++l) {
      try {
        aurocs.push_back(auroc(predictions.label_scores(l, members[g]),
                               predictions.label_targets(l, members[g])));
      } catch (const UndefinedMetric&) {
      }
    }
    s.labels_defined = aurocs.size();
    if (aurocs.empty()) {
      s.mean_auroc = s.std_auroc = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto ms = mean_std(aurocs);
      s.mean_auroc = ms.mean;
      s.std_auroc = ms.std;
    }
    std::vector<std::uint8_t> in_group(correct.size(), 0);
    for (std::size_t i : members[g])
      std::fill_n(in_group.begin() + i * L, L, std::uint8_t{1});
    s.ptd = statistical_parity_difference(correct, in_group);
    if (s.samples < smallest) {
      smallest = s.samples;
      report.minority = name;
    }
    report.groups.push_back(std::move(s));
  }
  return report;
}

PredictionSet simulate_predictions(
    std::span<const SubgroupKey> subgroups,
    std::span<const std::uint8_t> targets,
    const std::function<double(const SubgroupKey&)>& accuracy,
    std::uint64_t seed) {
  const std::size_t L = data::kNumFindings;
  if (targets.size() != subgroups.size() * L)
    throw ConfigError("simulate_predictions: targets must be n x 8");
  PredictionSet p;
  p.subgroups.assign(subgroups.begin(), subgroups.end());
  p.targets.assign(targets.begin(), targets.end());
  p.scores.resize(targets.size());
  for (std::size_t i = 0; i < subgroups.size(); ++i) {
    const double acc = accuracy(subgroups[i]);
    if (!(acc >= 0.0 && acc <= 1.0))
      throw ConfigError("simulate_predictions: accuracy outside [0, 1]");
    Rng rng(seed, Stream::kPredictionSim, i);
    for (std::size_t l = 0; l < L; ++l) {
      const bool correct = rng.bernoulli(acc);
      const bool positive = targets[i * L + l] != 0;
      double s;
      if (positive)
        s = correct ? rng.uniform(0.6, 0.9) : rng.uniform(0.0, 0.1);
      else
        s = correct ? rng.uniform(0.1, 0.4) : rng.uniform(0.9, 1.0);
      p.scores[i * L + l] = s;
    }
  }
  return p;
}

}  // namespace dpcxr::eval
