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

#include "dpcxr/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpcxr/errors.hpp"

namespace dpcxr::run {
namespace {

std::string header(std::string_view hash) {
  return "# manifest_hash=" + std::string(hash) + "\n";
}

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

nlohmann::json estimate_json(const eval::Estimate& e) {
  return {{"point", e.point}, {"mean", e.mean}, {"spread", e.spread}};
}

}  // namespace

std::string format_number(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  // Avoid "-0.000000".
  if (std::string(buf).find_first_not_of("-0.") == std::string::npos)
    std::snprintf(buf, sizeof buf, "%.*f", decimals, 0.0);
  return buf;
}

std::string epsilon_label(double epsilon) {
  return std::isinf(epsilon) ? "inf" : format_number(epsilon, 2);
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << content;
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const eval::MetricReport& r) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : r.labels)
    labels.push_back({{"label", l.code},
                      {"threshold", format_number(l.threshold, 17)},
                      {"degenerate_threshold", l.degenerate_threshold},
                      {"positives", l.positives},
                      {"auroc", estimate_json(l.auroc)},
                      {"accuracy", estimate_json(l.accuracy)},
                      {"sensitivity", estimate_json(l.sensitivity)},
                      {"specificity", estimate_json(l.specificity)}});
  const auto& a = r.average;
  return {{"samples", r.samples},
          {"redraws", r.redraws},
          {"rejected_resamples", r.rejected_resamples},
          {"labels", labels},
          {"average",
           {{"auroc", {{"mean", a.auroc}, {"std", a.auroc_std}}},
            {"accuracy", {{"mean", a.accuracy}, {"std", a.accuracy_std}}},
            {"sensitivity",
             {{"mean", a.sensitivity}, {"std", a.sensitivity_std}}},
            {"specificity",
             {{"mean", a.specificity}, {"std", a.specificity_std}}}}}};
}

nlohmann::json to_json(const eval::FairnessReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"group", g.name},
                      {"samples", g.samples},
                      {"mean_auroc", g.mean_auroc},
                      {"std_auroc", g.std_auroc},
                      {"labels_defined", g.labels_defined},
                      {"ptd", g.ptd}});
  return {{"grouping", eval::to_string(r.grouping)},
          {"groups", groups},
          {"missing", r.missing},
          {"minority", r.minority}};
}

std::string metric_table_csv(const eval::MetricReport& r,
                             std::string_view manifest_hash) {
  std::string s = header(manifest_hash);
  s += "label,auroc,auroc_spread,accuracy,accuracy_spread,specificity,"
       "specificity_spread,sensitivity,sensitivity_spread,threshold,"
       "positives\n";
  for (const auto& l : r.labels) {
    s += l.code;
    for (const auto* e : {&l.auroc, &l.accuracy, &l.specificity,
                          &l.sensitivity})
      s += "," + format_number(e->mean) + "," + format_number(e->spread);
    s += "," + format_number(l.threshold) + "," +
         std::to_string(l.positives) + "\n";
  }
  const auto& a = r.average;
  s += "Average," + format_number(a.auroc) + "," + format_number(a.auroc_std) +
       "," + format_number(a.accuracy) + "," + format_number(a.accuracy_std) +
       "," + format_number(a.specificity) + "," +
       format_number(a.specificity_std) + "," + format_number(a.sensitivity) +
       "," + format_number(a.sensitivity_std) + ",,\n";
  return s;
}

std::string summary_csv(std::span<const SummaryColumn> columns,
                       std::string_view manifest_hash) {
  std::string s = header(manifest_hash) + "label";
  for (const auto& c : columns)
    s += ",auroc@" + c.epsilon + ",spread@" + c.epsilon;
  s += "\n";
  if (columns.empty()) return s;
  const std::size_t L = columns.front().report->labels.size();
  for (std::size_t l = 0; l < L; ++l) {
    s += columns.front().report->labels[l].code;
    for (const auto& c : columns)
      s += "," + format_number(c.report->labels[l].auroc.mean) + "," +
           format_number(c.report->labels[l].auroc.spread);
    s += "\n";
  }
  s += "Average";
  for (const auto& c : columns)
    s += "," + format_number(c.report->average.auroc) + "," +
         format_number(c.report->average.auroc_std);
  return s + "\n";
}

std::string subgroups_csv(std::span<const SubgroupBlock> blocks,
                       std::string_view manifest_hash) {
  std::string s = header(manifest_hash) + "epsilon,row";
  for (auto name : data::kAgeBinNames) s += "," + csv_cell(name);
  s += ",Female,Male\n";
  for (const auto& b : blocks) {
    auto cells = [&](auto value, bool sex_ptd) {
      std::string row;
      for (auto name : data::kAgeBinNames) {
        const auto* g = b.age->find(name);
        row += "," + (g ? format_number(value(*g), 2) : std::string("missing"));
      }
      for (const char* name : {"Female", "Male"}) {
        const auto* g = b.sex->find(name);
        if (!g) row += ",missing";
        else if (sex_ptd && b.sex->minority != name) row += ",";
        else row += "," + format_number(value(*g), 2);
      }
      return row;
    };
    s += b.epsilon + ",Mean" +
         cells([](const eval::SubgroupStats& g) { return g.mean_auroc; },
               false) + "\n";
    s += b.epsilon + ",StD" +
         cells([](const eval::SubgroupStats& g) { return g.std_auroc; },
               false) + "\n";
    s += b.epsilon + ",PtD" +
         cells([](const eval::SubgroupStats& g) { return g.ptd; }, true) +
         "\n";
  }
  return s;
}

std::string trend_csv(std::span<const TrendRow> rows,
                      std::string_view manifest_hash) {
  std::string s = header(manifest_hash) +
                  "target_epsilon,achieved_epsilon,noise_multiplier,auroc,"
                  "accuracy,sensitivity,specificity,status\n";
  for (const auto& r : rows)
    s += epsilon_label(r.target_epsilon) + "," +
         format_number(r.achieved_epsilon) + "," +
         format_number(r.noise_multiplier) + "," +
         format_number(r.average.auroc) + "," +
         format_number(r.average.accuracy) + "," +
         format_number(r.average.sensitivity) + "," +
         format_number(r.average.specificity) + "," + csv_cell(r.status) + "\n";
  return s;
}

std::string sex_trend_csv(std::span<const SexTrendRow> rows,
                          std::string_view manifest_hash) {
  std::string s = header(manifest_hash) +
                  "epsilon,sex,auroc,accuracy,sensitivity,specificity\n";
  for (const auto& r : rows)
    s += r.epsilon + "," + r.sex + "," + format_number(r.metrics.auroc) + "," +
         format_number(r.metrics.accuracy) + "," +
         format_number(r.metrics.sensitivity) + "," +
         format_number(r.metrics.specificity) + "\n";
  return s;
}

std::string sample_size_csv(std::span<const std::string> labels,
                            std::span<const double> sample_sizes,
                            std::span<const double> aurocs,
                            std::string_view manifest_hash) {
  std::string s = header(manifest_hash) + "label,sample_size,auroc\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    s += labels[i] + "," + format_number(sample_sizes[i], 0) + "," +
         format_number(aurocs[i]) + "\n";
  std::string r = "undefined";
  try {
    r = format_number(eval::pearson_r(sample_sizes, aurocs), 4);
  } catch (const UndefinedMetric&) {
  }
  return s + "# pearson_r=" + r + "\n";
}

void write_predictions(const std::filesystem::path& path,
                       const eval::PredictionSet& p,
                       std::string_view manifest_hash) {
  p.validate();
  std::string s = header(manifest_hash) + "age_bin,sex,comorbidity";
  for (auto c : data::kFindingColumns) s += ",p_" + std::string(c);
  for (auto c : data::kFindingColumns) s += ",y_" + std::string(c);
  s += "\n";
  const std::size_t L = p.num_labels;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& k = p.subgroups[i];
    s += std::to_string(k.age_bin) + "," + std::string(data::to_string(k.sex)) +
         "," + std::to_string(k.comorbidity_count);
    for (std::size_t l = 0; l < L; ++l) s += "," + exact(p.scores[i * L + l]);
    for (std::size_t l = 0; l < L; ++l)
      s += p.targets[i * L + l] ? ",1" : ",0";
    s += "\n";
  }
  write_text(path, s);
}

LoadedPredictions read_predictions(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  LoadedPredictions out;
  auto& p = out.predictions;
  const std::size_t L = data::kNumFindings;
  std::string line;
  std::vector<std::string> columns;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> FormatError {
    return FormatError(path.string() + ":" + std::to_string(lineno) + ": " +
                       msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      constexpr std::string_view key = "# manifest_hash=";
      if (line.starts_with(key)) out.manifest_hash = line.substr(key.size());
      continue;
    }
    if (columns.empty()) {
      columns = split(line);
      if (columns.size() < 3 || columns[0] != "age_bin" ||
          columns[1] != "sex" || columns[2] != "comorbidity")
        throw fail(
            "subgroup metadata columns age_bin,sex,comorbidity are required");
      if (columns.size() != 3 + 2 * L)
        throw fail("expected " + std::to_string(3 + 2 * L) + " columns");
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != columns.size())
      throw fail("expected " + std::to_string(columns.size()) + " cells");
    try {
      data::SubgroupKey k;
      k.age_bin = std::stoul(cells[0]);
      if (k.age_bin >= data::kNumAgeBins) throw fail("age_bin out of range");
      k.sex = data::parse_sex(cells[1]);
      k.comorbidity_count = std::stoi(cells[2]);
      p.subgroups.push_back(k);
      for (std::size_t l = 0; l < L; ++l)
        p.scores.push_back(std::stod(cells[3 + l]));
      for (std::size_t l = 0; l < L; ++l) {
        if (cells[3 + L + l] != "0" && cells[3 + L + l] != "1")
          throw fail("targets must be 0 or 1");
        p.targets.push_back(cells[3 + L + l] == "1" ? 1 : 0);
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  if (columns.empty()) throw FormatError(path.string() + ": no header row");
  p.validate();
  return out;
}

}  // namespace dpcxr::run
