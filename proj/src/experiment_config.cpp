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

#include "dpcxr/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpcxr/errors.hpp"

namespace dpcxr::run {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                    std::string(value) + "' as " + std::string(expected));
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v, "a number");
  return d;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    bad_value(key, v, "a non-negative integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::size_t> to_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  std::stringstream ss{std::string(v)};
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<std::size_t>(to_uint(key, trim(item))));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

void set_model(nn::ModelConfig& m, std::string_view k, std::string_view v) {
  if (k == "preset") {
    if (v == "desk") m = nn::ModelConfig::desk_scale();
    else if (v == "full") m = nn::ModelConfig::full_scale();
    else bad_value(k, v, "desk|full");
  } else if (k == "in_channels") m.in_channels = to_uint(k, v);
  else if (k == "size") m.height = m.width = to_uint(k, v);
  else if (k == "height") m.height = to_uint(k, v);
  else if (k == "width") m.width = to_uint(k, v);
  else if (k == "stem_kernel") m.stem_kernel = to_uint(k, v);
  else if (k == "stem_stride") m.stem_stride = to_uint(k, v);
  else if (k == "stem_pool") m.stem_pool = to_bool(k, v);
  else if (k == "stage_widths") m.stage_widths = to_list(k, v);
  else if (k == "stage_strides") m.stage_strides = to_list(k, v);
  else if (k == "groups") m.groups = to_uint(k, v);
  else if (k == "activation") m.activation = nn::parse_activation(std::string(v));
  else throw ConfigError("unknown config key 'model." + std::string(k) + "'");
}

void set_cohort(data::CohortSpec& c, std::string_view k, std::string_view v) {
  if (k == "num_studies") c.num_studies = to_uint(k, v);
  else if (k == "separability") c.separability = to_double(k, v);
  else if (k == "image_size") c.image_size = to_uint(k, v);
  else if (k == "female_fraction") c.female_fraction = to_double(k, v);
  else if (k == "mean_studies_per_patient")
    c.mean_studies_per_patient = to_double(k, v);
  else if (k == "train_fraction") {
    const double f = to_double(k, v);
    c.split_fractions = {f, 1.0 - f};
  } else if (k == "seed") c.seed = to_uint(k, v);
  else throw ConfigError("unknown config key 'cohort." + std::string(k) + "'");
}

}  // namespace

std::string_view to_string(Mode m) {
  return m == Mode::kPrivate ? "private" : "non-private";
}

Mode parse_mode(std::string_view s) {
  if (s == "private") return Mode::kPrivate;
  if (s == "non-private") return Mode::kNonPrivate;
  throw ConfigError("unknown mode '" + std::string(s) +
                    "' (expected private|non-private)");
}

std::string_view to_string(ThresholdSplit s) {
  return s == ThresholdSplit::kEval ? "eval" : "train";
}

ThresholdSplit parse_threshold_split(std::string_view s) {
  if (s == "eval") return ThresholdSplit::kEval;
  if (s == "train") return ThresholdSplit::kTrain;
  throw ConfigError("unknown threshold_split '" + std::string(s) +
                    "' (expected eval|train)");
}

double ExperimentConfig::resolved_learning_rate() const {
  if (learning_rate) return *learning_rate;
  return mode == Mode::kPrivate ? kPrivateLearningRate
                                : kNonPrivateLearningRate;
}

bool ExperimentConfig::resolved_augment() const {
  return augment.value_or(mode == Mode::kNonPrivate);
}

void ExperimentConfig::validate() const {
  if (mode == Mode::kPrivate) {
    if (augment.value_or(false))
      throw ConfigError(
          "augmentation is not allowed in private mode (set augment = false)");
    if (!target_epsilon && !noise_multiplier)
      throw ConfigError("private mode needs epsilon or noise_multiplier");
    if (target_epsilon && !(*target_epsilon > 0.0))
      throw ConfigError("epsilon must be > 0");
    if (noise_multiplier && !(*noise_multiplier >= 0.0))
      throw ConfigError("noise_multiplier must be >= 0");
    if (!(delta > 0.0 && delta < 1.0))
      throw ConfigError("delta must lie in (0, 1)");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
    if (sampling_rate && !(*sampling_rate > 0.0 && *sampling_rate <= 1.0))
      throw ConfigError("sampling_rate must lie in (0, 1]");
  } else {
    if (target_epsilon || noise_multiplier)
      throw ConfigError(
          "epsilon/noise_multiplier only apply to private mode");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(resolved_learning_rate() > 0.0))
    throw ConfigError("learning_rate must be > 0");
  if (bootstrap_redraws == 0)
    throw ConfigError("bootstrap_redraws must be >= 1");
  model.validate();
  if (model.num_labels != data::kNumFindings)
    throw ConfigError("model.num_labels must be 8");
  if (!dataset) cohort.validate();
}

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (key.starts_with("model.")) return set_model(model, key.substr(6), v);
  if (key.starts_with("cohort.")) return set_cohort(cohort, key.substr(7), v);
  if (key == "mode") mode = parse_mode(v);
  else if (key == "epsilon") target_epsilon = to_double(key, v);
  else if (key == "noise_multiplier") noise_multiplier = to_double(key, v);
  else if (key == "delta") delta = to_double(key, v);
  else if (key == "clip_norm") clip_norm = to_double(key, v);
  else if (key == "sampling_rate") sampling_rate = to_double(key, v);
  else if (key == "batch_size") batch_size = to_uint(key, v);
  else if (key == "learning_rate") learning_rate = to_double(key, v);
  else if (key == "epochs") epochs = to_uint(key, v);
  else if (key == "augment") augment = to_bool(key, v);
  else if (key == "seed") seed = to_uint(key, v);
  else if (key == "output_dir") output_dir = v;
  else if (key == "dataset") dataset = std::filesystem::path(v);
  else if (key == "init_checkpoint") init_checkpoint = std::filesystem::path(v);
  else if (key == "bootstrap_redraws") bootstrap_redraws = to_uint(key, v);
  else if (key == "threshold_split") threshold_split = parse_threshold_split(v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["epsilon"] = target_epsilon ? nlohmann::json(*target_epsilon) : nlohmann::json();
  j["noise_multiplier"] =
      noise_multiplier ? nlohmann::json(*noise_multiplier) : nlohmann::json();
  j["delta"] = delta;
  j["clip_norm"] = clip_norm;
  j["sampling_rate"] = sampling_rate ? nlohmann::json(*sampling_rate) : nlohmann::json();
  j["batch_size"] = batch_size;
  j["learning_rate"] = resolved_learning_rate();
  j["epochs"] = epochs;
  j["augment"] = resolved_augment();
  j["seed"] = seed;
  j["dataset"] = dataset ? nlohmann::json(dataset->generic_string()) : nlohmann::json();
  j["init_checkpoint"] =
      init_checkpoint ? nlohmann::json(init_checkpoint->generic_string())
                      : nlohmann::json();
  j["bootstrap_redraws"] = bootstrap_redraws;
  j["threshold_split"] = to_string(threshold_split);
  j["model"] = model.to_json();
  if (!dataset) j["cohort"] = cohort.to_json();
  return j;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    cfg.set(trim(std::string_view(t).substr(0, eq)),
            std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::filesystem::path resolve_output(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return std::filesystem::path(root) / p;
  return p;
}

}  // namespace dpcxr::run
