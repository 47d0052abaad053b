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

#ifndef DPCXR_EXPERIMENT_CONFIG_HPP_
#define DPCXR_EXPERIMENT_CONFIG_HPP_

// Experiment configuration. Text form is one `key = value` per line with `#`
// comments; the same keys are accepted as command-line overrides.
//
//   mode               private | non-private
//   epsilon            target budget (private; calibrates sigma)
//   noise_multiplier   explicit sigma (private; epsilon then acts as a cap)
//   delta, clip_norm, sampling_rate, batch_size, learning_rate, epochs,
//   augment, seed, output_dir, dataset, init_checkpoint, bootstrap_redraws,
//   threshold_split    eval | train
//   model.*            preset (desk|full), in_channels, size, height, width,
//                      stem_kernel, stem_stride, stem_pool, stage_widths,
//                      stage_strides, groups, activation
//   cohort.*           num_studies, separability, image_size, female_fraction,
//                      mean_studies_per_patient, train_fraction, seed

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "dpcxr/cohort.hpp"
#include "dpcxr/model.hpp"

namespace dpcxr::run {

enum class Mode { kPrivate, kNonPrivate };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

enum class ThresholdSplit { kEval, kTrain };
std::string_view to_string(ThresholdSplit s);
ThresholdSplit parse_threshold_split(std::string_view s);

inline constexpr const char* kOutputRootEnv = "DPCXR_OUTPUT_ROOT";
inline constexpr double kPrivateLearningRate = 5e-4;
inline constexpr double kNonPrivateLearningRate = 5e-5;

struct ExperimentConfig {
  Mode mode = Mode::kPrivate;
  std::optional<double> target_epsilon;
  std::optional<double> noise_multiplier;
  double delta = 6e-6;
  double clip_norm = 1.5;
  // Private runs: defaults to batch_size / training-set size.
  std::optional<double> sampling_rate;
  std::size_t batch_size = 128;
  // Defaults: 5e-4 private, 5e-5 non-private.
  std::optional<double> learning_rate;
  std::size_t epochs = 20;
  // Defaults to on for non-private runs; rejected for private runs.
  std::optional<bool> augment;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> init_checkpoint;
  std::size_t bootstrap_redraws = 1000;
  ThresholdSplit threshold_split = ThresholdSplit::kEval;
  nn::ModelConfig model = nn::ModelConfig::desk_scale();
  data::CohortSpec cohort;

  double resolved_learning_rate() const;
  bool resolved_augment() const;
  // Throws ConfigError on any inconsistency, including augmentation in
  // private mode.
  void validate() const;
  // Applies one `key = value` setting. Throws ConfigError naming unknown keys
  // or malformed values.
  void set(std::string_view key, std::string_view value);
  nlohmann::json to_json() const;
};

// Parses the text form over the defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Prefixes relative paths with $DPCXR_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

}  // namespace dpcxr::run

#endif  // DPCXR_EXPERIMENT_CONFIG_HPP_
