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

#ifndef DPCXR_COHORT_HPP_
#define DPCXR_COHORT_HPP_

// Synthetic subgroup-annotated chest-radiograph cohort. Demographics and
// label prevalences default to the reference cohort statistics; each finding
// plants its own local pattern whose strength is set by `separability` and
// scaled down with age to reproduce an age-difficulty gradient.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpcxr/image.hpp"
#include "dpcxr/labels.hpp"
#include "json.hpp"

namespace dpcxr::data {

struct Study {
  std::string patient_id;
  std::string filename;
  int age = 0;
  Sex sex = Sex::kFemale;
  Grades grades;
  RawImage pixels;
};

struct CohortSpec {
  std::size_t num_studies = 2000;
  double female_fraction = 67292.0 / 193311.0;
  std::array<double, kNumAgeBins> age_fractions = {
      5444.0 / 193311.0, 52631.0 / 193311.0, 46907.0 / 193311.0,
      61822.0 / 193311.0, 26507.0 / 193311.0};
  std::array<double, kNumFindings> prevalences = {
      90348.0 / 193311.0, 16371.0 / 193311.0, 15609.0 / 193311.0,
      12571.0 / 193311.0, 22513.0 / 193311.0, 15993.0 / 193311.0,
      18761.0 / 193311.0, 15082.0 / 193311.0};
  double separability = 1.0;
  // Multiplier on planted signal strength per age bin.
  std::array<double, kNumAgeBins> age_signal_scale = {1.15, 1.0, 0.9, 0.8,
                                                      0.7};
  std::size_t image_size = 32;
  double mean_studies_per_patient = 1.3;
  // Train / test.
  std::vector<double> split_fractions = {153502.0 / 193311.0,
                                         39809.0 / 193311.0};
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static CohortSpec from_json(const nlohmann::json& j);
};

// Deterministic per seed and independent of thread count: study k of patient
// p draws from Rng(seed, Stream::kCohort, p + 1, k + 1).
std::vector<Study> generate_cohort(const CohortSpec& spec);

// Assigns whole patients to splits in a seeded random order; returns study
// indices (ascending) per split.
std::vector<std::vector<std::size_t>> split_patientwise(
    std::span<const Study> studies, std::span<const double> fractions,
    std::uint64_t seed);

}  // namespace dpcxr::data

#endif  // DPCXR_COHORT_HPP_
