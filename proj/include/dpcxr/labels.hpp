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

#ifndef DPCXR_LABELS_HPP_
#define DPCXR_LABELS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dpcxr::data {

inline constexpr std::size_t kNumFindings = 8;

// Order: cardiomegaly, congestion, pleural effusion right/left, pneumonic
// infiltration right/left, atelectasis right/left.
inline constexpr std::array<std::string_view, kNumFindings> kFindingCodes = {
    "CDM", "CNG", "PER", "PEL", "PIR", "PIL", "ALR", "ALL"};
inline constexpr std::array<std::string_view, kNumFindings> kFindingColumns = {
    "cdm", "cng", "per", "pel", "pir", "pil", "alr", "all"};

inline constexpr std::array<std::string_view, 5> kCardiomegalyGrades = {
    "normal", "uncertain", "borderline", "enlarged", "massively enlarged"};
inline constexpr std::array<std::string_view, 5> kSeverityGrades = {
    "negative", "uncertain", "mild", "moderate", "severe"};

// The five-class scale used by finding `f`.
const std::array<std::string_view, 5>& grade_scale(std::size_t finding);

using Grades = std::array<std::string, kNumFindings>;
using BinaryLabelVector = std::array<std::uint8_t, kNumFindings>;

// First two grades of each scale are negative, the other three positive.
// Throws ConfigError naming the label and value for unknown grades.
BinaryLabelVector binarize_labels(const Grades& grades);

enum class Sex { kFemale, kMale };
std::string_view to_string(Sex s);
Sex parse_sex(std::string_view s);

inline constexpr std::size_t kNumAgeBins = 5;
inline constexpr std::array<int, kNumAgeBins + 1> kAgeBinEdges = {0,  30, 60,
                                                                  70, 80, 100};
inline constexpr std::array<std::string_view, kNumAgeBins> kAgeBinNames = {
    "[0, 30)", "[30, 60)", "[60, 70)", "[70, 80)", "[80, 100)"};

// Ages >= 100 fall into the last bin; negative ages are rejected.
std::size_t age_bin(int age);

struct SubgroupKey {
  std::size_t age_bin = 0;
  Sex sex = Sex::kFemale;
  int comorbidity_count = 0;  // number of positive binarized labels

  friend bool operator==(const SubgroupKey&, const SubgroupKey&) = default;
};

SubgroupKey subgroup_key(int age, Sex sex, const BinaryLabelVector& labels);

}  // namespace dpcxr::data

#endif  // DPCXR_LABELS_HPP_
