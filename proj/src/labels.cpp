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

#include "dpcxr/labels.hpp"

#include <algorithm>

#include "dpcxr/errors.hpp"

namespace dpcxr::data {

const std::array<std::string_view, 5>& grade_scale(std::size_t finding) {
  return finding == 0 ? kCardiomegalyGrades : kSeverityGrades;
}

BinaryLabelVector binarize_labels(const Grades& grades) {
  BinaryLabelVector out{};
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    const auto& scale = grade_scale(f);
    const auto it = std::find(scale.begin(), scale.end(), grades[f]);
    if (it == scale.end())
      throw ConfigError("unknown grade '" + grades[f] + "' for label " +
                        std::string(kFindingCodes[f]));
    out[f] = (it - scale.begin()) >= 2 ? 1 : 0;
  }
  return out;
}

std::string_view to_string(Sex s) {
  return s == Sex::kFemale ? "female" : "male";
}

Sex parse_sex(std::string_view s) {
  if (s == "female") return Sex::kFemale;
  if (s == "male") return Sex::kMale;
  throw ConfigError("unknown sex '" + std::string(s) +
                    "' (expected female|male)");
}

std::size_t age_bin(int age) {
  if (age < 0) throw ConfigError("age must be >= 0, got " + std::to_string(age));
  for (std::size_t b = 0; b + 1 < kNumAgeBins; ++b)
    if (age < kAgeBinEdges[b + 1]) return b;
  return kNumAgeBins - 1;
}

SubgroupKey subgroup_key(int age, Sex sex, const BinaryLabelVector& labels) {
  int count = 0;
  for (auto v : labels) count += v;
  return {age_bin(age), sex, count};
}

}  // namespace dpcxr::data
