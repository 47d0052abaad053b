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

#ifndef DPCXR_DATASET_HPP_
#define DPCXR_DATASET_HPP_

// Model-ready datasets and the on-disk layout:
//   <dir>/metadata.csv   patient_id,filename,age,sex,cdm,...,all
//   <dir>/images/<filename>   binary PGM (P5)

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dpcxr/cohort.hpp"
#include "dpcxr/gradients.hpp"
#include "dpcxr/labels.hpp"
#include "dpcxr/tensor.hpp"

namespace dpcxr::data {

inline constexpr std::string_view kMetadataHeader =
    "patient_id,filename,age,sex,cdm,cng,per,pel,pir,pil,alr,all";

struct PreparedDataset {
  std::vector<Tensor> images;          // C x H x W in [0, 1]
  std::vector<std::uint8_t> targets;   // n x kNumFindings
  std::vector<SubgroupKey> subgroups;
  std::vector<std::string> patient_ids;
  std::vector<int> ages;

  std::size_t size() const { return images.size(); }
  nn::LabeledView view() const {
    return {images, targets, kNumFindings};
  }
  PreparedDataset subset(std::span<const std::size_t> indices) const;
};

// Preprocesses every study (normalize -> equalize -> resize to
// height x width) and replicates the gray channel `channels` times.
PreparedDataset prepare(std::span<const Study> studies, std::size_t channels,
                        std::size_t height, std::size_t width);

RawImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RawImage& image);

void write_dataset(const std::filesystem::path& dir,
                   std::span<const Study> studies);
// Validates the metadata header exactly and every grade string.
std::vector<Study> read_dataset(const std::filesystem::path& dir);

}  // namespace dpcxr::data

#endif  // DPCXR_DATASET_HPP_
