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

#ifndef DPCXR_CHECKPOINT_HPP_
#define DPCXR_CHECKPOINT_HPP_

// Checkpoint = `<stem>.bin` (flat little-endian float32 parameters) plus
// `<stem>.json` manifest carrying the model config, its hash, the parameter
// count, a checksum of the weights file and the seed lineage.

#include <filesystem>

#include "dpcxr/model.hpp"
#include "json.hpp"

namespace dpcxr::nn {

struct CheckpointPaths {
  std::filesystem::path weights;
  std::filesystem::path manifest;
};

CheckpointPaths checkpoint_paths(const std::filesystem::path& stem);

CheckpointPaths save_checkpoint(const Model& model,
                                const std::filesystem::path& stem,
                                const nlohmann::json& seed_lineage = {});

// Throws FormatError on missing/corrupt files.
Model load_checkpoint(const std::filesystem::path& stem);

// Additionally throws ConfigError naming the first field where the stored
// config differs from `expected`.
Model load_checkpoint(const std::filesystem::path& stem,
                      const ModelConfig& expected);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem);

}  // namespace dpcxr::nn

#endif  // DPCXR_CHECKPOINT_HPP_
