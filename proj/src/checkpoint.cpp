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

#include "dpcxr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "dpcxr/errors.hpp"
#include "dpcxr/hash.hpp"

namespace dpcxr::nn {
namespace {

constexpr const char* kFormat = "dpcxr-checkpoint-v1";

std::string encode_weights(std::span<const double> params) {
  std::string bytes;
  bytes.reserve(params.size() * 4);
  for (double p : params) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p));
    for (int s = 0; s < 32; s += 8)
      bytes.push_back(static_cast<char>((bits >> s) & 0xffU));
  }
  return bytes;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

CheckpointPaths checkpoint_paths(const std::filesystem::path& stem) {
  auto w = stem;
  auto m = stem;
  w += ".bin";
  m += ".json";
  return {w, m};
}

CheckpointPaths save_checkpoint(const Model& model,
                                const std::filesystem::path& stem,
                                const nlohmann::json& seed_lineage) {
  const CheckpointPaths paths = checkpoint_paths(stem);
  if (stem.has_parent_path())
    std::filesystem::create_directories(stem.parent_path());
  const std::string bytes = encode_weights(model.params());
  {
    std::ofstream out(paths.weights, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + paths.weights.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  nlohmann::json manifest = {
      {"format", kFormat},
      {"dtype", "float32-le"},
      {"config", model.config().to_json()},
      {"config_hash", model.config().hash()},
      {"param_count", model.param_count()},
      {"weights_file", paths.weights.filename().string()},
      {"weights_fnv1a64", hex64(fnv1a64(bytes))},
      {"seed_lineage", seed_lineage.is_null() ? nlohmann::json::object()
                                              : seed_lineage},
  };
  std::ofstream out(paths.manifest, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + paths.manifest.string());
  out << manifest.dump(2) << "\n";
  return paths;
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem) {
  const CheckpointPaths paths = checkpoint_paths(stem);
  if (!std::filesystem::exists(paths.manifest))
    throw FormatError("checkpoint manifest missing: " + paths.manifest.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(paths.manifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("corrupt checkpoint manifest " + paths.manifest.string() +
                      ": " + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != kFormat)
    throw FormatError("unrecognised checkpoint format in " +
                      paths.manifest.string());
  return manifest;
}

Model load_checkpoint(const std::filesystem::path& stem) {
  const nlohmann::json manifest = read_checkpoint_manifest(stem);
  const ModelConfig config = ModelConfig::from_json(manifest.at("config"));
  if (manifest.value("config_hash", "") != config.hash())
    throw FormatError("checkpoint config hash mismatch");
  Model model(config);
  if (manifest.value("param_count", std::size_t{0}) != model.param_count())
    throw FormatError("checkpoint param_count does not match its config");

  const CheckpointPaths paths = checkpoint_paths(stem);
  const std::string bytes = read_file(paths.weights);
  if (bytes.size() != model.param_count() * 4)
    throw FormatError("checkpoint weights file has " +
                      std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(model.param_count() * 4));
  if (manifest.value("weights_fnv1a64", "") != hex64(fnv1a64(bytes)))
    throw FormatError("checkpoint weights checksum mismatch");
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(bytes[i * 4 + b]))
              << (8 * b);
    params[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return model;
}

Model load_checkpoint(const std::filesystem::path& stem,
                      const ModelConfig& expected) {
  const nlohmann::json manifest = read_checkpoint_manifest(stem);
  const ModelConfig stored = ModelConfig::from_json(manifest.at("config"));
  const std::string field = stored.first_difference(expected);
  if (!field.empty())
    throw ConfigError("checkpoint config mismatch in field '" + field +
                      "': stored " + stored.to_json().at(field).dump() +
                      ", expected " + expected.to_json().at(field).dump());
  return load_checkpoint(stem);
}

}  // namespace dpcxr::nn
