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

#ifndef DPCXR_MODEL_HPP_
#define DPCXR_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dpcxr/layers.hpp"
#include "dpcxr/tensor.hpp"
#include "json.hpp"

namespace dpcxr::nn {

// Residual classifier family: stem conv (+ optional 3x3/2 max-pool), one
// basic residual block per stage, global average pool, linear head producing
// one logit per label.
struct ModelConfig {
  std::size_t in_channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 2;
  bool stem_pool = false;
  std::vector<std::size_t> stage_widths = {8, 16, 32, 32};
  std::vector<std::size_t> stage_strides = {2, 2, 2, 1};
  std::size_t groups = 4;
  Activation activation = Activation::kMish;
  std::size_t num_labels = 8;

  // 512 x 512 x 3 input, widths 64/128/256/512, groups of 32.
  static ModelConfig full_scale();
  // 32 x 32 x 1 input, reduced widths, 4 groups.
  static ModelConfig desk_scale();

  void validate() const;
  Shape input_shape() const { return {in_channels, height, width}; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  // First differing field name, or empty when equal.
  std::string first_difference(const ModelConfig& other) const;
  // 16 hex digits, stable across platforms.
  std::string hash() const;
};

class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

  // Kaiming-normal convs, uniform linear head, GN gamma = 1 / beta = 0.
  void init(std::uint64_t seed);

  // Logits for one C x H x W sample. Throws ConfigError on shape mismatch
  // and NumericError naming the layer on non-finite activations.
  Tensor logits(const Tensor& image) const;

  // Runs forward and backward for one sample, adds `scale` * d(loss)/d(params)
  // into `grad` and returns the sample loss.
  double accumulate_gradient(const Tensor& image,
                             std::span<const std::uint8_t> target,
                             std::span<const double> pos_weights, double scale,
                             std::span<double> grad) const;

 private:
  std::span<const double> layer_params(std::size_t i) const;

  ModelConfig config_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Closed-form trainable parameter count for a config (no allocation).
std::size_t count_parameters(const ModelConfig& config);

}  // namespace dpcxr::nn

#endif  // DPCXR_MODEL_HPP_
