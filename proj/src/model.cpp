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

#include "dpcxr/model.hpp"

#include <cmath>

#include "dpcxr/errors.hpp"
#include "dpcxr/hash.hpp"
#include "dpcxr/loss.hpp"

namespace dpcxr::nn {
namespace {

std::vector<std::unique_ptr<Layer>> build_layers(const ModelConfig& c) {
  std::vector<std::unique_ptr<Layer>> layers;
  const std::size_t stem = c.stage_widths.front();
  layers.push_back(std::make_unique<Conv2d>("stem.conv", c.in_channels, stem,
                                            c.stem_kernel, c.stem_stride,
                                            c.stem_kernel / 2, false));
  layers.push_back(std::make_unique<GroupNorm>("stem.norm", stem, c.groups));
  layers.push_back(std::make_unique<ActivationLayer>("stem.act", c.activation));
  if (c.stem_pool)
    layers.push_back(std::make_unique<MaxPool2d>("stem.pool", 3, 2, 1));
  std::size_t prev = stem;
  for (std::size_t i = 0; i < c.stage_widths.size(); ++i) {
    layers.push_back(std::make_unique<BasicBlock>(
        "stage" + std::to_string(i + 1), prev, c.stage_widths[i],
        c.stage_strides[i], c.groups, c.activation));
    prev = c.stage_widths[i];
  }
  layers.push_back(std::make_unique<GlobalAvgPool>("pool"));
  layers.push_back(std::make_unique<Linear>("head", prev, c.num_labels));
  return layers;
}

}  // namespace

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.in_channels = 3;
  c.height = 512;
  c.width = 512;
  c.stem_kernel = 7;
  c.stem_stride = 2;
  c.stem_pool = true;
  c.stage_widths = {64, 128, 256, 512};
  c.stage_strides = {1, 2, 2, 2};
  c.groups = 32;
  c.activation = Activation::kMish;
  c.num_labels = 8;
  return c;
}

ModelConfig ModelConfig::desk_scale() { return ModelConfig{}; }

void ModelConfig::validate() const {
  if (in_channels == 0 || height == 0 || width == 0)
    throw ConfigError("model: input shape must be positive");
  if (num_labels < 1) throw ConfigError("model: num_labels must be >= 1");
  if (stage_widths.empty())
    throw ConfigError("model: at least one stage is required");
  if (stage_widths.size() != stage_strides.size())
    throw ConfigError("model: stage_widths and stage_strides differ in length");
  if (stem_kernel == 0 || stem_stride == 0)
    throw ConfigError("model: stem kernel and stride must be > 0");
  if (groups == 0) throw ConfigError("model: groups must be > 0");
  for (std::size_t w : stage_widths)
    if (w == 0 || w % groups != 0)
      throw ConfigError("model: channel width " + std::to_string(w) +
                        " not divisible by " + std::to_string(groups) +
                        " groups");
  for (std::size_t s : stage_strides)
    if (s == 0) throw ConfigError("model: stage stride must be > 0");
  // Shape-check the whole stack.
  Shape s = input_shape();
  for (const auto& l : build_layers(*this)) s = l->output_shape(s);
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"in_channels", in_channels},   {"height", height},
      {"width", width},               {"stem_kernel", stem_kernel},
      {"stem_stride", stem_stride},   {"stem_pool", stem_pool},
      {"stage_widths", stage_widths}, {"stage_strides", stage_strides},
      {"groups", groups},             {"activation", to_string(activation)},
      {"num_labels", num_labels},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.stem_kernel = j.at("stem_kernel").get<std::size_t>();
    c.stem_stride = j.at("stem_stride").get<std::size_t>();
    c.stem_pool = j.at("stem_pool").get<bool>();
    c.stage_widths = j.at("stage_widths").get<std::vector<std::size_t>>();
    c.stage_strides = j.at("stage_strides").get<std::vector<std::size_t>>();
    c.groups = j.at("groups").get<std::size_t>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.num_labels = j.at("num_labels").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  return c;
}

std::string ModelConfig::first_difference(const ModelConfig& other) const {
  const nlohmann::json a = to_json();
  const nlohmann::json b = other.to_json();
  for (auto it = a.begin(); it != a.end(); ++it)
    if (b.at(it.key()) != it.value()) return it.key();
  return {};
}

std::string ModelConfig::hash() const {
  return hex64(fnv1a64(to_json().dump()));
}

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  std::size_t n = 0;
  for (const auto& l : build_layers(config)) n += l->param_count();
  return n;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  layers_ = build_layers(config_);
  offsets_ = {0};
  for (const auto& l : layers_)
    offsets_.push_back(offsets_.back() + l->param_count());
  params_.assign(offsets_.back(), 0.0);
}

void Model::init(std::uint64_t seed) {
  Rng rng(seed, Stream::kInit);
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->init(std::span<double>(params_).subspan(
                         offsets_[i], offsets_[i + 1] - offsets_[i]),
                     rng);
}

std::span<const double> Model::layer_params(std::size_t i) const {
  return std::span<const double>(params_).subspan(offsets_[i],
                                                  offsets_[i + 1] - offsets_[i]);
}

Tensor Model::logits(const Tensor& image) const {
  if (image.shape() != config_.input_shape())
    throw ConfigError("model input shape " + shape_string(image.shape()) +
                      " does not match config " +
                      shape_string(config_.input_shape()));
  Tensor h = image;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(layer_params(i), h, nullptr);
    if (!h.all_finite())
      throw NumericError("non-finite activation after layer '" +
                         layers_[i]->name() + "'");
  }
  return h;
}

double Model::accumulate_gradient(const Tensor& image,
                                  std::span<const std::uint8_t> target,
                                  std::span<const double> pos_weights,
                                  double scale, std::span<double> grad) const {
  if (image.shape() != config_.input_shape())
    throw ConfigError("model input shape " + shape_string(image.shape()) +
                      " does not match config " +
                      shape_string(config_.input_shape()));
  if (target.size() != config_.num_labels ||
      pos_weights.size() != config_.num_labels)
    throw ConfigError("target / pos_weight length must equal num_labels");
  if (grad.size() != params_.size())
    throw ConfigError("gradient buffer has wrong length");

  std::vector<Cache> caches(layers_.size());
  Tensor h = image;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(layer_params(i), h, &caches[i]);
    if (!h.all_finite())
      throw NumericError("non-finite activation after layer '" +
                         layers_[i]->name() + "'");
  }
  std::vector<double> probs(h.size());
  for (std::size_t l = 0; l < h.size(); ++l) probs[l] = sigmoid(h[l]);
  const double loss = weighted_bce_sample(probs, target, pos_weights);

  Tensor g(h.shape());
  weighted_bce_logit_grad(h.span(), target, pos_weights, g.span());
  for (std::size_t l = 0; l < g.size(); ++l) g[l] *= scale;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto gp = grad.subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
    g = layers_[i]->backward(layer_params(i), caches[i], g, gp);
    if (!g.all_finite())
      throw NumericError("non-finite gradient in layer '" +
                         layers_[i]->name() + "'");
  }
  return loss;
}

}  // namespace dpcxr::nn
