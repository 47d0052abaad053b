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

#ifndef DPCXR_GRADIENTS_HPP_
#define DPCXR_GRADIENTS_HPP_

// Batched forward and per-sample backward. Each function has an OpenMP
// version and a `_serial` reference; both produce bit-identical results
// because every sample is processed independently and rows are assembled
// by index.

#include <cstdint>
#include <span>
#include <vector>

#include "dpcxr/model.hpp"
#include "dpcxr/tensor.hpp"

namespace dpcxr::nn {

// Un-aggregated gradients, one row per sample (batch_size x param_count).
struct PerSampleGradients {
  std::size_t batch_size = 0;
  std::size_t param_count = 0;
  std::vector<double> values;

  PerSampleGradients() = default;
  PerSampleGradients(std::size_t b, std::size_t p)
      : batch_size(b), param_count(p), values(b * p, 0.0) {}

  std::span<double> row(std::size_t i) {
    return std::span<double>(values).subspan(i * param_count, param_count);
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * param_count,
                                                   param_count);
  }
};

// Non-owning view of labelled training images.
struct LabeledView {
  std::span<const Tensor> images;
  std::span<const std::uint8_t> targets;  // images.size() x num_labels
  std::size_t num_labels = 0;

  std::span<const std::uint8_t> target(std::size_t i) const {
    return targets.subspan(i * num_labels, num_labels);
  }
};

PerSampleGradients per_sample_backward(const Model& model,
                                       const LabeledView& data,
                                       std::span<const std::size_t> indices,
                                       std::span<const double> pos_weights);

PerSampleGradients per_sample_backward_serial(
    const Model& model, const LabeledView& data,
    std::span<const std::size_t> indices, std::span<const double> pos_weights);

// Gradient of the mean loss over `indices`, accumulated into a single buffer.
std::vector<double> batch_gradient(const Model& model, const LabeledView& data,
                                   std::span<const std::size_t> indices,
                                   std::span<const double> pos_weights);

// Sigmoid probabilities, B x num_labels.
Tensor predict_probabilities(const Model& model,
                             std::span<const Tensor> images);
Tensor predict_probabilities_serial(const Model& model,
                                    std::span<const Tensor> images);

}  // namespace dpcxr::nn

#endif  // DPCXR_GRADIENTS_HPP_
