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

#include "dpcxr/gradients.hpp"

#include <exception>
#include <string>

#include "dpcxr/errors.hpp"
#include "dpcxr/loss.hpp"

namespace dpcxr::nn {
namespace {

void check_view(const Model& model, const LabeledView& data,
                std::span<const std::size_t> indices,
                std::span<const double> pos_weights) {
  if (data.num_labels != model.config().num_labels)
    throw ConfigError("dataset label count " + std::to_string(data.num_labels) +
                      " does not match model num_labels " +
                      std::to_string(model.config().num_labels));
  if (data.targets.size() != data.images.size() * data.num_labels)
    throw ConfigError("target matrix does not match image count");
  for (std::size_t i : indices)
    if (i >= data.images.size())
      throw ConfigError("sample index " + std::to_string(i) + " out of range");
  validate_pos_weights(pos_weights);
}

void compute_row(const Model& model, const LabeledView& data, std::size_t idx,
                 std::span<const double> pos_weights, std::span<double> row) {
  try {
    model.accumulate_gradient(data.images[idx], data.target(idx), pos_weights,
                              1.0, row);
  } catch (const NumericError& e) {
    throw NumericError("sample " + std::to_string(idx) + ": " + e.what());
  }
}

// Rethrows the exception of the lowest failing index, so the error reported
// does not depend on thread scheduling.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

PerSampleGradients per_sample_backward(const Model& model,
                                       const LabeledView& data,
                                       std::span<const std::size_t> indices,
                                       std::span<const double> pos_weights) {
  check_view(model, data, indices, pos_weights);
  PerSampleGradients out(indices.size(), model.param_count());
  std::vector<std::exception_ptr> errors(indices.size());
  const auto n = static_cast<std::ptrdiff_t>(indices.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    try {
      compute_row(model, data, indices[b], pos_weights, out.row(b));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

PerSampleGradients per_sample_backward_serial(
    const Model& model, const LabeledView& data,
    std::span<const std::size_t> indices, std::span<const double> pos_weights) {
  check_view(model, data, indices, pos_weights);
  PerSampleGradients out(indices.size(), model.param_count());
  for (std::size_t b = 0; b < indices.size(); ++b)
    compute_row(model, data, indices[b], pos_weights, out.row(b));
  return out;
}

std::vector<double> batch_gradient(const Model& model, const LabeledView& data,
                                   std::span<const std::size_t> indices,
                                   std::span<const double> pos_weights) {
  check_view(model, data, indices, pos_weights);
  std::vector<double> grad(model.param_count(), 0.0);
  if (indices.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t idx : indices)
    model.accumulate_gradient(data.images[idx], data.target(idx), pos_weights,
                              scale, grad);
  return grad;
}

Tensor predict_probabilities(const Model& model,
                             std::span<const Tensor> images) {
  const std::size_t L = model.config().num_labels;
  Tensor out({images.size(), L});
  std::vector<std::exception_ptr> errors(images.size());
  const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const Tensor z = model.logits(images[i]);
      for (std::size_t l = 0; l < L; ++l) out[i * L + l] = sigmoid(z[l]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

Tensor predict_probabilities_serial(const Model& model,
                                    std::span<const Tensor> images) {
  const std::size_t L = model.config().num_labels;
  Tensor out({images.size(), L});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor z = model.logits(images[i]);
    for (std::size_t l = 0; l < L; ++l) out[i * L + l] = sigmoid(z[l]);
  }
  return out;
}

}  // namespace dpcxr::nn
