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

#ifndef DPCXR_LOSS_HPP_
#define DPCXR_LOSS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dpcxr/tensor.hpp"

namespace dpcxr::nn {

inline constexpr double kProbabilityClamp = 1e-7;

struct LossResult {
  double mean = 0.0;
  std::vector<double> per_sample;
};

// Per label: -[w * y * log p + (1 - y) * log(1 - p)] with p clamped to
// [1e-7, 1 - 1e-7]; averaged over labels, then over samples.
// `probabilities` is B x L, `targets` row-major B x L in {0, 1}.
LossResult weighted_bce(const Tensor& probabilities,
                        std::span<const std::uint8_t> targets,
                        std::span<const double> pos_weights);

double weighted_bce_sample(std::span<const double> probabilities,
                           std::span<const std::uint8_t> target,
                           std::span<const double> pos_weights);

// d(sample loss)/d(logits), written into `grad`. Zero where p is clamped.
void weighted_bce_logit_grad(std::span<const double> logits,
                             std::span<const std::uint8_t> target,
                             std::span<const double> pos_weights,
                             std::span<double> grad);

// w_l = (#negatives_l) / (#positives_l) over the training targets.
std::vector<double> inverse_frequency_weights(
    std::span<const std::uint8_t> targets, std::size_t num_labels);

void validate_pos_weights(std::span<const double> pos_weights);

}  // namespace dpcxr::nn

#endif  // DPCXR_LOSS_HPP_
