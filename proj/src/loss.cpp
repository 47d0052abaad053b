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

#include "dpcxr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpcxr/errors.hpp"
#include "dpcxr/layers.hpp"

namespace dpcxr::nn {

void validate_pos_weights(std::span<const double> pos_weights) {
  for (std::size_t l = 0; l < pos_weights.size(); ++l)
    if (!(pos_weights[l] > 0.0) || !std::isfinite(pos_weights[l]))
      throw ConfigError("pos_weight for label " + std::to_string(l) +
                        " must be finite and > 0");
}

double weighted_bce_sample(std::span<const double> probabilities,
                           std::span<const std::uint8_t> target,
                           std::span<const double> pos_weights) {
  const std::size_t L = probabilities.size();
  double acc = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const double p = std::clamp(probabilities[l], kProbabilityClamp,
                                1.0 - kProbabilityClamp);
    acc += target[l] ? -pos_weights[l] * std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(L);
}

LossResult weighted_bce(const Tensor& probabilities,
                        std::span<const std::uint8_t> targets,
                        std::span<const double> pos_weights) {
  if (probabilities.rank() != 2)
    throw ConfigError("weighted_bce: probabilities must be B x L");
  const std::size_t B = probabilities.dim(0);
  const std::size_t L = probabilities.dim(1);
  if (targets.size() != B * L || pos_weights.size() != L)
    throw ConfigError("weighted_bce: targets / weights shape mismatch");
  validate_pos_weights(pos_weights);
  LossResult r;
  r.per_sample.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    r.per_sample[b] = weighted_bce_sample(probabilities.span().subspan(b * L, L),
                                          targets.subspan(b * L, L),
                                          pos_weights);
    r.mean += r.per_sample[b];
  }
  if (B > 0) r.mean /= static_cast<double>(B);
  return r;
}

void weighted_bce_logit_grad(std::span<const double> logits,
                             std::span<const std::uint8_t> target,
                             std::span<const double> pos_weights,
                             std::span<double> grad) {
  const std::size_t L = logits.size();
  const double inv_l = 1.0 / static_cast<double>(L);
  for (std::size_t l = 0; l < L; ++l) {
    const double p = sigmoid(logits[l]);
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) {
      grad[l] = 0.0;
      continue;
    }
    grad[l] = inv_l * (target[l] ? -pos_weights[l] * (1.0 - p) : p);
  }
}

std::vector<double> inverse_frequency_weights(
    std::span<const std::uint8_t> targets, std::size_t num_labels) {
  if (num_labels == 0 || targets.size() % num_labels != 0)
    throw ConfigError("inverse_frequency_weights: bad target matrix");
  const std::size_t n = targets.size() / num_labels;
  std::vector<double> w(num_labels);
  for (std::size_t l = 0; l < num_labels; ++l) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) pos += targets[i * num_labels + l];
    if (pos == 0 || pos == n)
      throw ConfigError("label " + std::to_string(l) +
                        " is single-class in the training targets");
    w[l] = static_cast<double>(n - pos) / static_cast<double>(pos);
  }
  return w;
}

}  // namespace dpcxr::nn
