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

#include "dpcxr/dp_sgd.hpp"

#include <cmath>
#include <string>

#include "dpcxr/errors.hpp"

namespace dpcxr::dp {

std::vector<std::size_t> poisson_sample(std::size_t n, double sampling_rate,
                                        Rng& rng) {
  if (!(sampling_rate >= 0.0 && sampling_rate <= 1.0))
    throw ConfigError("poisson_sample: sampling rate must lie in [0, 1]");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (rng.uniform() < sampling_rate) out.push_back(i);
  return out;
}

PerSampleGradients clip_per_sample(PerSampleGradients grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be > 0");
  for (std::size_t i = 0; i < grads.batch_size; ++i) {
    auto row = grads.row(i);
    double sq = 0.0;
    for (double v : row) {
      if (!std::isfinite(v))
        throw NumericError("non-finite gradient entry in sample " +
                           std::to_string(i));
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
      const double scale = clip_norm / norm;
      for (double& v : row) v *= scale;
    }
  }
  return grads;
}

PrivatizedGradient privatize(const PerSampleGradients& grads, double clip_norm,
                             double noise_multiplier,
                             double expected_batch_size, Rng& noise_rng,
                             std::uint64_t rng_stream_id) {
  if (!(expected_batch_size > 0.0))
    throw ConfigError("expected batch size must be > 0");
  if (!(noise_multiplier >= 0.0))
    throw ConfigError("noise multiplier must be >= 0");
  const PerSampleGradients clipped = clip_per_sample(grads, clip_norm);
  PrivatizedGradient out;
  out.values.assign(grads.param_count, 0.0);
  for (std::size_t i = 0; i < clipped.batch_size; ++i) {
    const auto row = clipped.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out.values[j] += row[j];
  }
  const double noise_std = noise_multiplier * clip_norm;
  if (noise_std > 0.0)
    for (double& v : out.values) v += noise_std * noise_rng.normal();
  for (double& v : out.values) v /= expected_batch_size;
  out.noise_std_applied = noise_std / expected_batch_size;
  out.realized_batch_size = grads.batch_size;
  out.rng_stream_id = rng_stream_id;
  return out;
}

StepResult private_training_step(nn::Model& model, nn::NAdamState& optimizer,
                                 const nn::LabeledView& data,
                                 std::span<const std::size_t> batch,
                                 std::span<const double> pos_weights,
                                 const accounting::DpSgdConfig& config,
                                 double expected_batch_size, Rng& noise_rng,
                                 accounting::PrivacyAccountant& accountant) {
  const PerSampleGradients grads =
      nn::per_sample_backward(model, data, batch, pos_weights);
  const PrivatizedGradient g =
      privatize(grads, config.clip_norm, config.noise_multiplier,
                expected_batch_size, noise_rng);
  nn::nadam_step(model.params(), g.values, optimizer);
  accountant.step();
  return {optimizer.step, batch.size(), g.noise_std_applied};
}

StepResult non_private_training_step(nn::Model& model,
                                     nn::NAdamState& optimizer,
                                     const nn::LabeledView& data,
                                     std::span<const std::size_t> batch,
                                     std::span<const double> pos_weights) {
  const PerSampleGradients grads =
      nn::per_sample_backward(model, data, batch, pos_weights);
  std::vector<double> mean(grads.param_count, 0.0);
  for (std::size_t i = 0; i < grads.batch_size; ++i) {
    const auto row = grads.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j];
  }
  if (grads.batch_size > 0)
    for (double& v : mean) v /= static_cast<double>(grads.batch_size);
  nn::nadam_step(model.params(), mean, optimizer);
  return {optimizer.step, batch.size(), 0.0};
}

}  // namespace dpcxr::dp
