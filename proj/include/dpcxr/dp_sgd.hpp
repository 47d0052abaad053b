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

#ifndef DPCXR_DP_SGD_HPP_
#define DPCXR_DP_SGD_HPP_

// The private gradient step: Poisson sampling, per-sample l2 clipping,
// summation, Gaussian noise N(0, sigma^2 C^2 I) on the clipped sum, and
// division by the expected batch size L (not the realised one).
//
// RNG scheme: for step t of a run with master seed s, the batch is drawn from
// Rng(s, Stream::kSampling, t) and the noise from Rng(s, Stream::kNoise, t).

#include <cstdint>
#include <span>
#include <vector>

#include "dpcxr/accountant.hpp"
#include "dpcxr/gradients.hpp"
#include "dpcxr/model.hpp"
#include "dpcxr/nadam.hpp"
#include "dpcxr/rng.hpp"

namespace dpcxr::dp {

using nn::PerSampleGradients;

// Each index in [0, n) is kept independently with probability q; ascending.
std::vector<std::size_t> poisson_sample(std::size_t n, double sampling_rate,
                                        Rng& rng);

// Row i becomes g_i * min(1, C / ||g_i||). Throws NumericError naming the
// first sample with a non-finite entry.
PerSampleGradients clip_per_sample(PerSampleGradients grads, double clip_norm);

struct PrivatizedGradient {
  std::vector<double> values;
  double noise_std_applied = 0.0;  // sigma * C / L
  std::size_t realized_batch_size = 0;
  std::uint64_t rng_stream_id = 0;
};

// (sum_i clip(g_i) + N(0, sigma^2 C^2 I)) / L. Clipping is applied here.
PrivatizedGradient privatize(const PerSampleGradients& grads, double clip_norm,
                             double noise_multiplier,
                             double expected_batch_size, Rng& noise_rng,
                             std::uint64_t rng_stream_id = 0);

struct StepResult {
  std::int64_t step = 0;  // optimizer step count after the update
  std::size_t batch_size = 0;
  double noise_std = 0.0;
};

// Computes per-sample gradients for `batch`, privatizes them and applies one
// NAdam update. Advances `accountant` by exactly one step.
StepResult private_training_step(nn::Model& model, nn::NAdamState& optimizer,
                                 const nn::LabeledView& data,
                                 std::span<const std::size_t> batch,
                                 std::span<const double> pos_weights,
                                 const accounting::DpSgdConfig& config,
                                 double expected_batch_size, Rng& noise_rng,
                                 accounting::PrivacyAccountant& accountant);

// Plain averaged-gradient NAdam step on `batch`; the sum is taken in the same
// order as the private path.
StepResult non_private_training_step(nn::Model& model,
                                     nn::NAdamState& optimizer,
                                     const nn::LabeledView& data,
                                     std::span<const std::size_t> batch,
                                     std::span<const double> pos_weights);

}  // namespace dpcxr::dp

#endif  // DPCXR_DP_SGD_HPP_
