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

#ifndef DPCXR_BOOTSTRAP_HPP_
#define DPCXR_BOOTSTRAP_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dpcxr::eval {

struct BootstrapResult {
  double mean = 0.0;
  double spread = 0.0;  // sample standard deviation over redraws
  std::size_t redraws = 0;
  std::size_t rejected = 0;
};

// Maps resampled row indices to one value per tracked metric. Throwing
// UndefinedMetric rejects the resample.
using BootstrapStatistic =
    std::function<std::vector<double>(std::span<const std::size_t>)>;

inline constexpr std::size_t kDefaultRedraws = 1000;

// Row bootstrap: each redraw samples `rows` indices with replacement from
// Rng(seed, Stream::kBootstrap, redraw, attempt). Undefined resamples are
// redrawn. Throws NumericError when more than half of all attempts were
// rejected. Redraws run in parallel; results do not depend on thread count.
std::vector<BootstrapResult> bootstrap(std::size_t rows,
                                       const BootstrapStatistic& statistic,
                                       std::size_t redraws, std::uint64_t seed);

// Single-metric convenience wrapper.
BootstrapResult bootstrap_scalar(
    std::size_t rows,
    const std::function<double(std::span<const std::size_t>)>& statistic,
    std::size_t redraws, std::uint64_t seed);

}  // namespace dpcxr::eval

#endif  // DPCXR_BOOTSTRAP_HPP_
