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

#include "dpcxr/bootstrap.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "dpcxr/errors.hpp"
#include "dpcxr/rng.hpp"

namespace dpcxr::eval {
namespace {

// Per-redraw attempt cap; reaching it means the statistic is almost never
// defined, which the rejection-rate check reports.
constexpr std::size_t kMaxAttempts = 64;

}  // namespace

std::vector<BootstrapResult> bootstrap(std::size_t rows,
                                       const BootstrapStatistic& statistic,
                                       std::size_t redraws,
                                       std::uint64_t seed) {
  if (rows == 0) throw ConfigError("bootstrap: empty data");
  if (redraws == 0) throw ConfigError("bootstrap: redraws must be >= 1");

  std::vector<std::vector<double>> values(redraws);
  std::vector<std::size_t> rejected(redraws, 0);
  std::vector<std::uint8_t> accepted(redraws, 0);
  std::vector<std::exception_ptr> errors(redraws);
  const auto n = static_cast<std::ptrdiff_t>(redraws);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    std::vector<std::size_t> sample(rows);
    try {
      for (std::size_t a = 0; a < kMaxAttempts; ++a) {
        Rng rng(seed, Stream::kBootstrap, static_cast<std::uint64_t>(r), a);
        for (auto& s : sample) s = rng.below(rows);
        try {
          values[r] = statistic(sample);
          accepted[r] = 1;
          break;
        } catch (const UndefinedMetric&) {
          ++rejected[r];
        }
      }
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t total_rejected = 0, total_accepted = 0;
  for (std::size_t r = 0; r < redraws; ++r) {
    total_rejected += rejected[r];
    total_accepted += accepted[r];
  }
  if (total_accepted < redraws || total_rejected > total_accepted)
    throw NumericError("bootstrap: metric undefined in " +
                       std::to_string(total_rejected) + " of " +
                       std::to_string(total_rejected + total_accepted) +
                       " resamples (single-class resamples?)");

  const std::size_t k = values.front().size();
  std::vector<BootstrapResult> out(k);
  for (std::size_t m = 0; m < k; ++m) {
    double sum = 0.0;
    for (const auto& v : values) {
      if (v.size() != k)
        throw ConfigError("bootstrap: statistic changed its output length");
      sum += v[m];
    }
    const double mean = sum / static_cast<double>(redraws);
    double ss = 0.0;
    for (const auto& v : values) ss += (v[m] - mean) * (v[m] - mean);
    out[m] = {mean,
              redraws > 1 ? std::sqrt(ss / static_cast<double>(redraws - 1))
                          : 0.0,
              redraws, total_rejected};
  }
  return out;
}

BootstrapResult bootstrap_scalar(
    std::size_t rows,
    const std::function<double(std::span<const std::size_t>)>& statistic,
    std::size_t redraws, std::uint64_t seed) {
  return bootstrap(
      rows,
      [&](std::span<const std::size_t> idx) {
        return std::vector<double>{statistic(idx)};
      },
      redraws, seed)[0];
}

}  // namespace dpcxr::eval
