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

#ifndef DPCXR_ACCOUNTANT_HPP_
#define DPCXR_ACCOUNTANT_HPP_

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// A training run with sampling rate q, noise multiplier sigma and T steps is
// charged T times the per-step RDP curve; the curve is converted to an
// (epsilon, delta) guarantee by minimising the tightened conversion bound
//   eps(a) = rdp(a) - (log(delta) + log(a)) / (a - 1) + log((a - 1) / a)
// over the order grid.

#include <cstdint>
#include <span>
#include <vector>

namespace dpcxr::accounting {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  // Throws ConfigError unless epsilon >= 0 and 0 < delta < 1.
  void validate() const;
};

// RDP bounds at a fixed set of orders. Curves over identical orders compose
// by element-wise addition.
class RdpCurve {
 public:
  RdpCurve() = default;
  RdpCurve(std::vector<double> orders, std::vector<double> values);

  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return orders_.size(); }
  bool empty() const { return orders_.empty(); }

  RdpCurve& operator+=(const RdpCurve& other);
  friend RdpCurve operator+(RdpCurve a, const RdpCurve& b) { return a += b; }

 private:
  std::vector<double> orders_;
  std::vector<double> values_;
};

struct DpSgdConfig {
  double sampling_rate = 8e-4;
  double noise_multiplier = 1.0;
  double clip_norm = 1.5;
  std::int64_t steps = 187500;
  double target_delta = 6e-6;

  void validate() const;
};

// {1.25, 1.5, 1.75, 2, 2.5} followed by every integer 3..64.
std::vector<double> default_orders();

// Per-step RDP of the subsampled Gaussian mechanism at each order.
// Throws ConfigError for sigma <= 0, q outside (0, 1] or any order <= 1.
RdpCurve rdp_subsampled_gaussian(double sampling_rate, double noise_multiplier,
                                 std::span<const double> orders);

RdpCurve compose(const RdpCurve& curve, std::int64_t steps);

struct EpsilonResult {
  PrivacyBudget budget;
  double order = 0.0;  // order attaining the minimum
};

EpsilonResult to_epsilon(const RdpCurve& curve, double delta);

// Convenience: to_epsilon(compose(rdp(q, sigma, default orders), steps), delta).
EpsilonResult epsilon_after(double sampling_rate, double noise_multiplier,
                            std::int64_t steps, double delta);

struct Calibration {
  double noise_multiplier = 0.0;
  double epsilon = 0.0;
  double order = 0.0;
};

inline constexpr double kMinNoiseMultiplier = 1e-2;
inline constexpr double kMaxNoiseMultiplier = 1e4;

// Smallest-found sigma whose epsilon lies in [target * (1 - tol), target].
// Never returns a sigma whose epsilon exceeds the target. Throws
// NumericError when the target is unreachable inside
// [kMinNoiseMultiplier, kMaxNoiseMultiplier].
Calibration calibrate_sigma(double target_epsilon, double sampling_rate,
                            std::int64_t steps, double delta,
                            double tolerance = 1e-3);

// Running ledger for one training run. The per-step curve is computed once.
class PrivacyAccountant {
 public:
  PrivacyAccountant(double sampling_rate, double noise_multiplier,
                    double delta);

  void step(std::int64_t n = 1) { steps_ += n; }
  std::int64_t steps() const { return steps_; }
  EpsilonResult spent() const;
  // Epsilon the run would have spent after `steps` steps.
  EpsilonResult spent_after(std::int64_t steps) const;

 private:
  RdpCurve per_step_;
  double delta_;
  std::int64_t steps_ = 0;
};

}  // namespace dpcxr::accounting

#endif  // DPCXR_ACCOUNTANT_HPP_
