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

#include "dpcxr/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dpcxr/errors.hpp"

namespace dpcxr::accounting {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (lo == kNegInf) return hi;
  return std::log1p(std::exp(lo - hi)) + hi;
}

double log_sub(double a, double b) {
  if (a < b) throw NumericError("log-space subtraction went negative");
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  const double d = std::expm1(a - b);
  if (!std::isfinite(d)) return a;
  return std::log(d) + b;
}

// log(erfc(x)), accurate far into the upper tail where erfc underflows.
double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  const double r = 1.0 / (x * x);
  const double series =
      1.0 + r * (-0.5 + r * (0.75 + r * (-1.875 + r * 6.5625)));
  return -x * x - std::log(x) - 0.5 * std::log(std::numbers::pi) +
         std::log(series);
}

double log_a_integer(double q, double sigma, int alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double lg_alpha = std::lgamma(alpha + 1.0);
  double log_a = kNegInf;
  for (int i = 0; i <= alpha; ++i) {
    const double log_binom =
        lg_alpha - std::lgamma(i + 1.0) - std::lgamma(alpha - i + 1.0);
    const double s = log_binom + i * log_q + (alpha - i) * log_1mq +
                     (static_cast<double>(i) * i - i) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, s);
  }
  return log_a;
}

double log_a_fractional(double q, double sigma, double alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double two_s2 = 2.0 * sigma * sigma;
  const double sqrt2_sigma = std::numbers::sqrt2 * sigma;

  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  // Generalised binomial coefficient C(alpha, i) tracked as log|c| and sign.
  double log_coef = 0.0;
  bool coef_positive = true;
  for (int i = 0;; ++i) {
    if (i > 0) {
      const double factor = (alpha - i + 1.0) / i;
      log_coef += std::log(std::abs(factor));
      if (factor < 0) coef_positive = !coef_positive;
    }
    const double j = alpha - i;
    const double log_t0 = log_coef + i * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + i * log_1mq;
    const double log_e0 =
        std::log(0.5) + log_erfc((i - z0) / sqrt2_sigma);
    const double log_e1 =
        std::log(0.5) + log_erfc((z0 - j) / sqrt2_sigma);
    const double log_s0 =
        log_t0 + (static_cast<double>(i) * i - i) / two_s2 + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / two_s2 + log_e1;
    if (coef_positive) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30.0) break;
    if (i > 100000) throw NumericError("fractional-order RDP series diverged");
  }
  return log_add(log_a0, log_a1);
}

double rdp_at(double q, double sigma, double alpha) {
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  const double log_a = (alpha == std::floor(alpha) && alpha < 1e6)
                           ? log_a_integer(q, sigma, static_cast<int>(alpha))
                           : log_a_fractional(q, sigma, alpha);
  // log(A) can round to a tiny negative number at very large sigma.
  return std::max(0.0, log_a / (alpha - 1.0));
}

}  // namespace

void PrivacyBudget::validate() const {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("delta must lie in (0, 1)");
}

RdpCurve::RdpCurve(std::vector<double> orders, std::vector<double> values)
    : orders_(std::move(orders)), values_(std::move(values)) {
  if (orders_.size() != values_.size())
    throw ConfigError("RDP curve: orders and values differ in length");
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    if (!(orders_[i] > 1.0)) throw ConfigError("RDP order must be > 1");
    if (i > 0 && !(orders_[i] > orders_[i - 1]))
      throw ConfigError("RDP orders must be strictly increasing");
    if (!(values_[i] >= 0.0)) throw ConfigError("RDP values must be >= 0");
  }
}

RdpCurve& RdpCurve::operator+=(const RdpCurve& other) {
  if (orders_ != other.orders_)
    throw ConfigError("cannot add RDP curves over different orders");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void DpSgdConfig::validate() const {
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0))
    throw ConfigError("sampling_rate must lie in (0, 1]");
  if (!(noise_multiplier >= 0.0))
    throw ConfigError("noise_multiplier must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(target_delta > 0.0 && target_delta < 1.0))
    throw ConfigError("target_delta must lie in (0, 1)");
}

std::vector<double> default_orders() {
  std::vector<double> orders = {1.25, 1.5, 1.75, 2.0, 2.5};
  for (int a = 3; a <= 64; ++a) orders.push_back(a);
  return orders;
}

RdpCurve rdp_subsampled_gaussian(double sampling_rate, double noise_multiplier,
                                 std::span<const double> orders) {
  if (!(noise_multiplier > 0.0))
    throw ConfigError("noise multiplier must be > 0 (sigma = 0 has infinite "
                      "privacy loss)");
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0))
    throw ConfigError("sampling rate must lie in (0, 1]");
  std::vector<double> values;
  values.reserve(orders.size());
  for (double alpha : orders) {
    if (!(alpha > 1.0)) throw ConfigError("RDP order must be > 1");
    values.push_back(rdp_at(sampling_rate, noise_multiplier, alpha));
  }
  return RdpCurve({orders.begin(), orders.end()}, std::move(values));
}

RdpCurve compose(const RdpCurve& curve, std::int64_t steps) {
  if (steps < 1) throw ConfigError("compose: steps must be >= 1");
  std::vector<double> values = curve.values();
  for (double& v : values) v *= static_cast<double>(steps);
  return RdpCurve(curve.orders(), std::move(values));
}

EpsilonResult to_epsilon(const RdpCurve& curve, double delta) {
  if (curve.empty()) throw ConfigError("to_epsilon: empty RDP curve");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("to_epsilon: delta must lie in (0, 1)");
  const double log_delta = std::log(delta);
  EpsilonResult best;
  best.budget.epsilon = std::numeric_limits<double>::infinity();
  best.budget.delta = delta;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double a = curve.orders()[i];
    const double eps = curve.values()[i] - (log_delta + std::log(a)) / (a - 1.0) +
                       std::log((a - 1.0) / a);
    if (eps < best.budget.epsilon) {
      best.budget.epsilon = eps;
      best.order = a;
    }
  }
  best.budget.epsilon = std::max(0.0, best.budget.epsilon);
  return best;
}

EpsilonResult epsilon_after(double sampling_rate, double noise_multiplier,
                            std::int64_t steps, double delta) {
  const auto orders = default_orders();
  return to_epsilon(
      compose(rdp_subsampled_gaussian(sampling_rate, noise_multiplier, orders),
              steps),
      delta);
}

Calibration calibrate_sigma(double target_epsilon, double sampling_rate,
                            std::int64_t steps, double delta,
                            double tolerance) {
  if (!(target_epsilon > 0.0))
    throw ConfigError("calibrate_sigma: target epsilon must be > 0");
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw ConfigError("calibrate_sigma: tolerance must lie in (0, 1)");
  auto eps_at = [&](double sigma) {
    return epsilon_after(sampling_rate, sigma, steps, delta);
  };

  double lo = kMinNoiseMultiplier;
  double hi = kMaxNoiseMultiplier;
  EpsilonResult at_hi = eps_at(hi);
  if (at_hi.budget.epsilon > target_epsilon)
    throw NumericError("target epsilon " + std::to_string(target_epsilon) +
                       " unreachable: sigma would exceed " +
                       std::to_string(kMaxNoiseMultiplier));
  const EpsilonResult at_lo = eps_at(lo);
  if (at_lo.budget.epsilon <= target_epsilon) {
    if (at_lo.budget.epsilon >= target_epsilon * (1.0 - tolerance))
      return {lo, at_lo.budget.epsilon, at_lo.order};
    throw NumericError("target epsilon " + std::to_string(target_epsilon) +
                       " unreachable: sigma would fall below " +
                       std::to_string(kMinNoiseMultiplier));
  }

  // Invariant: eps(lo) > target >= eps(hi). Bisect in log-space.
  for (int iter = 0; iter < 200; ++iter) {
    if (at_hi.budget.epsilon >= target_epsilon * (1.0 - tolerance))
      return {hi, at_hi.budget.epsilon, at_hi.order};
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    const EpsilonResult at_mid = eps_at(mid);
    if (at_mid.budget.epsilon > target_epsilon) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = at_mid;
    }
  }
  throw NumericError("calibrate_sigma did not converge for target epsilon " +
                     std::to_string(target_epsilon));
}

PrivacyAccountant::PrivacyAccountant(double sampling_rate,
                                     double noise_multiplier, double delta)
    : delta_(delta) {
  const auto orders = default_orders();
  if (noise_multiplier == 0.0) {
    // Mechanism disabled: every order carries infinite loss.
    per_step_ = RdpCurve(orders, std::vector<double>(
                                     orders.size(),
                                     std::numeric_limits<double>::infinity()));
  } else {
    per_step_ =
        rdp_subsampled_gaussian(sampling_rate, noise_multiplier, orders);
  }
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("accountant: delta must lie in (0, 1)");
}

EpsilonResult PrivacyAccountant::spent() const { return spent_after(steps_); }

EpsilonResult PrivacyAccountant::spent_after(std::int64_t steps) const {
  if (steps == 0) return {{0.0, delta_}, 0.0};
  return to_epsilon(compose(per_step_, steps), delta_);
}

}  // namespace dpcxr::accounting
