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

#include "dpcxr/nadam.hpp"

#include <cmath>

#include "dpcxr/errors.hpp"

namespace dpcxr::nn {

void nadam_step(std::span<double> params, std::span<const double> grad,
                NAdamState& s) {
  if (params.size() != grad.size() || s.m.size() != params.size() ||
      s.v.size() != params.size())
    throw ConfigError("nadam_step: dimension mismatch");
  s.step += 1;
  const double t = static_cast<double>(s.step);
  const double mu = s.beta1 * (1.0 - 0.5 * std::pow(0.96, t * s.momentum_decay));
  const double mu_next =
      s.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * s.momentum_decay));
  s.mu_product *= mu;
  const double mu_product_next = s.mu_product * mu_next;
  const double bias_correction2 = 1.0 - std::pow(s.beta2, t);
  const double grad_coef = s.learning_rate * (1.0 - mu) / (1.0 - s.mu_product);
  const double momentum_coef = s.learning_rate * mu_next / (1.0 - mu_product_next);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double denom = std::sqrt(s.v[i] / bias_correction2) + s.eps;
    params[i] -= grad_coef * g / denom;
    params[i] -= momentum_coef * s.m[i] / denom;
  }
}

}  // namespace dpcxr::nn
