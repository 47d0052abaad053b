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

#ifndef DPCXR_NADAM_HPP_
#define DPCXR_NADAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace dpcxr::nn {

// NAdam with the momentum-decay schedule
//   mu_t = beta1 * (1 - 0.5 * 0.96^(t * momentum_decay)).
struct NAdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double momentum_decay = 4e-3;
  double eps = 1e-8;
  double mu_product = 1.0;

  explicit NAdamState(std::size_t dim = 0, double lr = 5e-4)
      : m(dim, 0.0), v(dim, 0.0), learning_rate(lr) {}
};

void nadam_step(std::span<double> params, std::span<const double> grad,
                NAdamState& state);

}  // namespace dpcxr::nn

#endif  // DPCXR_NADAM_HPP_
