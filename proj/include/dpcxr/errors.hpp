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

#ifndef DPCXR_ERRORS_HPP_
#define DPCXR_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpcxr {

// Invalid configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or other numerical breakdown. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The privacy accountant crossed the configured target. CLI exit code 3.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::int64_t step, double epsilon, double target)
      : std::runtime_error("privacy budget exceeded at step " +
                           std::to_string(step) + ": epsilon " +
                           std::to_string(epsilon) + " > target " +
                           std::to_string(target)),
        step_(step),
        epsilon_(epsilon) {}

  std::int64_t step() const { return step_; }
  double epsilon() const { return epsilon_; }

 private:
  std::int64_t step_;
  double epsilon_;
};

// A metric that is mathematically undefined for its input, e.g. AUROC on a
// single-class label vector.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed files on disk (checkpoints, manifests, metadata CSV, PGM).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpcxr

#endif  // DPCXR_ERRORS_HPP_
