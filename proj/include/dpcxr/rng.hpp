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

#ifndef DPCXR_RNG_HPP_
#define DPCXR_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace dpcxr {

// Stream tags for substream derivation. Values are part of the on-disk
// reproducibility contract; do not renumber.
enum class Stream : std::uint64_t {
  kSampling = 1,
  kNoise = 2,
  kInit = 3,
  kCohort = 4,
  kSplit = 5,
  kBootstrap = 6,
  kAugment = 7,
  kShuffle = 8,
  kPredictionSim = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed for substream `index` of stream `tag` under `master`.
// Each component is folded through splitmix64, so adjacent indices give
// unrelated engines and the result never depends on call order.
std::uint64_t derive_seed(std::uint64_t master, Stream tag,
                          std::uint64_t index = 0, std::uint64_t sub = 0);

// mt19937_64 plus portable uniform/normal transforms. The std::*_distribution
// classes are implementation-defined, so they are not used anywhere that
// feeds reports or checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, Stream tag, std::uint64_t index = 0,
      std::uint64_t sub = 0)
      : engine_(derive_seed(master, tag, index, sub)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by rejection, exactly uniform.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the Marsaglia polar method.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpcxr

#endif  // DPCXR_RNG_HPP_
