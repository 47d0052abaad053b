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

// Serial reference kernels against their OpenMP counterparts.

#include <omp.h>

#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "dpcxr/bootstrap.hpp"
#include "dpcxr/dp_sgd.hpp"
#include "dpcxr/gradients.hpp"
#include "dpcxr/metrics.hpp"
#include "dpcxr/model.hpp"

namespace {

using namespace dpcxr;

struct Fixture {
  nn::Model model{nn::ModelConfig::desk_scale()};
  std::vector<Tensor> images;
  std::vector<std::uint8_t> targets;
  std::vector<std::size_t> batch;
  std::vector<double> weights = std::vector<double>(8, 1.0);

  explicit Fixture(std::size_t n) {
    model.init(1);
    Rng rng(2);
    for (std::size_t i = 0; i < n; ++i) {
      Tensor t(model.config().input_shape());
      for (auto& v : t.values()) v = rng.uniform();
      images.push_back(std::move(t));
      for (int l = 0; l < 8; ++l) targets.push_back(rng.bernoulli(0.3));
      batch.push_back(i);
    }
  }
  nn::LabeledView view() const { return {images, targets, 8}; }
};

void BM_PerSampleSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        nn::per_sample_backward_serial(f.model, f.view(), f.batch, f.weights));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PerSampleParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        nn::per_sample_backward(f.model, f.view(), f.batch, f.weights));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PrivatizeDesk(benchmark::State& state) {
  Fixture f(16);
  const auto grads =
      nn::per_sample_backward(f.model, f.view(), f.batch, f.weights);
  std::uint64_t step = 0;
  for (auto _ : state) {
    Rng noise(0, Stream::kNoise, step++);
    benchmark::DoNotOptimize(dp::privatize(grads, 1.5, 1.0, 16.0, noise));
  }
}

void BM_Bootstrap(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const std::size_t n = 500;
  Rng rng(3);
  std::vector<double> s(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 4 == 0;
    s[i] = rng.normal(y[i] ? 1.0 : 0.0, 1.0);
  }
  const auto stat = [&](std::span<const std::size_t> rows) {
    std::vector<double> ss;
    std::vector<std::uint8_t> yy;
    for (auto r : rows) {
      ss.push_back(s[r]);
      yy.push_back(y[r]);
    }
    return eval::auroc(ss, yy);
  };
  for (auto _ : state)
    benchmark::DoNotOptimize(eval::bootstrap_scalar(n, stat, 200, 1));
}

BENCHMARK(BM_PerSampleSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PerSampleParallel)
    ->Args({16, 1})
    ->Args({16, 2})
    ->Args({16, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrivatizeDesk)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Bootstrap)
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
