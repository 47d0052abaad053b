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

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "dpcxr/errors.hpp"
#include "dpcxr/layers.hpp"
#include "dpcxr/loss.hpp"
#include "dpcxr/rng.hpp"

namespace dpcxr::nn {
namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

Tensor random_tensor(const Shape& s, Rng& rng, double min_abs = 0.0) {
  Tensor t(s);
  for (auto& v : t.values()) {
    do {
      v = rng.normal();
    } while (std::abs(v) < min_abs);
  }
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks d(sum(r * layer(x)))/dx and /dparams against central differences.
void check_layer(const Layer& layer, const Shape& in_shape, std::uint64_t seed,
                 double min_abs_input = 0.0) {
  Rng rng(seed);
  std::vector<double> params(layer.param_count());
  layer.init(params, rng);
  for (auto& p : params) p += 0.1 * rng.normal();  // break symmetric inits
  Tensor x = random_tensor(in_shape, rng, min_abs_input);
  const Tensor r = random_tensor(layer.output_shape(in_shape), rng);

  Cache cache;
  layer.forward(params, x, &cache);
  std::vector<double> gp(params.size(), 0.0);
  const Tensor gx = layer.backward(params, cache, r, gp);

  auto objective = [&](const std::vector<double>& p, const Tensor& in) {
    return dot(r, layer.forward(p, in, nullptr));
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += kStep;
    xm[i] -= kStep;
    const double fd = (objective(params, xp) - objective(params, xm)) / (2 * kStep);
    ASSERT_LE(rel_err(gx[i], fd), kTolerance)
        << layer.name() << " input " << i << " analytic " << gx[i] << " fd "
        << fd << " seed " << seed;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto pp = params, pm = params;
    pp[i] += kStep;
    pm[i] -= kStep;
    const double fd = (objective(pp, x) - objective(pm, x)) / (2 * kStep);
    ASSERT_LE(rel_err(gp[i], fd), kTolerance)
        << layer.name() << " param " << i << " analytic " << gp[i] << " fd "
        << fd << " seed " << seed;
  }
}

class SeededShapes : public testing::TestWithParam<int> {
 protected:
  std::uint64_t seed() const { return 1000 + GetParam(); }
  std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + rng.below(hi - lo + 1);
  }
};

TEST_P(SeededShapes, Conv2d) {
  Rng rng(seed());
  const std::size_t in = pick(rng, 1, 3), out = pick(rng, 1, 3);
  const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 2);
  const std::size_t pad = pick(rng, 0, k / 2 + 1);
  const std::size_t h = pick(rng, k, 6), w = pick(rng, k, 6);
  const bool bias = rng.bernoulli(0.5);
  Conv2d conv("conv", in, out, k, stride, pad, bias);
  check_layer(conv, {in, h, w}, seed());
}

TEST_P(SeededShapes, Linear) {
  Rng rng(seed());
  const std::size_t in = pick(rng, 1, 12), out = pick(rng, 1, 8);
  Linear lin("linear", in, out);
  check_layer(lin, {in, 1, 1}, seed());
}

TEST_P(SeededShapes, GroupNorm) {
  Rng rng(seed());
  const std::size_t groups = pick(rng, 1, 3);
  const std::size_t ch = groups * pick(rng, 1, 3);
  GroupNorm gn("gn", ch, groups);
  check_layer(gn, {ch, pick(rng, 1, 4), pick(rng, 1, 4)}, seed());
}

TEST_P(SeededShapes, Mish) {
  Rng rng(seed());
  ActivationLayer act("mish", Activation::kMish);
  check_layer(act, {pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, seed());
}

TEST_P(SeededShapes, Relu) {
  Rng rng(seed());
  ActivationLayer act("relu", Activation::kRelu);
  // Keep inputs away from the kink where the derivative is undefined.
  check_layer(act, {pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, seed(),
              1e-2);
}

TEST_P(SeededShapes, MaxPool) {
  Rng rng(seed());
  MaxPool2d pool("pool", 3, 2, 1);
  check_layer(pool, {pick(rng, 1, 3), pick(rng, 2, 6), pick(rng, 2, 6)}, seed());
}

TEST_P(SeededShapes, GlobalAvgPool) {
  Rng rng(seed());
  GlobalAvgPool pool("gap");
  check_layer(pool, {pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)}, seed());
}

TEST_P(SeededShapes, BasicBlock) {
  Rng rng(seed());
  const std::size_t groups = pick(rng, 1, 2);
  const std::size_t in = groups * pick(rng, 1, 2);
  const std::size_t out = groups * pick(rng, 1, 2);
  const std::size_t stride = pick(rng, 1, 2);
  const auto act = rng.bernoulli(0.5) ? Activation::kMish : Activation::kRelu;
  BasicBlock block("block", in, out, stride, groups, act);
  check_layer(block, {in, pick(rng, 2, 4), pick(rng, 2, 4)}, seed());
}

TEST_P(SeededShapes, SigmoidWeightedBce) {
  Rng rng(seed());
  const std::size_t L = pick(rng, 1, 8);
  std::vector<double> logits(L), w(L);
  std::vector<std::uint8_t> y(L);
  for (std::size_t l = 0; l < L; ++l) {
    logits[l] = 3.0 * rng.normal();
    w[l] = rng.uniform(0.2, 8.0);
    y[l] = rng.bernoulli(0.4) ? 1 : 0;
  }
  auto loss = [&](const std::vector<double>& z) {
    std::vector<double> p(L);
    for (std::size_t l = 0; l < L; ++l) p[l] = sigmoid(z[l]);
    return weighted_bce_sample(p, y, w);
  };
  std::vector<double> g(L);
  weighted_bce_logit_grad(logits, y, w, g);
  for (std::size_t l = 0; l < L; ++l) {
    auto zp = logits, zm = logits;
    zp[l] += kStep;
    zm[l] -= kStep;
    const double fd = (loss(zp) - loss(zm)) / (2 * kStep);
    ASSERT_LE(rel_err(g[l], fd), kTolerance) << "label " << l;
  }
}

INSTANTIATE_TEST_SUITE_P(HundredSeeds, SeededShapes, testing::Range(0, 100));

TEST(Mish, KnownValues) {
  EXPECT_EQ(mish(0.0), 0.0);
  EXPECT_NEAR(mish(20.0), 20.0, 1e-6);
  EXPECT_NEAR(mish(1.0), std::tanh(std::log1p(std::exp(1.0))), 1e-15);
  for (double x : {-30.0, -5.0, -1.0, 0.5, 3.0, 19.9})
    EXPECT_NEAR(mish(x), x * std::tanh(softplus(x)), 1e-14 * (1 + std::abs(x)));
}

TEST(Mish, DerivativeMatchesFiniteDifferences) {
  for (double x : {-2.0, -0.5, 0.3, 4.0}) {
    const double h = 1e-6;
    const double fd = (mish(x + h) - mish(x - h)) / (2 * h);
    EXPECT_NEAR(mish_derivative(x), fd, 1e-6 * std::abs(fd));
  }
}

TEST(Softplus, StableForLargeMagnitudes) {
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1e-300);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
}

TEST(GroupNorm, ConstantInputGivesZeros) {
  GroupNorm gn("gn", 4, 2);
  std::vector<double> p(gn.param_count());
  Rng rng(1);
  gn.init(p, rng);
  const Tensor y = gn.forward(p, Tensor({4, 3, 3}, 7.0), nullptr);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(GroupNorm, AffineShiftAndStatistics) {
  GroupNorm gn("gn", 4, 2);
  std::vector<double> p(gn.param_count());
  Rng rng(2);
  gn.init(p, rng);
  const Tensor x = random_tensor({4, 3, 3}, rng);
  const Tensor y0 = gn.forward(p, x, nullptr);
  for (std::size_t g = 0; g < 2; ++g) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = g * 18; i < (g + 1) * 18; ++i) m += y0[i];
    m /= 18.0;
    for (std::size_t i = g * 18; i < (g + 1) * 18; ++i)
      v += (y0[i] - m) * (y0[i] - m);
    v /= 18.0;
    EXPECT_LE(std::abs(m), 1e-5);
    EXPECT_LE(std::abs(v - 1.0), 1e-4);
  }
  for (std::size_t c = 0; c < 4; ++c) p[4 + c] = 5.0;  // beta
  const Tensor y = gn.forward(p, x, nullptr);
  for (std::size_t g = 0; g < 2; ++g) {
    double m = 0.0;
    for (std::size_t i = g * 18; i < (g + 1) * 18; ++i) m += y[i];
    EXPECT_NEAR(m / 18.0, 5.0, 1e-5);
  }
}

TEST(GroupNorm, ReferenceShapeFiniteDifferences) {
  // 4 channels x 2 x 2 in 2 groups, checked at 1e-5.
  GroupNorm gn("gn", 4, 2);
  Rng rng(3);
  std::vector<double> p(gn.param_count());
  gn.init(p, rng);
  for (auto& v : p) v += 0.3 * rng.normal();
  const Tensor x = random_tensor({4, 2, 2}, rng);
  const Tensor r = random_tensor({4, 2, 2}, rng);
  Cache cache;
  gn.forward(p, x, &cache);
  std::vector<double> gp(p.size(), 0.0);
  const Tensor gx = gn.backward(p, cache, r, gp);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += kStep;
    xm[i] -= kStep;
    const double fd =
        (dot(r, gn.forward(p, xp, nullptr)) - dot(r, gn.forward(p, xm, nullptr))) /
        (2 * kStep);
    EXPECT_LE(rel_err(gx[i], fd), 1e-5);
  }
}

TEST(Conv2d, RejectsBadShapes) {
  Conv2d conv("c", 2, 3, 3, 1, 0, false);
  EXPECT_THROW(conv.output_shape({1, 5, 5}), ConfigError);
  EXPECT_THROW(conv.output_shape({2, 2, 2}), ConfigError);
  EXPECT_THROW(GroupNorm("g", 6, 4), ConfigError);
}

TEST(Conv2d, HandComputedOutput) {
  // 1 -> 1 channel, 2x2 kernel of ones, no padding, on a 3x3 ramp.
  Conv2d conv("c", 1, 1, 2, 1, 0, true);
  std::vector<double> p = {1, 1, 1, 1, 0.5};
  Tensor x({1, 3, 3}, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor y = conv.forward(p, x, nullptr);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(y[0], 8.5);
  EXPECT_EQ(y[1], 12.5);
  EXPECT_EQ(y[2], 20.5);
  EXPECT_EQ(y[3], 24.5);
}

TEST(Loss, ClosedForms) {
  const Tensor half({2, 2}, 0.5);
  const std::vector<std::uint8_t> y = {1, 0, 0, 1};
  const std::vector<double> ones = {1.0, 1.0};
  EXPECT_NEAR(weighted_bce(half, y, ones).mean, std::log(2.0), 1e-15);

  const Tensor perfect({2, 2}, std::vector<double>{1, 0, 0, 1});
  EXPECT_LE(weighted_bce(perfect, y, ones).mean,
            2 * std::abs(std::log1p(-1e-7)));

  // Hand evaluation with w = [3, 1].
  const Tensor p({2, 2}, std::vector<double>{0.8, 0.3, 0.4, 0.9});
  const std::vector<double> w = {3.0, 1.0};
  const double s0 = (-3.0 * std::log(0.8) - std::log(1 - 0.3)) / 2.0;
  const double s1 = (-std::log(1 - 0.4) - 1.0 * std::log(0.9)) / 2.0;
  const auto r = weighted_bce(p, y, w);
  EXPECT_NEAR(r.per_sample[0], s0, 1e-12);
  EXPECT_NEAR(r.per_sample[1], s1, 1e-12);
  EXPECT_NEAR(r.mean, 0.5 * (s0 + s1), 1e-12);
}

TEST(Loss, InverseFrequencyWeights) {
  const std::vector<std::uint8_t> t = {1, 0, 0, 1, 0, 1, 0, 1};
  const auto w = inverse_frequency_weights(t, 2);
  EXPECT_DOUBLE_EQ(w[0], 3.0);      // 1 positive, 3 negatives
  EXPECT_DOUBLE_EQ(w[1], 1.0 / 3);  // 3 positives, 1 negative
  const std::vector<std::uint8_t> single = {0, 1, 0, 1};
  EXPECT_THROW(inverse_frequency_weights(single, 2), ConfigError);
}

}  // namespace
}  // namespace dpcxr::nn
