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
#include <vector>

#include <gtest/gtest.h>

#include "dpcxr/accountant.hpp"
#include "dpcxr/errors.hpp"

namespace dpcxr::accounting {
namespace {

double rdp_at(double q, double sigma, double order) {
  const std::vector<double> orders = {order};
  return rdp_subsampled_gaussian(q, sigma, orders).values()[0];
}

void expect_rel(double actual, double expected, double rel) {
  EXPECT_NEAR(actual, expected, rel * std::abs(expected))
      << "actual " << actual << " expected " << expected;
}

TEST(Rdp, FullBatchIsGaussianClosedForm) {
  EXPECT_DOUBLE_EQ(rdp_at(1.0, 1.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(rdp_at(1.0, 2.0, 8.0), 1.0);
  const auto orders = default_orders();
  for (double sigma : {0.3, 0.7, 1.0, 2.5, 10.0}) {
    const auto c = rdp_subsampled_gaussian(1.0, sigma, orders);
    for (std::size_t i = 0; i < orders.size(); ++i)
      EXPECT_NEAR(c.values()[i], orders[i] / (2 * sigma * sigma), 1e-12);
  }
}

// Reference values from an independent RDP accountant implementation,
// evaluated offline.
TEST(Rdp, MatchesReferenceAccountant) {
  struct Case {
    double q, sigma, order, expected;
  };
  const Case cases[] = {
      {0.01, 1.5, 16, 0.0004956978613634659},
      {0.01, 1.5, 2.5, 7.018007035480032e-05},
      {0.01, 1.5, 1.25, 3.4805801716392604e-05},
      {0.01, 1.5, 1.75, 4.8886104537577744e-05},
      {8e-4, 0.6, 4, 2.447497815115855e-05},
      {8e-4, 4.6, 54, 8.379533702841662e-07},
      {0.5, 1.0, 3, 0.6968891185980441},
      {0.5, 1.0, 2.5, 0.5105603809236542},
      {0.2, 0.8, 10, 6.024239124802753},
      {0.001, 20, 64, 8.011251480244579e-08},
  };
  for (const auto& c : cases) {
    SCOPED_TRACE(testing::Message() << "q=" << c.q << " sigma=" << c.sigma
                                    << " alpha=" << c.order);
    expect_rel(rdp_at(c.q, c.sigma, c.order), c.expected, 1e-6);
  }
}

TEST(Rdp, NonNegativeAndNondecreasingInOrder) {
  const auto orders = default_orders();
  for (double q : {1e-4, 8e-4, 0.01, 0.1, 0.5, 1.0})
    for (double sigma : {0.5, 0.8, 1.0, 2.0, 5.0}) {
      const auto c = rdp_subsampled_gaussian(q, sigma, orders);
      for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_GE(c.values()[i], 0.0);
        if (i > 0) EXPECT_GE(c.values()[i], c.values()[i - 1] * (1 - 1e-12));
      }
    }
}

TEST(Rdp, RejectsInvalidArguments) {
  const std::vector<double> ok = {2.0};
  EXPECT_THROW(rdp_subsampled_gaussian(0.1, 0.0, ok), ConfigError);
  EXPECT_THROW(rdp_subsampled_gaussian(0.0, 1.0, ok), ConfigError);
  EXPECT_THROW(rdp_subsampled_gaussian(1.5, 1.0, ok), ConfigError);
  const std::vector<double> bad = {1.0};
  EXPECT_THROW(rdp_subsampled_gaussian(0.1, 1.0, bad), ConfigError);
}

TEST(Compose, IdentityLinearityAdditivity) {
  const RdpCurve c({2.0, 3.0}, {0.1, 0.2});
  EXPECT_EQ(compose(c, 1).values(), c.values());
  const auto ten = compose(c, 10);
  EXPECT_NEAR(ten.values()[0], 1.0, 1e-15);
  EXPECT_NEAR(ten.values()[1], 2.0, 1e-15);
  const auto real = rdp_subsampled_gaussian(0.01, 1.1, default_orders());
  const auto ab = compose(real, 7) + compose(real, 5);
  const auto sum = compose(real, 12);
  for (std::size_t i = 0; i < sum.size(); ++i)
    EXPECT_NEAR(ab.values()[i], sum.values()[i], 1e-15 * sum.values()[i]);
}

TEST(Compose, MismatchedOrdersRejected) {
  RdpCurve a({2.0}, {0.1});
  const RdpCurve b({3.0}, {0.1});
  EXPECT_THROW(a += b, ConfigError);
  EXPECT_THROW(compose(a, 0), ConfigError);
}

TEST(ToEpsilon, MatchesReferenceAccountant) {
  struct Case {
    double q, sigma;
    std::int64_t steps;
    double delta, eps, order;
  };
  const Case cases[] = {
      {8e-4, 0.6, 187500, 6e-6, 7.84719524009589, 4},
      {0.08, 1.0, 260, 1e-4, 8.764531366892122, 3},
      {0.01, 1.1, 1000, 1e-5, 1.725290818044953, 9},
  };
  for (const auto& c : cases) {
    const auto r = epsilon_after(c.q, c.sigma, c.steps, c.delta);
    expect_rel(r.budget.epsilon, c.eps, 1e-6);
    EXPECT_EQ(r.order, c.order);
  }
}

TEST(ToEpsilon, ZeroCurveApproachesZeroAsDeltaGrowsToOne) {
  const auto orders = default_orders();
  const RdpCurve zero(orders, std::vector<double>(orders.size(), 0.0));
  const double e1 = to_epsilon(zero, 1e-5).budget.epsilon;
  const double e2 = to_epsilon(zero, 0.5).budget.epsilon;
  const double e3 = to_epsilon(zero, 1 - 1e-9).budget.epsilon;
  EXPECT_GT(e1, e2);
  EXPECT_GE(e2, e3);
  EXPECT_LT(e3, 1e-6);
  EXPECT_THROW(to_epsilon(RdpCurve(), 1e-5), ConfigError);
}

TEST(ToEpsilon, MonotoneInSigmaStepsAndRate) {
  double prev = INFINITY;
  for (int i = 0; i < 12; ++i) {
    const double e =
        epsilon_after(8e-4, 0.5 + 0.25 * i, 187500, 6e-6).budget.epsilon;
    EXPECT_LT(e, prev);
    prev = e;
  }
  prev = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double e =
        epsilon_after(8e-4, 1.0, 1000 * (std::int64_t{1} << i), 6e-6)
            .budget.epsilon;
    EXPECT_GT(e, prev);
    prev = e;
  }
  prev = 0.0;
  for (int i = 1; i <= 12; ++i) {
    const double e = epsilon_after(1e-4 * i, 1.0, 10000, 6e-6).budget.epsilon;
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(Calibrate, RoundTripNeverExceedsTarget) {
  for (double target : {0.29, 0.54, 1.06, 2.04, 4.71, 7.89}) {
    const auto c = calibrate_sigma(target, 8e-4, 187500, 6e-6);
    const double eps = epsilon_after(8e-4, c.noise_multiplier, 187500, 6e-6)
                           .budget.epsilon;
    EXPECT_LE(eps, target);
    EXPECT_GE(eps, 0.999 * target);
    EXPECT_DOUBLE_EQ(eps, c.epsilon);
  }
}

TEST(Calibrate, SigmaMatchesReferenceAccountant) {
  struct Case {
    double target, sigma;
  };
  const Case cases[] = {{0.29, 4.600335379310112}, {0.54, 2.6467833241373544},
                        {1.06, 1.5303696717162851}, {2.04, 0.9954094605184791},
                        {4.71, 0.6897603868965028}, {7.89, 0.599435156935745}};
  for (const auto& c : cases)
    expect_rel(calibrate_sigma(c.target, 8e-4, 187500, 6e-6).noise_multiplier,
               c.sigma, 0.01);
}

TEST(Calibrate, LargerTargetGivesSmallerSigma) {
  double prev = INFINITY;
  for (double t : {0.15, 0.29, 0.54, 1.06, 2.04, 4.71, 7.89, 20.0}) {
    const double s = calibrate_sigma(t, 8e-4, 187500, 6e-6).noise_multiplier;
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Calibrate, UnreachableTargetIsNumericError) {
  EXPECT_THROW(calibrate_sigma(1e-9, 1.0, 1000000, 1e-9), NumericError);
  EXPECT_THROW(calibrate_sigma(-1.0, 0.1, 10, 1e-5), ConfigError);
}

TEST(Accountant, TracksStepsAndMatchesComposition) {
  PrivacyAccountant acc(0.08, 1.0, 1e-4);
  EXPECT_EQ(acc.spent().budget.epsilon, 0.0);
  acc.step(200);
  acc.step(60);
  EXPECT_EQ(acc.steps(), 260);
  const auto direct = to_epsilon(
      compose(rdp_subsampled_gaussian(0.08, 1.0, default_orders()), 260), 1e-4);
  EXPECT_DOUBLE_EQ(acc.spent().budget.epsilon, direct.budget.epsilon);
  EXPECT_DOUBLE_EQ(acc.spent_after(260).budget.epsilon, direct.budget.epsilon);
}

TEST(Accountant, ZeroNoiseIsInfinitelyExpensive) {
  PrivacyAccountant acc(0.1, 0.0, 1e-5);
  acc.step();
  EXPECT_TRUE(std::isinf(acc.spent().budget.epsilon));
}

TEST(Budget, Validation) {
  EXPECT_NO_THROW((PrivacyBudget{1.0, 1e-5}.validate()));
  EXPECT_THROW((PrivacyBudget{-1.0, 1e-5}.validate()), ConfigError);
  EXPECT_THROW((PrivacyBudget{1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((PrivacyBudget{1.0, 1.0}.validate()), ConfigError);
  DpSgdConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.clip_norm = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Orders, DefaultGrid) {
  const auto o = default_orders();
  ASSERT_EQ(o.size(), 67u);
  EXPECT_EQ(o.front(), 1.25);
  EXPECT_EQ(o[4], 2.5);
  EXPECT_EQ(o[5], 3.0);
  EXPECT_EQ(o.back(), 64.0);
}

}  // namespace
}  // namespace dpcxr::accounting
