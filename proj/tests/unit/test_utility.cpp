/*
 * Copyright 2026 The spectrum-lease Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spectrum_lease/random.hpp"
#include "spectrum_lease/utility.hpp"

namespace sl = spectrum_lease;

TEST(AlphaFair, LogarithmicValues) {
  const auto u = sl::alpha_fair(1.0);
  EXPECT_EQ(u.value(1.0), 0.0);
  EXPECT_DOUBLE_EQ(u.gradient(2.0), 0.5);
  EXPECT_TRUE(u.is_proportional_fair());
  for (double r : {0.01, 0.3, 1.0, 7.0, 1e4}) {
    EXPECT_NEAR(r * u.gradient(r), 1.0, 1e-15);
  }
}

TEST(AlphaFair, DelayUtility) {
  const auto u = sl::alpha_fair(2.0);
  for (double r : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(u.value(r), -1.0 / r, 1e-15);
    EXPECT_NEAR(u.gradient(r), 1.0 / (r * r), 1e-15);
  }
}

TEST(AlphaFair, InverseRoundTrip) {
  const auto u = sl::alpha_fair(0.8);
  EXPECT_NEAR(u.inverse_gradient_at(u.gradient(3.7)), 3.7, 1e-9 * 3.7);
  for (double alpha : {0.3, 0.8, 1.0, 2.0, 4.5}) {
    const auto v = sl::alpha_fair(alpha);
    for (double r = 1e-3; r < 1e4; r *= 3.1) {
      EXPECT_NEAR(v.inverse_gradient_at(v.gradient(r)), r, 1e-9 * r) << "alpha " << alpha;
    }
  }
}

TEST(AlphaFair, LinearHasNoInverse) {
  const auto u = sl::alpha_fair(0.0);
  EXPECT_TRUE(u.is_linear());
  EXPECT_FALSE(u.invertible());
  EXPECT_EQ(u.gradient(5.0), 1.0);
  EXPECT_THROW(u.inverse_gradient_at(1.0), std::domain_error);
  EXPECT_THROW(sl::alpha_fair(-0.5), std::domain_error);
}

TEST(AlphaFair, IncreasingAndConcave) {
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    const auto u = sl::alpha_fair(alpha);
    double prev = u.gradient(1e-3);
    for (double r = 2e-3; r < 1e3; r *= 1.3) {
      const double g = u.gradient(r);
      EXPECT_GT(g, 0.0);
      EXPECT_LE(g, prev);
      prev = g;
    }
  }
}

TEST(ScaleCondition, HoldsForAlphaFairOnRandomGrids) {
  sl::RandomStream rng(17);
  for (double alpha : {0.0, 0.4, 0.8, 1.0, 2.0, 3.3}) {
    const auto u = sl::alpha_fair(alpha);
    EXPECT_TRUE(u.satisfies_scale_condition);
    std::vector<sl::ScaleProbe> grid;
    for (int i = 0; i < 200; ++i) {
      grid.push_back({std::exp(8.0 * rng.uniform() - 4.0), std::exp(8.0 * rng.uniform() - 4.0),
                      1u + static_cast<unsigned>(64.0 * rng.uniform())});
    }
    EXPECT_TRUE(sl::check_scale_condition(u, grid));
    for (const auto& p : grid) {
      // ratio equals (r2/r1)^alpha independent of n
      EXPECT_NEAR(u.gradient(p.r1) / u.gradient(p.r2), std::pow(p.r2 / p.r1, alpha),
                  1e-12 * std::pow(p.r2 / p.r1, alpha));
    }
  }
}

TEST(ScaleCondition, FailsForExponentialAndDiminishingReturn) {
  EXPECT_FALSE(sl::check_scale_condition(sl::exponential_utility()));
  EXPECT_FALSE(sl::check_scale_condition(sl::diminishing_return_utility()));
  EXPECT_FALSE(sl::exponential_utility().satisfies_scale_condition);
  EXPECT_THROW(sl::require_scale_condition(sl::exponential_utility()), std::domain_error);
}

TEST(CustomUtility, AcceptsScaleInvariantRejectsOthers) {
  const auto ok = sl::custom_utility(
      "sqrt", [](double r) { return 2.0 * std::sqrt(r); }, [](double r) { return 1.0 / std::sqrt(r); },
      [](double y) { return 1.0 / (y * y); });
  EXPECT_TRUE(ok.satisfies_scale_condition);
  EXPECT_THROW(sl::custom_utility(
                   "exp", [](double r) { return -std::expm1(-r); }, [](double r) { return std::exp(-r); },
                   [](double y) { return -std::log(y); }),
               std::invalid_argument);
  EXPECT_THROW(sl::custom_utility("partial", [](double r) { return r; }, nullptr, nullptr), std::invalid_argument);
}
