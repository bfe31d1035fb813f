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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spectrum_lease/channel.hpp"
#include "spectrum_lease/dra.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/traffic.hpp"
#include "spectrum_lease/utility.hpp"

namespace sl = spectrum_lease;

namespace {

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    w = std::max(w, std::abs(a[i] - b[i]) / std::abs(b[i]));
  }
  return w;
}

sl::UserSet random_users(std::uint64_t seed, std::size_t index, std::size_t max_users) {
  sl::RandomStream rng(seed, sl::StreamTag::validation, index);
  return sl::sample_user_set(sl::TrafficModel::uniform(1, max_users), sl::ChannelParams{}, rng);
}

}  // namespace

TEST(FixedPoint, SingleUserGetsMeanRate) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({420.0});
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto p = sl::solve_fixed_point(users, sl::alpha_fair(alpha), ch);
    EXPECT_NEAR(p.unit_throughputs[0], sl::rate_distribution(ch, 420.0).mean(), 1e-9);
  }
}

TEST(FixedPoint, TwoColocatedUsersShareMaxOfRates) {
  const sl::ChannelParams ch;
  const double d = 600.0;
  const auto users = sl::UserSet::at_distances({d, d});
  const auto p = sl::solve_fixed_point(users, sl::alpha_fair(1.0), ch);
  sl::RandomStream rng(99);
  const int n = 1000000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = std::max(sl::instantaneous_rate(ch, d, rng.exponential()), sl::instantaneous_rate(ch, d, rng.exponential()));
    s += m;
    s2 += m * m;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(p.unit_throughputs[0], p.unit_throughputs[1], 1e-10);
  EXPECT_NEAR(p.unit_throughputs[0], mean / 2.0, 3.0 * se / 2.0);
}

TEST(FixedPoint, ResidualThetaAndPositivity) {
  const sl::ChannelParams ch;
  for (std::size_t i = 0; i < 12; ++i) {
    const auto users = random_users(5, i, 8);
    for (double alpha : {0.0, 0.8, 1.0, 2.0}) {
      const auto u = sl::alpha_fair(alpha);
      const auto p = sl::solve_fixed_point(users, u, ch);
      EXPECT_LE(p.residual, 1e-8);
      for (double r : p.unit_throughputs) {
        EXPECT_GT(r, 0.0);
      }
      // residual recomputed with the scalar Phi
      for (std::size_t k = 0; k < users.count(); ++k) {
        EXPECT_NEAR(sl::phi(users, u, p.unit_throughputs, k, ch), p.unit_throughputs[k], 2e-8);
      }
      if (alpha == 1.0) {
        EXPECT_NEAR(p.theta, static_cast<double>(users.count()), 1e-9);
      }
    }
  }
}

TEST(FixedPoint, UniqueFromRandomStarts) {
  const sl::ChannelParams ch;
  sl::RandomStream rng(123);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto users = random_users(8, i, 8);
    for (double alpha : {0.8, 2.0}) {
      const auto u = sl::alpha_fair(alpha);
      const auto base = sl::solve_fixed_point(users, u, ch);
      for (int r = 0; r < 10; ++r) {
        sl::FixedPointOptions fo;
        for (std::size_t k = 0; k < users.count(); ++k) {
          fo.initial.push_back(std::exp(-4.0 + 5.0 * rng.uniform()));
        }
        EXPECT_LE(max_rel(sl::solve_fixed_point(users, u, ch, fo).unit_throughputs, base.unit_throughputs), 1e-6);
      }
    }
  }
}

TEST(FixedPoint, LinearInScCount) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({150.0, 480.0, 730.0, 990.0});
  for (double alpha : {0.8, 1.0, 2.0}) {
    const auto u = sl::alpha_fair(alpha);
    const auto unit = sl::solve_fixed_point(users, u, ch);
    for (double n : {2.0, 5.0, 10.0}) {
      sl::FixedPointOptions fo;
      fo.sc_count = n;
      EXPECT_LE(max_rel(sl::solve_fixed_point(users, u, ch, fo).unit_throughputs, unit.unit_throughputs), 1e-8);
    }
  }
}

TEST(FixedPoint, RejectsEmptyAndUnscalableInputs) {
  const sl::ChannelParams ch;
  EXPECT_THROW(sl::solve_fixed_point(sl::UserSet{}, sl::alpha_fair(1.0), ch), std::invalid_argument);
  EXPECT_THROW(sl::solve_fixed_point(sl::UserSet::at_distances({100.0}), sl::exponential_utility(), ch),
               std::domain_error);
}

TEST(Phi, DecreasingInOwnThroughputAndSymmetric) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({200.0, 500.0, 900.0});
  const auto u = sl::alpha_fair(1.0);
  std::vector<double> r{0.5, 0.3, 0.1};
  for (std::size_t k = 0; k < 3; ++k) {
    auto bumped = r;
    bumped[k] *= 1.1;
    EXPECT_LT(sl::phi(users, u, bumped, k, ch), sl::phi(users, u, r, k, ch));
  }
  const auto pair = sl::UserSet::at_distances({400.0, 400.0});
  const std::vector<double> eq{0.2, 0.2};
  EXPECT_NEAR(sl::phi(pair, u, eq, 0, ch), sl::phi(pair, u, eq, 1, ch), 1e-14);
  const auto solo = sl::UserSet::at_distances({321.0});
  EXPECT_NEAR(sl::phi(solo, u, std::vector<double>{7.0}, 0, ch), sl::rate_distribution(ch, 321.0).mean(), 1e-10);
}

TEST(AllocateSlot, SingleUserAndMaxRate) {
  sl::ThroughputProfile one;
  one.unit_throughputs = {0.4};
  sl::RateMatrix rates(1, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    rates(0, i) = 0.1 * static_cast<double>(i);
  }
  for (auto w : sl::allocate_slot(sl::alpha_fair(1.0), one, rates)) {
    EXPECT_EQ(w, 0u);
  }
  sl::ThroughputProfile three;
  three.unit_throughputs = {0.9, 0.1, 0.5};
  sl::RandomStream rng(4);
  sl::RateMatrix r3(3, 50);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 50; ++i) {
      r3(k, i) = rng.exponential();
    }
  }
  const auto winners = sl::allocate_slot(sl::alpha_fair(0.0), three, r3);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (r3(k, i) > r3(best, i)) {
        best = k;
      }
    }
    EXPECT_EQ(winners[i], best);
  }
}

TEST(AllocateSlot, MatchesBruteForceArgmaxAndTiesGoLow) {
  sl::RandomStream rng(31);
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto u = sl::alpha_fair(alpha);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t users = 1 + static_cast<std::size_t>(8 * rng.uniform());
      const std::size_t scs = 1 + static_cast<std::size_t>(6 * rng.uniform());
      sl::ThroughputProfile p;
      for (std::size_t k = 0; k < users; ++k) {
        p.unit_throughputs.push_back(0.05 + rng.uniform());
      }
      sl::RateMatrix r(users, scs);
      for (std::size_t k = 0; k < users; ++k) {
        for (std::size_t i = 0; i < scs; ++i) {
          r(k, i) = 3.0 * rng.uniform();
        }
      }
      const auto winners = sl::allocate_slot(u, p, r);
      const double n = static_cast<double>(scs);
      for (std::size_t i = 0; i < scs; ++i) {
        const double chosen = u.gradient(n * p.unit_throughputs[winners[i]]) * r(winners[i], i);
        for (std::size_t k = 0; k < users; ++k) {
          EXPECT_GE(chosen, u.gradient(n * p.unit_throughputs[k]) * r(k, i));
        }
      }
    }
  }
  sl::ThroughputProfile tie;
  tie.unit_throughputs = {0.3, 0.3};
  sl::RateMatrix r(2, 1);
  r(0, 0) = 1.0;
  r(1, 0) = 1.0;
  EXPECT_EQ(sl::allocate_slot(sl::alpha_fair(1.0), tie, r)[0], 0u);
}

TEST(AllocateSlot, ScaleInvariantUnderLogUtility) {
  sl::RandomStream rng(77);
  const auto u = sl::alpha_fair(1.0);
  sl::ThroughputProfile p;
  p.unit_throughputs = {0.2, 0.6, 0.35, 0.9};
  for (int trial = 0; trial < 100; ++trial) {
    sl::RateMatrix r(4, 3);
    sl::RateMatrix scaled(4, 3);
    const double c = std::exp(4.0 * rng.uniform() - 2.0);
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < 3; ++i) {
        r(k, i) = rng.exponential();
        scaled(k, i) = c * r(k, i);
      }
    }
    EXPECT_EQ(sl::allocate_slot(u, p, r), sl::allocate_slot(u, p, scaled));
  }
}

TEST(SimulateSession, MatchesFixedPointFourUsers) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({250.0, 500.0, 750.0, 1000.0});
  const auto u = sl::alpha_fair(1.0);
  const auto p = sl::solve_fixed_point(users, u, ch);
  sl::RandomStream rng(2);
  const std::size_t n = 8;
  const auto trace = sl::simulate_session(users, u, ch, p, n, 100000, rng, true);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(trace.throughputs[k], n * p.unit_throughputs[k], 0.01 * n * p.unit_throughputs[k]);
  }
  // exactly one winner per SC per slot, and the accounting adds up
  EXPECT_EQ(trace.winners.size(), 100000u * n);
  std::uint64_t wins = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    wins += trace.wins[k];
    total += trace.throughputs[k] * 100000.0;
  }
  EXPECT_EQ(wins, 100000u * n);
  EXPECT_NEAR(trace.total_awarded, total, 1e-9 * total);
}

TEST(SimulateSession, ZeroScsAndDoubling) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({300.0, 800.0});
  const auto u = sl::alpha_fair(1.0);
  const auto p = sl::solve_fixed_point(users, u, ch);
  sl::RandomStream rng0(1);
  const auto none = sl::simulate_session(users, u, ch, p, 0, 10, rng0);
  for (double t : none.throughputs) {
    EXPECT_EQ(t, 0.0);
  }
  sl::RandomStream a(10);
  sl::RandomStream b(11);
  const auto t4 = sl::simulate_session(users, u, ch, p, 4, 50000, a);
  const auto t8 = sl::simulate_session(users, u, ch, p, 8, 50000, b);
  for (std::size_t k = 0; k < 2; ++k) {
    const double se4 = sl::throughput_standard_error(t4, k);
    const double se8 = sl::throughput_standard_error(t8, k);
    EXPECT_NEAR(t8.throughputs[k], 2.0 * t4.throughputs[k], 4.0 * std::sqrt(se8 * se8 + 4.0 * se4 * se4));
  }
  EXPECT_THROW(sl::simulate_session(users, u, ch, p, 1, 0, a), std::invalid_argument);
}

TEST(SystemUtility, EmptyLogIdentityAndConcavity) {
  const auto u = sl::alpha_fair(1.0);
  EXPECT_EQ(sl::system_utility(u, sl::ThroughputProfile{}, 5.0), 0.0);
  sl::ThroughputProfile p;
  p.unit_throughputs = {0.2, 0.5, 1.3};
  const double logs = std::log(0.2) + std::log(0.5) + std::log(1.3);
  for (double n : {1.0, 3.0, 17.0}) {
    EXPECT_NEAR(sl::system_utility(u, p, n), 3.0 * std::log(n) + logs, 1e-12);
  }
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    const auto v = sl::alpha_fair(alpha);
    for (int n = 2; n < 64; ++n) {
      const double second = sl::system_utility(v, p, n + 1) - 2.0 * sl::system_utility(v, p, n) +
                            sl::system_utility(v, p, n - 1);
      EXPECT_LE(second, 1e-12);
      EXPECT_GT(sl::system_utility(v, p, n + 1), sl::system_utility(v, p, n));
    }
  }
  EXPECT_THROW(sl::system_utility(u, p, 0.0), std::domain_error);
  EXPECT_THROW(sl::system_utility(sl::alpha_fair(0.5), p, -1.0), std::domain_error);
  EXPECT_EQ(sl::system_utility(sl::alpha_fair(0.5), p, 0.0), 0.0);
}

// Two users, one SC, fading discretized to three equiprobable rate levels per
// user (9 joint states). Every deterministic stationary rule (2^9 of them) is
// enumerated and scored by sum_k log E[throughput_k]. The weighted-argmax rule
// family, scanned over the weight ratio, must contain the best enumerated rule;
// the rule built from the continuous-fading fixed point must be within the
// discretization gap of it. The gap is the utility difference between the
// continuous fixed point's throughputs and the best discrete rule's.
TEST(PolicyOptimality, TinyInstanceExhaustiveSearch) {
  const sl::ChannelParams ch;
  const auto users = sl::UserSet::at_distances({350.0, 850.0});
  const auto u = sl::alpha_fair(1.0);
  const auto p = sl::solve_fixed_point(users, u, ch);
  std::vector<std::vector<double>> levels(2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto rd = sl::rate_distribution(ch, users.positions[k].norm());
    levels[k] = {rd.quantile(1.0 / 6.0), rd.quantile(0.5), rd.quantile(5.0 / 6.0)};
  }
  auto score = [&](auto winner_of) {
    double t0 = 0.0;
    double t1 = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (winner_of(a, b) == 0) {
          t0 += levels[0][a] / 9.0;
        } else {
          t1 += levels[1][b] / 9.0;
        }
      }
    }
    return (t0 > 0.0 && t1 > 0.0) ? std::log(t0) + std::log(t1) : -std::numeric_limits<double>::infinity();
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 512; ++mask) {
    best = std::max(best, score([&](int a, int b) { return (mask >> (3 * a + b)) & 1; }));
  }
  double best_scan = -std::numeric_limits<double>::infinity();
  for (double lr = -6.0; lr <= 6.0; lr += 1e-3) {
    const double ratio = std::exp(lr);  // weight of user 1 over user 0
    best_scan = std::max(best_scan, score([&](int a, int b) { return ratio * levels[1][b] > levels[0][a] ? 1 : 0; }));
  }
  EXPECT_NEAR(best_scan, best, 1e-12);
  const double w0 = u.gradient(p.unit_throughputs[0]);
  const double w1 = u.gradient(p.unit_throughputs[1]);
  const double policy = score([&](int a, int b) { return w1 * levels[1][b] > w0 * levels[0][a] ? 1 : 0; });
  const double continuous = std::log(p.unit_throughputs[0]) + std::log(p.unit_throughputs[1]);
  const double gap = std::abs(continuous - best);
  EXPECT_LE(policy, best + 1e-12);
  EXPECT_GE(policy, best - gap);
}
