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

#ifndef SPECTRUM_LEASE_LEASING_HPP
#define SPECTRUM_LEASE_LEASING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectrum_lease/channel.hpp"
#include "spectrum_lease/dra.hpp"
#include "spectrum_lease/numeric.hpp"
#include "spectrum_lease/prices.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/traffic.hpp"
#include "spectrum_lease/utility.hpp"

namespace spectrum_lease {

/// U'(n), with the limit +infinity at n = 0 for utilities singular there.
inline double gradient_at_sc(const Utility& u, double sc_count) {
  if (sc_count <= 0.0) {
    return u.singular_at_zero() ? std::numeric_limits<double>::infinity() : u.gradient(0.0);
  }
  return u.gradient(sc_count);
}

/// Optimal continuous on-demand request for a session with utility metric
/// theta, price c_s and n_r reserved SCs:
///   n_s = max(inverse U'(c_s / (u_g theta)) - n_r, 0).
/// A linear utility requests everything up to the SC cap when
/// c_s < u_g theta, nothing otherwise.
inline double optimal_on_demand(double theta, double price, double reserved, const Utility& u,
                                const PriceModel& prices) {
  if (!(theta > 0.0)) {
    return 0.0;
  }
  if (!(price > 0.0)) {
    throw std::domain_error("on-demand price must be positive");
  }
  if (!u.invertible()) {
    return price < prices.utility_scale * theta ? std::max(prices.sc_cap - reserved, 0.0) : 0.0;
  }
  return std::max(u.inverse_gradient_at(price / (prices.utility_scale * theta)) - reserved, 0.0);
}

/// Optimal surplus of a session given n_r reserved SCs, using the continuous
/// on-demand request:
///   u_g G(X, n_r)                                            if c_s > u_g theta U'(n_r)
///   c_s n_r - c_s n + u_g sum_k U(n r_k(1)),  n = inverse U'(c_s / (u_g theta))   otherwise.
inline double session_surplus(const ThroughputProfile& profile, double price, double reserved, const Utility& u,
                              const PriceModel& prices) {
  if (profile.unit_throughputs.empty()) {
    return 0.0;
  }
  if (reserved < 0.0) {
    throw std::domain_error("reserved SC count must be non-negative");
  }
  const double theta = profile.theta;
  const double ug = prices.utility_scale;
  if (price > ug * theta * gradient_at_sc(u, reserved)) {
    return ug * system_utility(u, profile, reserved);
  }
  if (!u.invertible()) {
    const double total = std::max(prices.sc_cap, reserved);
    return -price * (total - reserved) + ug * system_utility(u, profile, total);
  }
  const double total = u.inverse_gradient_at(price / (ug * theta));
  return price * reserved - price * total + ug * system_utility(u, profile, total);
}

/// Realized quantities of one session.
struct SessionOutcome {
  double theta = 0.0;
  double price = 0.0;
  double on_demand = 0.0;        // n_s
  double surplus = 0.0;          // Q
  double on_demand_spend = 0.0;  // c_s n_s
};

inline SessionOutcome evaluate_session(const ThroughputProfile& profile, double price, double reserved,
                                       const Utility& u, const PriceModel& prices) {
  SessionOutcome out;
  out.theta = profile.unit_throughputs.empty() ? 0.0 : profile.theta;
  out.price = price;
  out.on_demand = optimal_on_demand(out.theta, price, reserved, u, prices);
  out.on_demand_spend = price * out.on_demand;
  out.surplus = session_surplus(profile, price, reserved, u, prices);
  return out;
}

/// Per-sample reservation gradient
///   -c_r + integral_0^(u_g theta U'(n_r)) (1 - F_cs(eta)) d eta,
/// i.e. -c_r + E_cs[min(c_s, u_g theta U'(n_r))].
inline double sample_gradient(double theta, double reserved, const Utility& u, const PriceModel& prices) {
  if (!(theta > 0.0)) {
    return -prices.reservation_price;
  }
  const double limit = prices.utility_scale * theta * gradient_at_sc(u, reserved);
  return -prices.reservation_price + prices.on_demand.survival_integral(limit);
}

enum class ReservationMethod { no_discount, sgd, pf_root };

inline const char* to_string(ReservationMethod m) {
  switch (m) {
    case ReservationMethod::no_discount:
      return "no_discount";
    case ReservationMethod::sgd:
      return "sgd";
    case ReservationMethod::pf_root:
      return "pf_root";
  }
  return "unknown";
}

struct SgdStep {
  std::size_t iteration = 0;  // l, 1-based
  double reserved = 0.0;      // n_r[l]
  double theta = 0.0;         // theta of the user set sampled at step l
  double gradient = 0.0;      // Delta at (theta, n_r[l])
};

/// Advance-reservation decision.
struct LeasePlan {
  double reserved = 0.0;          // continuous n_r
  long long reserved_rounded = 0;
  ReservationMethod method = ReservationMethod::sgd;
  std::string reason;
  std::vector<SgdStep> history;
  Estimate gradient_at_solution;  // mean per-sample gradient at the returned n_r
};

inline long long round_sc(double x) { return static_cast<long long>(std::llround(x)); }

struct SgdOptions {
  std::size_t iterations = 20000;  // L
  double step0 = 10.0;             // eta[l] = step0 / sqrt(l)
  std::optional<double> initial;   // default u_g E[K] / E[c_s]
  bool pf_fast_path = true;        // theta = K for the logarithmic utility
  bool record_history = true;
  unsigned workers = 1;
  std::size_t batch = 256;         // theta samples prefetched per parallel batch
};

/// Theta of a user set: K under the logarithmic utility when the fast path is
/// enabled, otherwise from the throughput fixed point.
inline double session_theta(const UserSet& users, const Utility& u, const ChannelParams& channel, bool pf_fast_path) {
  if (users.empty()) {
    return 0.0;
  }
  if (pf_fast_path && u.is_proportional_fair()) {
    return static_cast<double>(users.count());
  }
  return solve_fixed_point(users, u, channel).theta;
}

/// Theta of the user set drawn for SGD step l (1-based) under a root seed.
using ThetaSource = std::function<std::vector<double>(std::size_t first, std::size_t count)>;

inline ThetaSource make_theta_source(const TrafficModel& traffic, const Utility& u, const ChannelParams& channel,
                                     std::uint64_t seed, StreamTag tag, bool pf_fast_path, unsigned workers) {
  return [=](std::size_t first, std::size_t count) {
    std::vector<double> out(count);
    parallel_for(count, workers, [&](std::size_t i) {
      RandomStream rng(seed, tag, first + i);
      const auto users = sample_user_set(traffic, channel, rng);
      out[i] = session_theta(users, u, channel, pf_fast_path);
    });
    return out;
  };
}

inline bool no_reservation_discount(const PriceModel& prices) {
  return prices.on_demand.mean() <= prices.reservation_price;
}

inline LeasePlan no_discount_plan() {
  LeasePlan plan;
  plan.method = ReservationMethod::no_discount;
  plan.reason = "mean on-demand price does not exceed the reservation price; reserving nothing is optimal";
  return plan;
}

/// Projected stochastic gradient ascent on the period surplus J(n_r):
///   n_r[l+1] = clamp(n_r[l] + step0 / sqrt(l) * Delta(X_l), 0, sc_cap)
/// with a fresh user set X_l per step. Returns the running average of
/// n_r[1..L].
inline LeasePlan sgd_reservation(const ThetaSource& thetas, const Utility& u, const PriceModel& prices,
                                 double mean_users, const SgdOptions& opts) {
  if (opts.iterations == 0) {
    throw std::invalid_argument("SGD needs at least one iteration");
  }
  if (no_reservation_discount(prices)) {
    return no_discount_plan();
  }
  LeasePlan plan;
  plan.method = ReservationMethod::sgd;
  plan.reason = "stochastic gradient on the expected period surplus";
  double n = opts.initial.value_or(prices.utility_scale * mean_users / prices.on_demand.mean());
  n = std::clamp(n, 0.0, prices.sc_cap);
  const std::size_t steps = opts.iterations;
  if (opts.record_history) {
    plan.history.reserve(steps);
  }
  std::vector<double> theta_log;
  theta_log.reserve(steps);
  double sum = n;
  std::vector<double> batch;
  std::size_t batch_start = 1;
  for (std::size_t l = 1; l < steps; ++l) {
    if (l - batch_start >= batch.size()) {
      batch_start = l;
      batch = thetas(l, std::min(opts.batch, steps - l));
    }
    const double theta = batch[l - batch_start];
    theta_log.push_back(theta);
    const double grad = sample_gradient(theta, n, u, prices);
    if (opts.record_history) {
      plan.history.push_back({l, n, theta, grad});
    }
    n = std::clamp(n + opts.step0 / std::sqrt(static_cast<double>(l)) * grad, 0.0, prices.sc_cap);
    sum += n;
  }
  if (opts.record_history) {
    plan.history.push_back({steps, n, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()});
  }
  plan.reserved = sum / static_cast<double>(steps);
  plan.reserved_rounded = round_sc(plan.reserved);
  std::vector<double> grads(theta_log.size());
  for (std::size_t i = 0; i < theta_log.size(); ++i) {
    grads[i] = sample_gradient(theta_log[i], plan.reserved, u, prices);
  }
  plan.gradient_at_solution = estimate(grads);
  return plan;
}

inline LeasePlan sgd_reservation(const TrafficModel& traffic, const Utility& u, const ChannelParams& channel,
                                 const PriceModel& prices, std::uint64_t seed, const SgdOptions& opts = {}) {
  require_scale_condition(u);
  const auto source = make_theta_source(traffic, u, channel, seed, StreamTag::sgd, opts.pf_fast_path, opts.workers);
  return sgd_reservation(source, u, prices, traffic.mean(), opts);
}

/// Right-hand side of the logarithmic-utility reservation equation
///   c_r n = integral_0^(u_g K_up) (1 - F_cs(eta / n)) (1 - F_K(eta / u_g)) d eta,
/// evaluated exactly: 1 - F_K is constant on each [u_g j, u_g (j+1)).
inline double pf_reservation_rhs(double reserved, const TrafficModel& traffic, const PriceModel& prices) {
  const double ug = prices.utility_scale;
  const auto& pmf = traffic.pmf();
  double above = 1.0;  // Pr(K > j)
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < pmf.size(); ++j) {
    above -= pmf[j];
    if (above <= 0.0) {
      break;
    }
    const double lo = prices.on_demand.survival_integral(ug * static_cast<double>(j) / reserved);
    const double hi = prices.on_demand.survival_integral(ug * static_cast<double>(j + 1) / reserved);
    total += above * reserved * (hi - lo);
  }
  return total;
}

/// Optimal reservation under the logarithmic utility. Depends only on the
/// distribution of K and of c_s, never on user locations.
inline double pf_reservation_root(const TrafficModel& traffic, const PriceModel& prices) {
  if (no_reservation_discount(prices)) {
    return 0.0;
  }
  const double lo = 1e-6;
  const double hi = prices.utility_scale * static_cast<double>(traffic.k_up()) / prices.reservation_price;
  if (!(hi > lo)) {
    return 0.0;
  }
  auto gap = [&](double n) { return pf_reservation_rhs(n, traffic, prices) - prices.reservation_price * n; };
  const double g_lo = gap(lo);
  if (g_lo <= 0.0) {
    // Pr(K > 0) E[c_s] <= c_r: the empty sessions remove the discount.
    return 0.0;
  }
  const double g_hi = gap(hi);
  if (g_hi > 0.0) {
    std::ostringstream oss;
    oss.precision(9);
    oss << "reservation root bracket failed: gap(" << lo << ") = " << g_lo << ", gap(" << hi << ") = " << g_hi;
    throw std::domain_error(oss.str());
  }
  return bisect(gap, lo, hi, 1e-14);
}

inline LeasePlan pf_reservation_plan(const TrafficModel& traffic, const PriceModel& prices) {
  if (no_reservation_discount(prices)) {
    return no_discount_plan();
  }
  LeasePlan plan;
  plan.method = ReservationMethod::pf_root;
  plan.reason = "closed-form root for the logarithmic utility";
  plan.reserved = pf_reservation_root(traffic, prices);
  plan.reserved_rounded = round_sc(plan.reserved);
  return plan;
}

/// E[theta] over user sets: exactly E[K] for the logarithmic utility,
/// otherwise a Monte Carlo average over `sessions` sampled sets.
inline Estimate estimate_mean_theta(const TrafficModel& traffic, const Utility& u, const ChannelParams& channel,
                                    std::size_t sessions, std::uint64_t seed, unsigned workers, bool pf_fast_path = true) {
  if (pf_fast_path && u.is_proportional_fair()) {
    return {traffic.mean(), 0.0, 0};
  }
  const auto thetas = make_theta_source(traffic, u, channel, seed, StreamTag::theta_estimate, false, workers)(0, sessions);
  return estimate(thetas);
}

/// Reservation-only benchmark: inverse U'(c_r / (u_g E[theta])).
inline double baseline_reservation_only(double mean_theta, const Utility& u, const PriceModel& prices) {
  if (!u.invertible()) {
    throw std::domain_error("reservation-only benchmark needs an invertible derivative (alpha > 0)");
  }
  if (!(mean_theta > 0.0)) {
    return 0.0;
  }
  return u.inverse_gradient_at(prices.reservation_price / (prices.utility_scale * mean_theta));
}

/// On-demand-only benchmark: the on-demand rule with nothing reserved.
inline double baseline_on_demand_only(double theta, double price, const Utility& u, const PriceModel& prices) {
  if (!u.invertible()) {
    throw std::domain_error("on-demand-only benchmark needs an invertible derivative (alpha > 0)");
  }
  return optimal_on_demand(theta, price, 0.0, u, prices);
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_LEASING_HPP
