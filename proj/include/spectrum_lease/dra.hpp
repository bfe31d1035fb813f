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

#ifndef SPECTRUM_LEASE_DRA_HPP
#define SPECTRUM_LEASE_DRA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectrum_lease/channel.hpp"
#include "spectrum_lease/numeric.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/utility.hpp"

namespace spectrum_lease {

/// Optimal per-user average throughputs with one SC, and the session utility
/// metric theta = (1/U'(1)) sum_k r_k U'(r_k) derived from them.
struct ThroughputProfile {
  std::vector<double> unit_throughputs;
  double theta = 0.0;
  double residual = 0.0;
  unsigned iterations = 0;
  bool used_coordinate_fallback = false;

  std::size_t users() const noexcept { return unit_throughputs.size(); }
};

struct FixedPointOptions {
  double sc_count = 1.0;       // solve r_k = n Phi_k(r) for this n
  double tolerance = 1e-8;     // residual <= tolerance * min(1, mean(r))
  unsigned max_iterations = 500;
  double damping = 0.5;
  unsigned stall_window = 25;  // Picard iterations without halving the best residual
  std::vector<double> initial;  // empty: solo mean rates times n
  QuadratureOptions quadrature{1e-12, 1e-14, 30};  // Newton rows use relative_tolerance * 1e3
};

/// The fixed-point iteration ran out of iterations.
class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(double residual, std::vector<double> iterate)
      : std::runtime_error(message(residual, iterate)), residual_(residual), iterate_(std::move(iterate)) {}

  double residual() const noexcept { return residual_; }
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  static std::string message(double residual, const std::vector<double>& iterate) {
    std::ostringstream oss;
    oss.precision(9);
    oss << "throughput fixed point did not converge: residual " << residual << " at iterate [";
    for (std::size_t i = 0; i < iterate.size(); ++i) {
      oss << (i ? ", " : "") << iterate[i];
    }
    oss << "]";
    return oss.str();
  }

  double residual_;
  std::vector<double> iterate_;
};

inline std::vector<double> user_snrs(const UserSet& users, const ChannelParams& channel) {
  std::vector<double> snrs;
  snrs.reserve(users.count());
  for (const auto& p : users.positions) {
    const double d = p.norm();
    check_distance(channel, d);
    snrs.push_back(channel.mean_snr(d));
  }
  return snrs;
}

namespace detail {

/// Phi_k for users with the given mean SNRs and per-user derivative weights
/// U'(r_k). The rate integral is taken in t = eta ln2 / B, where the Rayleigh
/// rate density is e^t / S exp(-(e^t - 1) / S) and the competitor CDF at a
/// scaled rate w eta is 1 - exp(-(e^(w t) - 1) / S').
inline double phi_kernel(std::span<const double> snrs, std::span<const double> gradients, std::size_t k,
                         double bandwidth, const QuadratureOptions& quadrature) {
  const std::size_t count = snrs.size();
  const double snr_k = snrs[k];
  std::vector<double> scale;
  std::vector<double> inv_snr;
  scale.reserve(count);
  inv_snr.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    if (j == k) {
      continue;
    }
    scale.push_back(gradients[k] / gradients[j]);
    inv_snr.push_back(1.0 / snrs[j]);
  }
  const double inv_snr_k = 1.0 / snr_k;
  auto integrand = [&](double t) {
    double value = t * std::exp(t) * inv_snr_k * std::exp(-std::expm1(t) * inv_snr_k);
    for (std::size_t j = 0; j < scale.size() && value > 0.0; ++j) {
      value *= -std::expm1(-std::expm1(scale[j] * t) * inv_snr[j]);
    }
    return value;
  };
  const double t_max = std::log1p(snr_k * 40.0);
  return bandwidth / std::numbers::ln2 * integrate(integrand, 0.0, t_max, quadrature);
}

/// Phi_k together with its partial derivatives with respect to the log
/// policy weights z_j = log U'(r_j), integrated on shared nodes. Entry 0 is
/// Phi_k, entry 1 + j is dPhi_k/dz_j. Phi_k only depends on weight ratios, so
/// dPhi_k/dz_k is minus the sum of the others.
inline std::vector<double> phi_row(std::span<const double> snrs, std::span<const double> log_weights, std::size_t k,
                                   double bandwidth, double relative_tolerance) {
  const std::size_t count = snrs.size();
  const std::size_t others = count - 1;
  std::vector<double> scale;
  std::vector<double> inv_snr;
  std::vector<std::size_t> index;
  for (std::size_t j = 0; j < count; ++j) {
    if (j == k) {
      continue;
    }
    scale.push_back(std::exp(log_weights[k] - log_weights[j]));
    inv_snr.push_back(1.0 / snrs[j]);
    index.push_back(j);
  }
  const double inv_snr_k = 1.0 / snrs[k];
  std::vector<double> cdf(others);
  std::vector<double> dcdf(others);
  std::vector<double> suffix(others + 1);
  auto integrand = [&](double t, std::span<double> out) {
    const double base = t * std::exp(t - std::expm1(t) * inv_snr_k) * inv_snr_k;
    for (std::size_t m = 0; m < others; ++m) {
      const double x = std::expm1(scale[m] * t) * inv_snr[m];
      cdf[m] = -std::expm1(-x);
      // d/dc F(c t) at c = scale[m]
      dcdf[m] = x < 700.0 ? t * (x + inv_snr[m]) * std::exp(-x) : 0.0;
    }
    suffix[others] = 1.0;
    for (std::size_t m = others; m-- > 0;) {
      suffix[m] = suffix[m + 1] * cdf[m];
    }
    out[0] = base * suffix[0];
    double prefix = 1.0;
    for (std::size_t m = 0; m < others; ++m) {
      out[1 + m] = -base * scale[m] * dcdf[m] * prefix * suffix[m + 1];
      prefix *= cdf[m];
    }
  };
  const double t_max = std::log1p(snrs[k] * 40.0);
  const auto raw = integrate_vector(integrand, count, 0.0, t_max, relative_tolerance);
  const double c = bandwidth / std::numbers::ln2;
  std::vector<double> row(count + 1, 0.0);
  row[0] = c * raw[0];
  double self = 0.0;
  for (std::size_t m = 0; m < others; ++m) {
    row[1 + index[m]] = c * raw[1 + m];
    self -= c * raw[1 + m];
  }
  row[1 + k] = self;
  return row;
}

inline std::vector<double> gradients_at(const Utility& u, std::span<const double> r) {
  std::vector<double> g(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (!(r[j] > 0.0)) {
      throw std::domain_error("throughput vector must be strictly positive");
    }
    g[j] = u.gradient(r[j]);
    if (!(g[j] > 0.0) || !std::isfinite(g[j])) {
      throw std::domain_error("utility derivative must be positive and finite at every throughput");
    }
  }
  return g;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

inline double mean_of(std::span<const double> r) {
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

}  // namespace detail

/// Phi_k(r) = integral of eta prod_{k' != k} F_k'(U'(r_k)/U'(r_k') eta) f_k(eta) d eta:
/// the per-SC throughput user k obtains under the weighted-argmax policy when
/// the policy weights are U'(r).
inline double phi(const UserSet& users, const Utility& u, std::span<const double> r, std::size_t k,
                  const ChannelParams& channel, const QuadratureOptions& quadrature = {1e-12, 1e-14, 30}) {
  if (r.size() != users.count() || k >= users.count()) {
    throw std::invalid_argument("phi: throughput vector or user index does not match the user set");
  }
  const auto snrs = user_snrs(users, channel);
  const auto grads = detail::gradients_at(u, r);
  return detail::phi_kernel(snrs, grads, k, channel.bandwidth_per_sc, quadrature);
}

inline std::vector<double> phi_all(std::span<const double> snrs, const Utility& u, std::span<const double> r,
                                   double bandwidth, const QuadratureOptions& quadrature) {
  const auto grads = detail::gradients_at(u, r);
  std::vector<double> out(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    out[k] = detail::phi_kernel(snrs, grads, k, bandwidth, quadrature);
  }
  return out;
}

/// (1/U'(1)) sum_k r_k U'(r_k); equals K for the logarithmic utility.
inline double theta_of(const Utility& u, std::span<const double> unit_throughputs) {
  double s = 0.0;
  for (double r : unit_throughputs) {
    s += r * u.gradient(r);
  }
  return s / u.gradient(1.0);
}

/// Solves r_k = n Phi_k(r) for k = 1..K, warm started at the solo mean
/// rates. The primary method is Newton's method on log r with the Jacobian
/// integrated alongside Phi. If a Newton step cannot reduce the residual the
/// solver switches to damped Picard iteration and, when that stalls, to
/// Gauss-Seidel sweeps that bisect each coordinate (r_k - n Phi_k(r) is
/// increasing in r_k).
inline ThroughputProfile solve_fixed_point(const UserSet& users, const Utility& u, const ChannelParams& channel,
                                           const FixedPointOptions& opts = {}) {
  if (users.empty()) {
    throw std::invalid_argument("solve_fixed_point: user set is empty");
  }
  require_scale_condition(u);
  if (!(opts.sc_count > 0.0)) {
    throw std::domain_error("solve_fixed_point: SC count must be positive");
  }
  const double n = opts.sc_count;
  const double bw = channel.bandwidth_per_sc;
  const auto snrs = user_snrs(users, channel);
  const std::size_t count = snrs.size();
  // d log U'(r) / d log r; constant for every utility satisfying the scale condition.
  const double elasticity = std::log(u.gradient(2.0) / u.gradient(1.0)) / std::numbers::ln2;

  std::vector<double> solo(count);
  for (std::size_t k = 0; k < count; ++k) {
    solo[k] = n * RateDistribution(snrs[k], bw).mean();
  }
  std::vector<double> r = opts.initial.empty() ? solo : opts.initial;
  if (r.size() != count) {
    throw std::invalid_argument("solve_fixed_point: initial iterate has the wrong size");
  }

  ThroughputProfile profile;
  auto converged = [&](double residual, std::span<const double> x) {
    return residual <= opts.tolerance * std::min(1.0, detail::mean_of(x));
  };
  auto finish = [&](std::vector<double> x, double residual, unsigned iterations) {
    for (double& v : x) {
      v /= n;
    }
    profile.unit_throughputs = std::move(x);
    profile.theta = theta_of(u, profile.unit_throughputs);
    profile.residual = residual / n;
    profile.iterations = iterations;
    return profile;
  };

  struct Evaluation {
    std::vector<double> mapped;     // n Phi(r)
    std::vector<double> jacobian;   // row-major d(n Phi_k)/dz_j
    double residual = 0.0;          // max |r - n Phi(r)|
    double log_residual = 0.0;      // max |log r - log n Phi(r)|
  };
  auto evaluate = [&](std::span<const double> x) {
    Evaluation e;
    e.mapped.resize(count);
    e.jacobian.resize(count * count);
    std::vector<double> z(count);
    for (std::size_t j = 0; j < count; ++j) {
      z[j] = std::log(u.gradient(x[j]));
    }
    for (std::size_t k = 0; k < count; ++k) {
      const auto row = detail::phi_row(snrs, z, k, bw, opts.quadrature.relative_tolerance * 1e3);
      e.mapped[k] = n * row[0];
      for (std::size_t j = 0; j < count; ++j) {
        e.jacobian[k * count + j] = n * row[1 + j];
      }
      e.residual = std::max(e.residual, std::abs(x[k] - e.mapped[k]));
      e.log_residual = std::max(e.log_residual, std::abs(std::log(x[k]) - std::log(e.mapped[k])));
    }
    return e;
  };

  unsigned it = 0;
  double residual = std::numeric_limits<double>::infinity();
  {
    Evaluation current = evaluate(r);
    residual = current.residual;
    while (it < opts.max_iterations) {
      if (converged(current.residual, r)) {
        return finish(std::move(r), current.residual, it);
      }
      ++it;
      // J = I - elasticity * diag(1 / n Phi) * dPhi/dz, in log r coordinates.
      Eigen::MatrixXd jac(count, count);
      Eigen::VectorXd rhs(count);
      for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t j = 0; j < count; ++j) {
          jac(k, j) = (k == j ? 1.0 : 0.0) - elasticity * current.jacobian[k * count + j] / current.mapped[k];
        }
        rhs(k) = std::log(current.mapped[k]) - std::log(r[k]);
      }
      Eigen::VectorXd step = jac.partialPivLu().solve(rhs);
      const double largest = step.cwiseAbs().maxCoeff();
      if (!std::isfinite(largest)) {
        break;
      }
      if (largest > 2.0) {
        step *= 2.0 / largest;
      }
      bool accepted = false;
      for (double s = 1.0; s > 1e-3; s *= 0.5) {
        std::vector<double> trial(count);
        for (std::size_t k = 0; k < count; ++k) {
          trial[k] = r[k] * std::exp(s * step(static_cast<Eigen::Index>(k)));
        }
        Evaluation next = evaluate(trial);
        if (next.log_residual < current.log_residual) {
          r = std::move(trial);
          current = std::move(next);
          residual = current.residual;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        break;
      }
    }
  }

  profile.used_coordinate_fallback = true;
  double best = std::numeric_limits<double>::infinity();
  unsigned last_improvement = it;
  for (; it < opts.max_iterations; ++it) {
    auto mapped = phi_all(snrs, u, r, bw, opts.quadrature);
    for (double& v : mapped) {
      v *= n;
    }
    residual = detail::max_abs_diff(r, mapped);
    if (converged(residual, r)) {
      return finish(std::move(r), residual, it);
    }
    if (residual < 0.5 * best) {
      best = residual;
      last_improvement = it;
    } else if (it - last_improvement >= opts.stall_window) {
      break;
    }
    for (std::size_t k = 0; k < count; ++k) {
      r[k] = (1.0 - opts.damping) * r[k] + opts.damping * mapped[k];
    }
  }

  for (; it < opts.max_iterations; ++it) {
    for (std::size_t k = 0; k < count; ++k) {
      auto gap = [&](double x) {
        std::vector<double> trial = r;
        trial[k] = x;
        const auto grads = detail::gradients_at(u, trial);
        return x - n * detail::phi_kernel(snrs, grads, k, bw, opts.quadrature);
      };
      r[k] = bisect(gap, solo[k] * 1e-12, solo[k], 1e-14);
    }
    auto mapped = phi_all(snrs, u, r, bw, opts.quadrature);
    for (double& v : mapped) {
      v *= n;
    }
    residual = detail::max_abs_diff(r, mapped);
    if (converged(residual, r)) {
      return finish(std::move(r), residual, it + 1);
    }
  }
  throw FixedPointError(residual, r);
}

/// G(X, n) = sum_k U(n r_k(1)); zero for an empty user set.
inline double system_utility(const Utility& u, const ThroughputProfile& profile, double sc_count) {
  if (profile.unit_throughputs.empty()) {
    return 0.0;
  }
  if (sc_count < 0.0 || (sc_count == 0.0 && u.singular_at_zero())) {
    std::ostringstream oss;
    oss << "system utility undefined at " << sc_count << " SCs for " << u.name;
    throw std::domain_error(oss.str());
  }
  double g = 0.0;
  for (double r : profile.unit_throughputs) {
    g += u.value(sc_count * r);
  }
  return g;
}

/// Row-major users x SCs matrix of per-slot rates.
class RateMatrix {
 public:
  RateMatrix(std::size_t users, std::size_t scs) : users_(users), scs_(scs), data_(users * scs, 0.0) {}

  double& operator()(std::size_t user, std::size_t sc) { return data_[user * scs_ + sc]; }
  double operator()(std::size_t user, std::size_t sc) const { return data_[user * scs_ + sc]; }

  std::size_t users() const noexcept { return users_; }
  std::size_t scs() const noexcept { return scs_; }

 private:
  std::size_t users_;
  std::size_t scs_;
  std::vector<double> data_;
};

/// Per-SC winners argmax_k U'(n r_k(1)) b_ki, n = number of SCs in the slot.
/// Ties go to the lowest user index.
inline std::vector<std::size_t> allocate_slot(const Utility& u, const ThroughputProfile& profile,
                                              const RateMatrix& slot_rates) {
  if (slot_rates.users() != profile.users() || profile.users() == 0) {
    throw std::invalid_argument("allocate_slot: rate matrix does not match the profile");
  }
  const double n = static_cast<double>(slot_rates.scs());
  std::vector<double> weight(profile.users());
  for (std::size_t k = 0; k < weight.size(); ++k) {
    weight[k] = u.gradient(n * profile.unit_throughputs[k]);
  }
  std::vector<std::size_t> winners(slot_rates.scs(), 0);
  for (std::size_t i = 0; i < slot_rates.scs(); ++i) {
    double best = weight[0] * slot_rates(0, i);
    for (std::size_t k = 1; k < weight.size(); ++k) {
      const double v = weight[k] * slot_rates(k, i);
      if (v > best) {
        best = v;
        winners[i] = k;
      }
    }
  }
  return winners;
}

/// Time-slot simulation of the allocation policy.
struct AllocationTrace {
  std::vector<std::uint32_t> winners;  // slot-major, slots x scs; empty unless requested
  std::vector<double> throughputs;     // time-averaged per user
  std::vector<std::uint64_t> wins;     // SC-slots won per user
  std::vector<double> slot_square_sums;  // per user, sum over slots of (rate awarded in the slot)^2
  std::size_t slots = 0;
  std::size_t scs = 0;
  double total_awarded = 0.0;          // sum of all awarded per-SC rates
};

inline AllocationTrace simulate_session(const UserSet& users, const Utility& u, const ChannelParams& channel,
                                        const ThroughputProfile& profile, std::size_t n_sc, std::size_t slots,
                                        RandomStream& rng, bool record_winners = false) {
  if (slots == 0) {
    throw std::invalid_argument("simulate_session: slot count must be >= 1");
  }
  const std::size_t count = users.count();
  AllocationTrace trace;
  trace.slots = slots;
  trace.scs = n_sc;
  trace.throughputs.assign(count, 0.0);
  trace.wins.assign(count, 0);
  trace.slot_square_sums.assign(count, 0.0);
  if (count == 0 || n_sc == 0) {
    return trace;
  }
  const auto snrs = user_snrs(users, channel);
  const double bw = channel.bandwidth_per_sc;
  if (record_winners) {
    trace.winners.reserve(slots * n_sc);
  }
  RateMatrix rates(count, n_sc);
  std::vector<double> awarded(count, 0.0);
  std::vector<double> in_slot(count, 0.0);
  for (std::size_t t = 0; t < slots; ++t) {
    for (std::size_t k = 0; k < count; ++k) {
      for (std::size_t i = 0; i < n_sc; ++i) {
        rates(k, i) = bw * std::log2(1.0 + snrs[k] * rng.exponential());
      }
    }
    const auto winners = allocate_slot(u, profile, rates);
    for (std::size_t i = 0; i < n_sc; ++i) {
      const std::size_t w = winners[i];
      in_slot[w] += rates(w, i);
      ++trace.wins[w];
      if (record_winners) {
        trace.winners.push_back(static_cast<std::uint32_t>(w));
      }
    }
    for (std::size_t k = 0; k < count; ++k) {
      awarded[k] += in_slot[k];
      trace.slot_square_sums[k] += in_slot[k] * in_slot[k];
      in_slot[k] = 0.0;
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    trace.throughputs[k] = awarded[k] / static_cast<double>(slots);
    trace.total_awarded += awarded[k];
  }
  return trace;
}

/// Standard error of a user's time-averaged throughput, treating slots as
/// independent draws.
inline double throughput_standard_error(const AllocationTrace& trace, std::size_t user) {
  if (trace.slots < 2) {
    return 0.0;
  }
  const double t = static_cast<double>(trace.slots);
  const double mean = trace.throughputs[user];
  const double var = std::max(trace.slot_square_sums[user] / t - mean * mean, 0.0) * t / (t - 1.0);
  return std::sqrt(var / t);
}

inline AllocationTrace simulate_session(const UserSet& users, const Utility& u, const ChannelParams& channel,
                                        std::size_t n_sc, std::size_t slots, RandomStream& rng) {
  if (users.empty() || n_sc == 0) {
    ThroughputProfile empty;
    empty.unit_throughputs.assign(users.count(), 1.0);
    return simulate_session(users, u, channel, empty, n_sc, slots, rng);
  }
  return simulate_session(users, u, channel, solve_fixed_point(users, u, channel), n_sc, slots, rng);
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_DRA_HPP
