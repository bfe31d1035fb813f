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

#ifndef SPECTRUM_LEASE_NUMERIC_HPP
#define SPECTRUM_LEASE_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spectrum_lease {

/// Raised when an adaptive integral cannot reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double estimate, double error_estimate)
      : std::runtime_error(message(estimate, error_estimate)), estimate_(estimate), error_(error_estimate) {}

  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_; }

 private:
  static std::string message(double estimate, double error_estimate) {
    std::ostringstream oss;
    oss.precision(9);
    oss << "quadrature did not converge: estimate " << estimate << ", error estimate " << error_estimate;
    return oss.str();
  }

  double estimate_;
  double error_;
};

struct QuadratureOptions {
  double relative_tolerance = 1e-12;
  double absolute_tolerance = 1e-13;
  unsigned max_depth = 30;
};

/// Adaptive 15-point Gauss-Kronrod integral of f over [a, b].
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (!(b > a)) {
    return 0.0;
  }
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, opts.max_depth, opts.relative_tolerance, &error, &l1);
  if (!std::isfinite(value) || error > std::max(opts.relative_tolerance * 10.0 * l1, opts.absolute_tolerance)) {
    throw QuadratureError(value, error);
  }
  return value;
}

namespace detail {

/// One 15-point Kronrod / 7-point Gauss pass over [a, b] for a vector
/// integrand. kronrod and gauss must have f's dimension.
template <typename F>
double gauss_kronrod_panel(F& f, double a, double b, std::vector<double>& kronrod, std::vector<double>& gauss,
                           std::vector<double>& scratch) {
  using boost::math::quadrature::gauss_kronrod;
  using gauss7 = boost::math::quadrature::gauss<double, 7>;
  const auto& x = gauss_kronrod<double, 15>::abscissa();
  const auto& wk = gauss_kronrod<double, 15>::weights();
  const auto& wg = gauss7::weights();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const std::size_t dim = kronrod.size();
  f(center, std::span<double>(scratch));
  for (std::size_t c = 0; c < dim; ++c) {
    kronrod[c] = scratch[c] * wk[0];
    gauss[c] = scratch[c] * wg[0];
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    for (double sign : {1.0, -1.0}) {
      f(center + sign * half * x[i], std::span<double>(scratch));
      for (std::size_t c = 0; c < dim; ++c) {
        kronrod[c] += scratch[c] * wk[i];
        if (i % 2 == 0) {
          gauss[c] += scratch[c] * wg[i / 2];
        }
      }
    }
  }
  double error = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    kronrod[c] *= half;
    gauss[c] *= half;
    error = std::max(error, std::abs(kronrod[c] - gauss[c]));
  }
  return error;
}

template <typename F>
void adaptive_vector_panel(F& f, double a, double b, unsigned depth, double relative_tolerance, double absolute_tolerance,
                           std::vector<double>& total, std::vector<double>& scratch) {
  const std::size_t dim = total.size();
  std::vector<double> kronrod(dim);
  std::vector<double> gauss(dim);
  const double error = gauss_kronrod_panel(f, a, b, kronrod, gauss, scratch);
  if (depth > 0 && error > relative_tolerance * std::abs(kronrod[0]) && error > absolute_tolerance) {
    const double mid = 0.5 * (a + b);
    adaptive_vector_panel(f, a, mid, depth - 1, relative_tolerance, 0.5 * absolute_tolerance, total, scratch);
    adaptive_vector_panel(f, mid, b, depth - 1, relative_tolerance, 0.5 * absolute_tolerance, total, scratch);
    return;
  }
  for (std::size_t c = 0; c < dim; ++c) {
    total[c] += kronrod[c];
  }
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of a vector-valued integrand
/// f(t, out) over [a, b]. Panels are refined until the Kronrod/Gauss gap of
/// every component is within relative_tolerance of the first component's
/// panel value, or within an absolute budget derived from the first
/// component's total.
template <typename F>
std::vector<double> integrate_vector(F&& f, std::size_t dim, double a, double b, double relative_tolerance = 1e-9,
                                     unsigned max_depth = 30) {
  std::vector<double> total(dim, 0.0);
  if (!(b > a) || dim == 0) {
    return total;
  }
  std::vector<double> scratch(dim);
  std::vector<double> kronrod(dim);
  std::vector<double> gauss(dim);
  const double error = detail::gauss_kronrod_panel(f, a, b, kronrod, gauss, scratch);
  const double absolute = std::max(relative_tolerance * std::abs(kronrod[0]), 1e-300);
  if (error <= absolute) {
    return kronrod;
  }
  const double mid = 0.5 * (a + b);
  detail::adaptive_vector_panel(f, a, mid, max_depth, relative_tolerance, 0.5 * absolute, total, scratch);
  detail::adaptive_vector_panel(f, mid, b, max_depth, relative_tolerance, 0.5 * absolute, total, scratch);
  return total;
}

/// Bisection on a bracket [lo, hi] where f changes sign. Returns the midpoint
/// of the final bracket.
template <typename F>
double bisect(F&& f, double lo, double hi, double relative_tolerance = 1e-13, int max_iterations = 200) {
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) {
    return lo;
  }
  if (f_hi == 0.0) {
    return hi;
  }
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    std::ostringstream oss;
    oss.precision(9);
    oss << "bisection bracket does not straddle a root: f(" << lo << ") = " << f_lo << ", f(" << hi
        << ") = " << f_hi;
    throw std::domain_error(oss.str());
  }
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= relative_tolerance * std::abs(mid)) {
      break;
    }
    const double f_mid = f(mid);
    if (f_mid == 0.0) {
      return mid;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Pairwise summation; the result depends only on the order of xs.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) {
      s += x;
    }
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Sample mean and standard error of the mean.
struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

inline Estimate estimate(std::span<const double> xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) {
    return e;
  }
  const double n = static_cast<double>(xs.size());
  e.mean = pairwise_sum(xs) / n;
  if (xs.size() > 1) {
    std::vector<double> sq(xs.size());
    std::transform(xs.begin(), xs.end(), sq.begin(), [&](double x) { return (x - e.mean) * (x - e.mean); });
    e.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return e;
}

/// Estimate of the mean of xs - ys for paired samples.
inline Estimate paired_difference(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("paired_difference: size mismatch");
  }
  std::vector<double> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d[i] = xs[i] - ys[i];
  }
  return estimate(d);
}

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) {
    return requested;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work is
/// distributed by index, so results written to slot i do not depend on the
/// worker count. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) {
          body(i);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_NUMERIC_HPP
