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

#ifndef SPECTRUM_LEASE_PRICES_HPP
#define SPECTRUM_LEASE_PRICES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/lognormal.hpp>

#include "spectrum_lease/numeric.hpp"

namespace spectrum_lease {

enum class PriceFamily { uniform, lognormal };

/// Distribution of the per-session on-demand price c_s, parameterized by its
/// mean and coefficient of variation. cv = 0 is a constant price.
class OnDemandPrice {
 public:
  OnDemandPrice() = default;

  OnDemandPrice(PriceFamily family, double mean, double cv) : family_(family), mean_(mean), cv_(cv) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
      throw std::invalid_argument("on-demand price mean must be positive");
    }
    if (!(cv >= 0.0) || !std::isfinite(cv)) {
      throw std::invalid_argument("on-demand price cv must be non-negative");
    }
    if (family == PriceFamily::uniform && !(low() > 0.0)) {
      std::ostringstream oss;
      oss.precision(9);
      oss << "uniform on-demand price support [" << low() << ", " << high()
          << "] must stay positive (cv < 1/sqrt(3))";
      throw std::invalid_argument(oss.str());
    }
  }

  /// Uniform on [low, high].
  static OnDemandPrice uniform(double low, double high) {
    if (!(low > 0.0) || !(high >= low)) {
      throw std::invalid_argument("uniform on-demand price needs 0 < low <= high");
    }
    const double mean = 0.5 * (low + high);
    const double cv = (high - low) / (2.0 * std::numbers::sqrt3 * mean);
    return OnDemandPrice(PriceFamily::uniform, mean, cv);
  }

  PriceFamily family() const noexcept { return family_; }
  double mean() const noexcept { return mean_; }
  double cv() const noexcept { return cv_; }
  bool degenerate() const noexcept { return cv_ == 0.0; }

  /// Support bounds; for the lognormal family these are the 1e-15 quantiles.
  double low() const {
    if (family_ == PriceFamily::uniform || degenerate()) {
      return mean_ * (1.0 - std::numbers::sqrt3 * (family_ == PriceFamily::uniform ? cv_ : 0.0));
    }
    return quantile(1e-15);
  }

  double high() const {
    if (family_ == PriceFamily::uniform || degenerate()) {
      return mean_ * (1.0 + std::numbers::sqrt3 * (family_ == PriceFamily::uniform ? cv_ : 0.0));
    }
    return quantile(1.0 - 1e-15);
  }

  double cdf(double x) const {
    if (degenerate()) {
      return x >= mean_ ? 1.0 : 0.0;
    }
    if (family_ == PriceFamily::uniform) {
      return std::clamp((x - low()) / (high() - low()), 0.0, 1.0);
    }
    return x <= 0.0 ? 0.0 : boost::math::cdf(lognormal(), x);
  }

  double pdf(double x) const {
    if (degenerate()) {
      throw std::domain_error("constant on-demand price has no density");
    }
    if (family_ == PriceFamily::uniform) {
      return (x >= low() && x <= high()) ? 1.0 / (high() - low()) : 0.0;
    }
    return x <= 0.0 ? 0.0 : boost::math::pdf(lognormal(), x);
  }

  /// Price at CDF level u in [0, 1).
  double quantile(double u) const {
    if (degenerate()) {
      return mean_;
    }
    if (family_ == PriceFamily::uniform) {
      return low() + u * (high() - low());
    }
    return boost::math::quantile(lognormal(), std::max(u, 1e-300));
  }

  /// E[min(c_s, x)] = integral_0^x (1 - F(eta)) d eta. Closed form for the
  /// uniform and constant cases, adaptive quadrature otherwise.
  double survival_integral(double x) const {
    if (!(x > 0.0)) {
      return 0.0;
    }
    if (std::isinf(x)) {
      return mean_;
    }
    if (degenerate()) {
      return std::min(x, mean_);
    }
    if (family_ == PriceFamily::uniform) {
      const double a = low();
      const double b = high();
      if (x <= a) {
        return x;
      }
      if (x >= b) {
        return mean_;
      }
      const double over = x - a;
      return a + over - over * over / (2.0 * (b - a));
    }
    const double top = high();
    const double lo = low();
    if (x >= top) {
      return lo + integrate([this](double e) { return 1.0 - cdf(e); }, lo, top, {1e-10, 1e-14, 30});
    }
    if (x <= lo) {
      return x;
    }
    return lo + integrate([this](double e) { return 1.0 - cdf(e); }, lo, x, {1e-10, 1e-14, 30});
  }

  friend bool operator==(const OnDemandPrice&, const OnDemandPrice&) = default;

 private:
  boost::math::lognormal_distribution<double> lognormal() const {
    const double s2 = std::log1p(cv_ * cv_);
    return boost::math::lognormal_distribution<double>(std::log(mean_) - 0.5 * s2, std::sqrt(s2));
  }

  PriceFamily family_ = PriceFamily::uniform;
  double mean_ = 1.3;
  double cv_ = 0.5 / (std::numbers::sqrt3 * 1.3);
};

/// Prices faced by the operator and the utility-to-currency scale.
struct PriceModel {
  double reservation_price = 1.0;  // c_r per SC per period
  double utility_scale = 5.0;      // u_g
  OnDemandPrice on_demand = OnDemandPrice::uniform(0.8, 1.8);
  double sc_cap = 1024.0;          // most SCs the owner will sell; binds for linear utility

  void validate() const {
    if (!(reservation_price > 0.0) || !std::isfinite(reservation_price)) {
      throw std::invalid_argument("prices.reservation_price must be positive");
    }
    if (!(utility_scale > 0.0) || !std::isfinite(utility_scale)) {
      throw std::invalid_argument("prices.utility_scale must be positive");
    }
    if (!(sc_cap > 0.0)) {
      throw std::invalid_argument("prices.sc_cap must be positive");
    }
  }

  friend bool operator==(const PriceModel&, const PriceModel&) = default;
};

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_PRICES_HPP
