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

#ifndef SPECTRUM_LEASE_TRAFFIC_HPP
#define SPECTRUM_LEASE_TRAFFIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace spectrum_lease {

/// Distribution of the number of users K in a session. Positions are always
/// uniform on the cell disk.
class TrafficModel {
 public:
  /// Probability mass function over k = 0, 1, ..., pmf.size() - 1.
  explicit TrafficModel(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) {
      throw std::invalid_argument("traffic pmf is empty");
    }
    double total = 0.0;
    for (double p : pmf_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("traffic pmf has a negative or non-finite entry");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      std::ostringstream oss;
      oss.precision(12);
      oss << "traffic pmf sums to " << total << ", expected 1";
      throw std::invalid_argument(oss.str());
    }
    for (double& p : pmf_) {
      p /= total;
    }
    while (pmf_.size() > 1 && pmf_.back() == 0.0) {
      pmf_.pop_back();
    }
    k_low_ = static_cast<std::size_t>(std::find_if(pmf_.begin(), pmf_.end(), [](double p) { return p > 0.0; }) - pmf_.begin());
    cdf_.resize(pmf_.size());
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
    cdf_.back() = 1.0;
  }

  /// K uniform on the integers {k_low, ..., k_up}.
  static TrafficModel uniform(std::size_t k_low, std::size_t k_up) {
    if (k_low > k_up) {
      throw std::invalid_argument("traffic: k_low exceeds k_up");
    }
    std::vector<double> pmf(k_up + 1, 0.0);
    const double p = 1.0 / static_cast<double>(k_up - k_low + 1);
    for (std::size_t k = k_low; k <= k_up; ++k) {
      pmf[k] = p;
    }
    return TrafficModel(std::move(pmf));
  }

  /// Symmetric K distribution with an integer mean and an exact coefficient
  /// of variation: a mixture of the discrete uniforms on {mean-j, ..., mean+j}
  /// and {mean-j-1, ..., mean+j+1}. The uniform on 2j+1 points has variance
  /// j(j+1)/3 and both components share the mean, so the mixture variance is
  /// linear in the weight.
  static TrafficModel with_mean_cv(double mean, double cv) {
    if (!(mean >= 0.0) || std::floor(mean) != mean) {
      throw std::invalid_argument("traffic: mean must be a non-negative integer for the mean/cv family");
    }
    if (!(cv >= 0.0)) {
      throw std::invalid_argument("traffic: cv must be non-negative");
    }
    const auto m = static_cast<std::size_t>(mean);
    const double target = (cv * mean) * (cv * mean);
    auto uniform_var = [](double j) { return j * (j + 1.0) / 3.0; };
    std::size_t j = 0;
    while (uniform_var(static_cast<double>(j + 1)) < target) {
      ++j;
    }
    const double v0 = uniform_var(static_cast<double>(j));
    const double v1 = uniform_var(static_cast<double>(j + 1));
    const double weight_inner = (target <= v0) ? 1.0 : (v1 - target) / (v1 - v0);
    const std::size_t reach = weight_inner < 1.0 ? j + 1 : j;
    if (reach > m) {
      std::ostringstream oss;
      oss << "traffic: cv " << cv << " at mean " << mean << " needs negative user counts";
      throw std::invalid_argument(oss.str());
    }
    std::vector<double> pmf(m + reach + 1, 0.0);
    const double p_inner = weight_inner / static_cast<double>(2 * j + 1);
    const double p_outer = (1.0 - weight_inner) / static_cast<double>(2 * j + 3);
    for (std::size_t k = m - j; k <= m + j; ++k) {
      pmf[k] += p_inner;
    }
    if (reach > j) {
      for (std::size_t k = m - j - 1; k <= m + j + 1; ++k) {
        pmf[k] += p_outer;
      }
    }
    return TrafficModel(std::move(pmf));
  }

  const std::vector<double>& pmf() const noexcept { return pmf_; }
  std::size_t k_low() const noexcept { return k_low_; }
  std::size_t k_up() const noexcept { return pmf_.size() - 1; }

  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      m += static_cast<double>(k) * pmf_[k];
    }
    return m;
  }

  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      const double d = static_cast<double>(k) - m;
      v += d * d * pmf_[k];
    }
    return v;
  }

  double cv() const {
    const double m = mean();
    return m > 0.0 ? std::sqrt(variance()) / m : 0.0;
  }

  /// F_K(x) = Pr(K <= x), right-continuous.
  double cdf(double x) const {
    if (x < 0.0) {
      return 0.0;
    }
    const double fl = std::floor(x);
    if (fl >= static_cast<double>(k_up())) {
      return 1.0;
    }
    return cdf_[static_cast<std::size_t>(fl)];
  }

  /// Inverse-CDF draw from a uniform u in [0, 1).
  std::size_t draw(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), k_up());
  }

  friend bool operator==(const TrafficModel&, const TrafficModel&) = default;

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::size_t k_low_ = 0;
};

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_TRAFFIC_HPP
