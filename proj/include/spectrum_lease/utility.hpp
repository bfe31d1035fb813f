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

#ifndef SPECTRUM_LEASE_UTILITY_HPP
#define SPECTRUM_LEASE_UTILITY_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectrum_lease {

enum class UtilityFamily { alpha_fair, custom };

/// Per-user utility of average throughput, with its derivative and the
/// inverse of the derivative.
struct Utility {
  UtilityFamily family = UtilityFamily::alpha_fair;
  double alpha = 1.0;  // meaningful for alpha_fair only
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> gradient;
  std::function<double(double)> inverse_gradient;  // empty when the derivative is constant
  bool satisfies_scale_condition = false;

  bool invertible() const { return static_cast<bool>(inverse_gradient); }
  bool is_linear() const { return family == UtilityFamily::alpha_fair && alpha == 0.0; }
  bool is_proportional_fair() const { return family == UtilityFamily::alpha_fair && alpha == 1.0; }

  /// True when U(0+) is -infinity and U'(0+) is +infinity.
  bool singular_at_zero() const { return family == UtilityFamily::alpha_fair && alpha >= 1.0; }

  double inverse_gradient_at(double y) const {
    if (!inverse_gradient) {
      throw std::domain_error("utility '" + name + "' has a constant derivative; its inverse is undefined");
    }
    return inverse_gradient(y);
  }
};

/// One (r1, r2, n) probe of the scale condition.
struct ScaleProbe {
  double r1;
  double r2;
  unsigned n;
};

/// Log-spaced probes over rates in [1e-3, 1e3] and n in {1, 2, 3, 7, 16, 64}.
inline std::vector<ScaleProbe> default_scale_probes() {
  std::vector<ScaleProbe> grid;
  const double rates[] = {1e-3, 0.02, 0.3, 1.0, 2.5, 40.0, 1e3};
  const unsigned ns[] = {1, 2, 3, 7, 16, 64};
  for (double r1 : rates) {
    for (double r2 : rates) {
      for (unsigned n : ns) {
        grid.push_back({r1, r2, n});
      }
    }
  }
  return grid;
}

/// Checks U'(r1)/U'(r2) == U'(r1/n)/U'(r2/n) to 1e-9 relative on every probe.
/// This is what makes per-user throughput linear in the number of SCs.
inline bool check_scale_condition(const Utility& u, std::span<const ScaleProbe> grid) {
  constexpr double tolerance = 1e-9;
  for (const auto& p : grid) {
    if (!(p.r1 > 0.0) || !(p.r2 > 0.0) || p.n == 0) {
      throw std::invalid_argument("scale probe needs r1, r2 > 0 and n >= 1");
    }
    const double n = static_cast<double>(p.n);
    const double lhs = u.gradient(p.r1) / u.gradient(p.r2);
    const double rhs = u.gradient(p.r1 / n) / u.gradient(p.r2 / n);
    if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
      return false;
    }
    if (std::abs(lhs - rhs) > tolerance * std::max(std::abs(lhs), std::abs(rhs))) {
      return false;
    }
  }
  return true;
}

inline bool check_scale_condition(const Utility& u) {
  const auto grid = default_scale_probes();
  return check_scale_condition(u, grid);
}

/// U(r) = r^(1-a)/(1-a) for a != 1 and log r for a = 1.
inline Utility alpha_fair(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::domain_error("alpha must be a finite non-negative number");
  }
  Utility u;
  u.family = UtilityFamily::alpha_fair;
  u.alpha = alpha;
  std::ostringstream oss;
  oss << "alpha_fair(" << alpha << ")";
  u.name = oss.str();
  if (alpha == 1.0) {
    u.value = [](double r) { return std::log(r); };
    u.gradient = [](double r) { return 1.0 / r; };
    u.inverse_gradient = [](double y) { return 1.0 / y; };
  } else {
    u.value = [alpha](double r) { return std::pow(r, 1.0 - alpha) / (1.0 - alpha); };
    u.gradient = [alpha](double r) { return std::pow(r, -alpha); };
    if (alpha > 0.0) {
      u.inverse_gradient = [alpha](double y) { return std::pow(y, -1.0 / alpha); };
    }
  }
  u.satisfies_scale_condition = true;
  return u;
}

/// Caller-supplied utility. Rejected unless it passes the scale condition,
/// since the leasing closed forms rely on it.
inline Utility custom_utility(std::string name, std::function<double(double)> value,
                              std::function<double(double)> gradient,
                              std::function<double(double)> inverse_gradient) {
  Utility u;
  u.family = UtilityFamily::custom;
  u.alpha = std::numeric_limits<double>::quiet_NaN();
  u.name = std::move(name);
  u.value = std::move(value);
  u.gradient = std::move(gradient);
  u.inverse_gradient = std::move(inverse_gradient);
  if (!u.value || !u.gradient || !u.inverse_gradient) {
    throw std::invalid_argument("custom utility '" + u.name + "' needs U, U' and the inverse of U'");
  }
  u.satisfies_scale_condition = check_scale_condition(u);
  if (!u.satisfies_scale_condition) {
    throw std::invalid_argument("custom utility '" + u.name +
                                "' violates the scale condition U'(r1)/U'(r2) = U'(r1/n)/U'(r2/n)");
  }
  return u;
}

namespace detail {

inline Utility unchecked(std::string name, std::function<double(double)> value, std::function<double(double)> gradient,
                         std::function<double(double)> inverse_gradient) {
  Utility u;
  u.family = UtilityFamily::custom;
  u.alpha = std::numeric_limits<double>::quiet_NaN();
  u.name = std::move(name);
  u.value = std::move(value);
  u.gradient = std::move(gradient);
  u.inverse_gradient = std::move(inverse_gradient);
  u.satisfies_scale_condition = check_scale_condition(u);
  return u;
}

}  // namespace detail

/// U(r) = 1 - e^(-r). Concave and increasing but not scale-invariant; kept
/// so validation can demonstrate the rejection path.
inline Utility exponential_utility() {
  return detail::unchecked(
      "exponential", [](double r) { return -std::expm1(-r); }, [](double r) { return std::exp(-r); },
      [](double y) { return -std::log(y); });
}

/// U(r) = ln(1 + r). Also violates the scale condition.
inline Utility diminishing_return_utility() {
  return detail::unchecked(
      "diminishing_return", [](double r) { return std::log1p(r); }, [](double r) { return 1.0 / (1.0 + r); },
      [](double y) { return 1.0 / y - 1.0; });
}

inline void require_scale_condition(const Utility& u) {
  if (!u.satisfies_scale_condition) {
    throw std::domain_error("utility '" + u.name +
                            "' violates the scale condition U'(r1)/U'(r2) = U'(r1/n)/U'(r2/n); "
                            "per-user throughput is not linear in the SC count");
  }
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_UTILITY_HPP
