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

#ifndef SPECTRUM_LEASE_SCENARIO_HPP
#define SPECTRUM_LEASE_SCENARIO_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectrum_lease/channel.hpp"
#include "spectrum_lease/leasing.hpp"
#include "spectrum_lease/prices.hpp"
#include "spectrum_lease/traffic.hpp"
#include "spectrum_lease/utility.hpp"

namespace spectrum_lease {

/// Error raised while building a model from a declarative spec. `field`
/// names the offending entry, dotted from the config root.
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class TrafficKind { uniform, mean_cv, pmf };

struct TrafficSpec {
  TrafficKind kind = TrafficKind::uniform;
  std::size_t k_low = 0;
  std::size_t k_up = 16;
  double mean = 8.0;
  double cv = 0.5;
  std::vector<double> pmf;

  TrafficModel build() const {
    try {
      switch (kind) {
        case TrafficKind::uniform:
          return TrafficModel::uniform(k_low, k_up);
        case TrafficKind::mean_cv:
          return TrafficModel::with_mean_cv(mean, cv);
        case TrafficKind::pmf:
          return TrafficModel(pmf);
      }
    } catch (const std::exception& e) {
      throw SpecError("traffic", e.what());
    }
    throw SpecError("traffic.kind", "unknown traffic kind");
  }

  friend bool operator==(const TrafficSpec&, const TrafficSpec&) = default;
};

enum class UtilityKind { alpha_fair, exponential, diminishing_return };

struct UtilitySpec {
  UtilityKind kind = UtilityKind::alpha_fair;
  double alpha = 1.0;

  Utility build() const {
    switch (kind) {
      case UtilityKind::alpha_fair:
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
          throw SpecError("utility.alpha", "must be a finite number >= 0");
        }
        return alpha_fair(alpha);
      case UtilityKind::exponential:
        return exponential_utility();
      case UtilityKind::diminishing_return:
        return diminishing_return_utility();
    }
    throw SpecError("utility.family", "unknown utility family");
  }

  friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;
};

/// On-demand price law, given either by its uniform support or by mean and
/// coefficient of variation.
struct OnDemandSpec {
  PriceFamily family = PriceFamily::uniform;
  std::optional<double> low = 0.8;
  std::optional<double> high = 1.8;
  std::optional<double> mean;
  std::optional<double> cv;

  bool by_bounds() const { return low.has_value() || high.has_value(); }

  OnDemandPrice build() const {
    try {
      if (by_bounds()) {
        if (family != PriceFamily::uniform) {
          throw std::invalid_argument("low/high bounds apply only to the uniform family");
        }
        if (!low || !high || mean || cv) {
          throw std::invalid_argument("give either both low and high, or mean and cv");
        }
        return OnDemandPrice::uniform(*low, *high);
      }
      if (!mean || !cv) {
        throw std::invalid_argument("give either both low and high, or mean and cv");
      }
      return OnDemandPrice(family, *mean, *cv);
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      throw SpecError("prices.on_demand", e.what());
    }
  }

  friend bool operator==(const OnDemandSpec&, const OnDemandSpec&) = default;
};

struct PriceSpec {
  double reservation_price = 1.0;
  double utility_scale = 5.0;
  OnDemandSpec on_demand;
  double sc_cap = 1024.0;

  PriceModel build() const {
    PriceModel p;
    p.reservation_price = reservation_price;
    p.utility_scale = utility_scale;
    p.sc_cap = sc_cap;
    p.on_demand = on_demand.build();
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw SpecError("prices", e.what());
    }
    return p;
  }

  friend bool operator==(const PriceSpec&, const PriceSpec&) = default;
};

struct SolverSettings {
  std::size_t sgd_iterations = 20000;
  double sgd_step0 = 10.0;
  std::optional<double> sgd_initial;
  bool pf_fast_path = true;
  std::size_t stationarity_samples = 10000;

  SgdOptions sgd(unsigned workers) const {
    SgdOptions o;
    o.iterations = sgd_iterations;
    o.step0 = sgd_step0;
    o.initial = sgd_initial;
    o.pf_fast_path = pf_fast_path;
    o.workers = workers;
    return o;
  }

  void validate() const {
    if (sgd_iterations == 0) {
      throw SpecError("solver.sgd_iterations", "must be >= 1");
    }
    if (!(sgd_step0 > 0.0) || !std::isfinite(sgd_step0)) {
      throw SpecError("solver.sgd_step0", "must be positive");
    }
    if (sgd_initial && !(*sgd_initial >= 0.0)) {
      throw SpecError("solver.sgd_initial", "must be >= 0");
    }
    if (stationarity_samples < 2) {
      throw SpecError("solver.stationarity_samples", "must be >= 2");
    }
  }

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// The built models of one experiment point.
struct Scenario {
  ChannelParams channel;
  Utility utility = alpha_fair(1.0);
  PriceModel prices;
  TrafficModel traffic = TrafficModel::uniform(0, 16);
  SolverSettings solver;

  /// Logarithmic utility with the theta = K shortcut enabled.
  bool pf_fast() const { return solver.pf_fast_path && utility.is_proportional_fair(); }
};

inline bool same_utility(const Utility& a, const Utility& b) {
  if (a.family != b.family) {
    return false;
  }
  return a.family == UtilityFamily::alpha_fair ? a.alpha == b.alpha : a.name == b.name;
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_SCENARIO_HPP
