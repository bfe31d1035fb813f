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

#ifndef SPECTRUM_LEASE_CHANNEL_HPP
#define SPECTRUM_LEASE_CHANNEL_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/expint.hpp>

#include "spectrum_lease/numeric.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/traffic.hpp"

namespace spectrum_lease {

/// Physical-layer constants of the single downlink OFDMA cell.
///
/// Path loss is the power law l(d) = (d / cell_radius)^(-pathloss_exponent),
/// normalized to 1 at the cell edge. The reference edge SNR P l(D) / (N0 B)
/// is either given directly (edge_snr_db) or derived from tx_power and
/// noise_psd; exactly one of the two parameterizations must be set.
struct ChannelParams {
  double bandwidth_per_sc = 1.0;        // Hz; rates are B log2(1 + SNR g)
  double capacity_margin = 1.0;         // Gamma >= 1
  double pathloss_exponent = 3.67;      // > 2
  double cell_radius = 1000.0;          // m
  std::optional<double> edge_snr_db = -6.0;
  std::optional<double> tx_power;       // W
  std::optional<double> noise_psd;      // W/Hz
  double min_distance_fraction = 1e-3;  // users are kept outside this fraction of the radius

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("channel.") + name + " must be positive and finite");
      }
    };
    positive(bandwidth_per_sc, "bandwidth_per_sc");
    positive(cell_radius, "cell_radius");
    if (!(capacity_margin >= 1.0)) {
      throw std::invalid_argument("channel.capacity_margin must be >= 1");
    }
    if (!(pathloss_exponent > 2.0)) {
      throw std::invalid_argument("channel.pathloss_exponent must be > 2");
    }
    if (!(min_distance_fraction > 0.0 && min_distance_fraction < 1.0)) {
      throw std::invalid_argument("channel.min_distance_fraction must lie in (0, 1)");
    }
    const bool physical = tx_power.has_value() || noise_psd.has_value();
    if (edge_snr_db.has_value() == physical) {
      throw std::invalid_argument(
          "channel: set either edge_snr_db or (tx_power, noise_psd), not both and not neither");
    }
    if (physical) {
      if (!tx_power || !noise_psd) {
        throw std::invalid_argument("channel: tx_power and noise_psd must be given together");
      }
      positive(*tx_power, "tx_power");
      positive(*noise_psd, "noise_psd");
    } else if (!std::isfinite(*edge_snr_db)) {
      throw std::invalid_argument("channel.edge_snr_db must be finite");
    }
  }

  /// P l(D) / (N0 B), excluding the capacity margin.
  double edge_snr() const {
    if (edge_snr_db) {
      return std::pow(10.0, *edge_snr_db / 10.0);
    }
    return *tx_power / (*noise_psd * bandwidth_per_sc);
  }

  double pathloss(double distance) const { return std::pow(distance / cell_radius, -pathloss_exponent); }

  /// Mean SNR P l(d) / (Gamma N0 B) of a user at the given distance.
  double mean_snr(double distance) const { return edge_snr() * pathloss(distance) / capacity_margin; }

  double min_distance() const { return min_distance_fraction * cell_radius; }

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
};

/// The realized users of a session.
struct UserSet {
  std::vector<Position> positions;

  std::size_t count() const noexcept { return positions.size(); }
  bool empty() const noexcept { return positions.empty(); }

  void validate(const ChannelParams& channel) const {
    for (const auto& p : positions) {
      const double d = p.norm();
      if (!(d > 0.0) || d > channel.cell_radius * (1.0 + 1e-12)) {
        throw std::invalid_argument("user position outside the cell disk");
      }
    }
  }

  /// Users at the given distances along the x axis.
  static UserSet at_distances(const std::vector<double>& distances) {
    UserSet u;
    u.positions.reserve(distances.size());
    for (double d : distances) {
      u.positions.push_back({d, 0.0});
    }
    return u;
  }
};

inline void check_distance(const ChannelParams& params, double distance) {
  if (!(distance > 0.0) || distance > params.cell_radius * (1.0 + 1e-12)) {
    std::ostringstream oss;
    oss << "distance " << distance << " outside (0, " << params.cell_radius << "]";
    throw std::domain_error(oss.str());
  }
}

/// b = B log2(1 + P l(d) g / (Gamma N0 B)).
inline double instantaneous_rate(const ChannelParams& params, double distance, double fading_gain) {
  check_distance(params, distance);
  if (!(fading_gain >= 0.0)) {
    throw std::domain_error("fading gain must be non-negative");
  }
  return params.bandwidth_per_sc * std::log2(1.0 + params.mean_snr(distance) * fading_gain);
}

/// Distribution of the per-SC rate of one user under unit-mean Rayleigh power
/// gain g ~ Exp(1): F(eta) = 1 - exp(-(2^(eta/B) - 1) / S).
class RateDistribution {
 public:
  RateDistribution(double mean_snr, double bandwidth) : snr_(mean_snr), bandwidth_(bandwidth) {
    if (!(mean_snr > 0.0) || !(bandwidth > 0.0)) {
      throw std::domain_error("rate distribution needs positive SNR and bandwidth");
    }
  }

  double mean_snr() const noexcept { return snr_; }
  double bandwidth() const noexcept { return bandwidth_; }

  /// (2^(eta/B) - 1) / S, the fading gain that yields rate eta.
  double gain_at(double eta) const { return std::expm1(eta / bandwidth_ * std::numbers::ln2) / snr_; }

  double cdf(double eta) const {
    if (!(eta > 0.0)) {
      return 0.0;
    }
    return -std::expm1(-gain_at(eta));
  }

  double pdf(double eta) const {
    if (eta < 0.0) {
      return 0.0;
    }
    const double t = eta / bandwidth_ * std::numbers::ln2;
    return std::numbers::ln2 / bandwidth_ * std::exp(t) / snr_ * std::exp(-std::expm1(t) / snr_);
  }

  /// Rate at CDF level p in [0, 1).
  double quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) {
      throw std::domain_error("rate quantile level must lie in [0, 1)");
    }
    return bandwidth_ * std::log2(1.0 - snr_ * std::log1p(-p));
  }

  double rate(double gain) const { return bandwidth_ * std::log2(1.0 + snr_ * gain); }

  /// E[b] = B e^(1/S) E1(1/S) / ln 2.
  double mean() const {
    const double x = 1.0 / snr_;
    return bandwidth_ * std::exp(x) * boost::math::expint(1, x) / std::numbers::ln2;
  }

  /// Upper rate beyond which 1 - F is below exp(-tail_exponent).
  double truncation(double tail_exponent = 40.0) const {
    return bandwidth_ * std::log2(1.0 + snr_ * tail_exponent);
  }

  /// E[b] by quadrature of eta f(eta).
  double mean_by_quadrature() const {
    return integrate([this](double eta) { return eta * pdf(eta); }, 0.0, truncation());
  }

 private:
  double snr_;
  double bandwidth_;
};

inline RateDistribution rate_distribution(const ChannelParams& params, double distance) {
  check_distance(params, distance);
  return RateDistribution(params.mean_snr(distance), params.bandwidth_per_sc);
}

/// Draws K from the traffic model, then K positions uniform on the disk
/// (outside the minimum-distance guard).
inline UserSet sample_user_set(const TrafficModel& traffic, const ChannelParams& channel, RandomStream& rng) {
  const std::size_t k = traffic.draw(rng.uniform());
  const double rho2 = channel.min_distance_fraction * channel.min_distance_fraction;
  UserSet users;
  users.positions.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double radius = channel.cell_radius * std::sqrt(rho2 + (1.0 - rho2) * rng.uniform());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    users.positions.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return users;
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_CHANNEL_HPP
