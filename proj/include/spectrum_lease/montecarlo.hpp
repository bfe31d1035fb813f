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

#ifndef SPECTRUM_LEASE_MONTECARLO_HPP
#define SPECTRUM_LEASE_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spectrum_lease/dra.hpp"
#include "spectrum_lease/leasing.hpp"
#include "spectrum_lease/numeric.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/scenario.hpp"

namespace spectrum_lease {

enum class Scheme { two_stage, reservation_only, on_demand_only };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::two_stage:
      return "two_stage";
    case Scheme::reservation_only:
      return "reservation_only";
    case Scheme::on_demand_only:
      return "on_demand_only";
  }
  return "unknown";
}

inline std::optional<Scheme> parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::two_stage, Scheme::reservation_only, Scheme::on_demand_only}) {
    if (name == to_string(s)) {
      return s;
    }
  }
  return std::nullopt;
}

enum class SweepVariable { xi_cs, xi_k, mu_cs, mu_k, alpha };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::xi_cs:
      return "xi_cs";
    case SweepVariable::xi_k:
      return "xi_k";
    case SweepVariable::mu_cs:
      return "mu_cs";
    case SweepVariable::mu_k:
      return "mu_k";
    case SweepVariable::alpha:
      return "alpha";
  }
  return "unknown";
}

inline std::optional<SweepVariable> parse_sweep_variable(std::string_view name) {
  for (SweepVariable v : {SweepVariable::xi_cs, SweepVariable::xi_k, SweepVariable::mu_cs, SweepVariable::mu_k,
                          SweepVariable::alpha}) {
    if (name == to_string(v)) {
      return v;
    }
  }
  return std::nullopt;
}

/// One sampled session: the user set enters only through K, theta and the
/// unit throughput profile; the on-demand price is kept as its uniform
/// variate so one sample serves every price law.
struct SessionRecord {
  std::size_t users = 0;
  double theta = 0.0;
  double price_variate = 0.5;
  ThroughputProfile profile;  // empty unless profiles were requested
};

/// Session i of a period, drawn from stream (seed, session, i): the price
/// variate first, then K, then positions.
inline SessionRecord sample_session(const Scenario& s, std::uint64_t seed, std::size_t index, bool with_profile) {
  RandomStream rng(seed, StreamTag::session, index);
  SessionRecord rec;
  rec.price_variate = rng.uniform_open();
  const UserSet users = sample_user_set(s.traffic, s.channel, rng);
  rec.users = users.count();
  if (users.empty()) {
    return rec;
  }
  if (with_profile || !s.pf_fast()) {
    rec.profile = solve_fixed_point(users, s.utility, s.channel);
    rec.theta = rec.profile.theta;
  }
  if (s.pf_fast()) {
    rec.theta = static_cast<double>(rec.users);
  }
  return rec;
}

/// Sessions reused across experiment points that share traffic, channel and
/// utility. Points that only change prices skip every fixed-point solve.
class SessionBank {
 public:
  explicit SessionBank(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<SessionRecord>& sessions(const Scenario& s, std::size_t count, bool with_profiles,
                                             unsigned workers) {
    for (const auto& e : entries_) {
      if (e->count == count && (e->profiles || !with_profiles) && e->fast == s.pf_fast() && e->traffic == s.traffic &&
          e->channel == s.channel && same_utility(e->utility, s.utility)) {
        return e->records;
      }
    }
    auto e = std::make_unique<Entry>(Entry{s.traffic, s.channel, s.utility, s.pf_fast(), with_profiles, count, {}});
    e->records.resize(count);
    parallel_for(count, workers, [&](std::size_t i) { e->records[i] = sample_session(s, seed_, i, with_profiles); });
    entries_.push_back(std::move(e));
    return entries_.back()->records;
  }

 private:
  struct Entry {
    TrafficModel traffic;
    ChannelParams channel;
    Utility utility;
    bool fast = false;
    bool profiles = false;
    std::size_t count = 0;
    std::vector<SessionRecord> records;
  };
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

/// Theta samples consumed by SGD, memoized per (traffic, channel, utility).
class ThetaCache {
 public:
  explicit ThetaCache(std::uint64_t seed) : seed_(seed) {}

  ThetaSource source(const Scenario& s, unsigned workers) {
    Entry* entry = nullptr;
    for (auto& e : entries_) {
      if (e->fast == s.pf_fast() && e->traffic == s.traffic && e->channel == s.channel &&
          same_utility(e->utility, s.utility)) {
        entry = e.get();
      }
    }
    if (entry == nullptr) {
      entries_.push_back(std::make_unique<Entry>(Entry{s.traffic, s.channel, s.utility, s.pf_fast(), {}}));
      entry = entries_.back().get();
    }
    auto fresh = make_theta_source(s.traffic, s.utility, s.channel, seed_, StreamTag::sgd, s.solver.pf_fast_path, workers);
    return [entry, fresh](std::size_t first, std::size_t count) {
      auto& v = entry->thetas;
      if (v.size() < first + count) {
        const std::size_t have = v.size();
        auto more = fresh(have, first + count - have);
        v.insert(v.end(), more.begin(), more.end());
      }
      return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                                 v.begin() + static_cast<std::ptrdiff_t>(first + count));
    };
  }

 private:
  struct Entry {
    TrafficModel traffic;
    ChannelParams channel;
    Utility utility;
    bool fast = false;
    std::vector<double> thetas;  // index l holds the theta of SGD step l
  };
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

/// Advance reservation of the two-stage scheme: zero without a reservation
/// discount, the closed-form root for the logarithmic utility, SGD otherwise.
inline LeasePlan two_stage_plan(const Scenario& s, std::uint64_t seed, unsigned workers, ThetaCache* cache = nullptr) {
  require_scale_condition(s.utility);
  if (no_reservation_discount(s.prices)) {
    return no_discount_plan();
  }
  if (s.pf_fast()) {
    return pf_reservation_plan(s.traffic, s.prices);
  }
  auto opts = s.solver.sgd(workers);
  opts.record_history = false;
  if (cache != nullptr) {
    return sgd_reservation(cache->source(s, workers), s.utility, s.prices, s.traffic.mean(), opts);
  }
  return sgd_reservation(s.traffic, s.utility, s.channel, s.prices, seed, opts);
}

/// E[theta] for the reservation-only scheme: E[K] under the logarithmic
/// utility, otherwise the mean over the period's sessions.
inline double mean_theta(const Scenario& s, const std::vector<SessionRecord>& sessions) {
  if (s.pf_fast()) {
    return s.traffic.mean();
  }
  std::vector<double> thetas(sessions.size());
  std::transform(sessions.begin(), sessions.end(), thetas.begin(), [](const SessionRecord& r) { return r.theta; });
  return estimate(thetas).mean;
}

/// Per-scheme statistics of one period.
struct SweepRow {
  double value = 0.0;  // sweep variable at this point
  Scheme scheme = Scheme::two_stage;
  double reserved = 0.0;                // n_r
  Estimate on_demand;                   // n_s per session
  double mean_total_sc = 0.0;           // n_r + mean n_s
  double mean_cost_per_sc = 0.0;        // (c_r n_r + mean c_s n_s) / (n_r + mean n_s)
  Estimate surplus;                     // -c_r n_r + Q per session
  double mean_on_demand_spend = 0.0;    // mean c_s n_s
};

/// Evaluates `scheme` with reservation `reserved` over the given sessions.
/// Without surplus the profiles are not needed and the surplus estimate is
/// left as NaN.
inline SweepRow run_period(const Scenario& s, Scheme scheme, double reserved,
                           const std::vector<SessionRecord>& sessions, unsigned workers, bool with_surplus = true) {
  if (sessions.empty()) {
    throw std::invalid_argument("run_period needs at least one session");
  }
  const std::size_t n = sessions.size();
  std::vector<double> requested(n), spend(n), surplus(n);
  const PriceModel& p = s.prices;
  parallel_for(n, workers, [&](std::size_t i) {
    const SessionRecord& rec = sessions[i];
    const double price = p.on_demand.quantile(rec.price_variate);
    double ns = 0.0;
    double q = 0.0;
    switch (scheme) {
      case Scheme::two_stage:
        ns = optimal_on_demand(rec.theta, price, reserved, s.utility, p);
        if (with_surplus && rec.users > 0) {
          q = session_surplus(rec.profile, price, reserved, s.utility, p);
        }
        break;
      case Scheme::reservation_only:
        if (with_surplus && rec.users > 0) {
          q = p.utility_scale * system_utility(s.utility, rec.profile, reserved);
        }
        break;
      case Scheme::on_demand_only:
        ns = baseline_on_demand_only(rec.theta, price, s.utility, p);
        if (with_surplus && rec.users > 0) {
          q = session_surplus(rec.profile, price, 0.0, s.utility, p);
        }
        break;
    }
    requested[i] = ns;
    spend[i] = price * ns;
    surplus[i] = with_surplus ? q - p.reservation_price * reserved : std::numeric_limits<double>::quiet_NaN();
  });
  SweepRow row;
  row.scheme = scheme;
  row.reserved = reserved;
  row.on_demand = estimate(requested);
  row.mean_on_demand_spend = estimate(spend).mean;
  row.mean_total_sc = reserved + row.on_demand.mean;
  row.mean_cost_per_sc = row.mean_total_sc > 0.0
                             ? (p.reservation_price * reserved + row.mean_on_demand_spend) / row.mean_total_sc
                             : std::numeric_limits<double>::quiet_NaN();
  if (with_surplus) {
    row.surplus = estimate(surplus);
  } else {
    row.surplus = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), n};
  }
  return row;
}

/// Sweep definition.
struct ExperimentGrid {
  SweepVariable variable = SweepVariable::xi_cs;
  std::vector<double> values;
  std::size_t sessions = 10000;
  std::vector<Scheme> schemes{Scheme::two_stage, Scheme::reservation_only, Scheme::on_demand_only};

  static constexpr std::size_t min_sessions = 1000;

  void validate() const {
    if (values.empty()) {
      throw SpecError("grid.values", "grid is empty");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw SpecError("grid.values[" + std::to_string(i) + "]", "must be finite");
      }
      if (i > 0 && !(values[i] > values[i - 1])) {
        throw SpecError("grid.values", "points must be distinct and sorted ascending");
      }
    }
    if (sessions < min_sessions) {
      throw SpecError("grid.sessions", "must be >= " + std::to_string(min_sessions));
    }
    if (schemes.empty()) {
      throw SpecError("grid.schemes", "at least one scheme is required");
    }
  }

  friend bool operator==(const ExperimentGrid&, const ExperimentGrid&) = default;
};

/// E[K] snapped to the nearest integer when it is one up to rounding, so a
/// computed mean can seed the mean/cv traffic family.
inline double integral_mean(const TrafficModel& t) {
  const double m = t.mean();
  const double r = std::round(m);
  return std::abs(m - r) <= 1e-9 * std::max(1.0, r) ? r : m;
}

/// The scenario at one grid point. Coefficient-of-variation points keep the
/// mean and rescale the spread; mean points keep the coefficient of variation.
inline Scenario apply_point(const Scenario& base, SweepVariable variable, double value) {
  Scenario s = base;
  const auto& od = base.prices.on_demand;
  switch (variable) {
    case SweepVariable::xi_cs:
      s.prices.on_demand = OnDemandPrice(od.family(), od.mean(), value);
      break;
    case SweepVariable::mu_cs:
      s.prices.on_demand = OnDemandPrice(od.family(), value, od.cv());
      break;
    case SweepVariable::xi_k:
      s.traffic = TrafficModel::with_mean_cv(integral_mean(base.traffic), value);
      break;
    case SweepVariable::mu_k:
      s.traffic = TrafficModel::with_mean_cv(value, base.traffic.cv());
      break;
    case SweepVariable::alpha:
      if (base.utility.family != UtilityFamily::alpha_fair) {
        throw std::invalid_argument("an alpha sweep needs the alpha_fair utility family");
      }
      s.utility = alpha_fair(value);
      break;
  }
  return s;
}

/// Checks every grid point builds and every scheme applies there.
inline void validate_grid(const Scenario& base, const ExperimentGrid& grid) {
  grid.validate();
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const std::string field = "grid.values[" + std::to_string(i) + "]";
    Scenario s;
    try {
      s = apply_point(base, grid.variable, grid.values[i]);
    } catch (const std::exception& e) {
      throw SpecError(field, e.what());
    }
    if (!s.utility.satisfies_scale_condition) {
      throw SpecError("utility", "violates the scale condition; leasing decisions are undefined");
    }
    for (Scheme sc : grid.schemes) {
      if (sc != Scheme::two_stage && !s.utility.invertible()) {
        throw SpecError(field, std::string(to_string(sc)) + " needs an invertible utility derivative (alpha > 0)");
      }
    }
  }
}

struct SweepOptions {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::function<bool(double)> skip;                            // points already done
  std::function<void(double, const std::vector<SweepRow>&)> on_point;  // called in grid order
  SessionBank* bank = nullptr;
  ThetaCache* thetas = nullptr;
};

/// Runs every scheme at every grid point on common sessions.
inline std::vector<SweepRow> sweep(const Scenario& base, const ExperimentGrid& grid, const SweepOptions& opts) {
  validate_grid(base, grid);
  SessionBank local_bank(opts.seed);
  ThetaCache local_thetas(opts.seed);
  SessionBank& bank = opts.bank != nullptr ? *opts.bank : local_bank;
  ThetaCache& thetas = opts.thetas != nullptr ? *opts.thetas : local_thetas;
  const unsigned workers = resolve_workers(opts.workers);
  std::vector<SweepRow> all;
  for (double value : grid.values) {
    if (opts.skip && opts.skip(value)) {
      continue;
    }
    const Scenario s = apply_point(base, grid.variable, value);
    const auto& sessions = bank.sessions(s, grid.sessions, true, workers);
    std::vector<SweepRow> rows;
    for (Scheme scheme : grid.schemes) {
      double reserved = 0.0;
      switch (scheme) {
        case Scheme::two_stage:
          reserved = two_stage_plan(s, opts.seed, workers, &thetas).reserved;
          break;
        case Scheme::reservation_only:
          reserved = baseline_reservation_only(mean_theta(s, sessions), s.utility, s.prices);
          break;
        case Scheme::on_demand_only:
          reserved = 0.0;
          break;
      }
      SweepRow row = run_period(s, scheme, reserved, sessions, workers);
      row.value = value;
      rows.push_back(row);
    }
    if (opts.on_point) {
      opts.on_point(value, rows);
    }
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

/// %.9g, the fixed output precision of every emitted number.
inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string sweep_csv_header() {
  return "sweep_value,scheme,n_r,mean_n_s,se_n_s,mean_total_sc,mean_cost_per_sc,mean_surplus,se_surplus";
}

inline std::string sweep_csv_line(const SweepRow& r) {
  std::string line = format_number(r.value);
  line += ',';
  line += to_string(r.scheme);
  for (double x : {r.reserved, r.on_demand.mean, r.on_demand.standard_error, r.mean_total_sc, r.mean_cost_per_sc,
                   r.surplus.mean, r.surplus.standard_error}) {
    line += ',';
    line += format_number(x);
  }
  return line;
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_MONTECARLO_HPP
