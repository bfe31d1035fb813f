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

#ifndef SPECTRUM_LEASE_CONFIG_HPP
#define SPECTRUM_LEASE_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spectrum_lease/montecarlo.hpp"
#include "spectrum_lease/scenario.hpp"

namespace spectrum_lease {

/// Sizes of the checks run by the validate command.
struct ValidationSettings {
  std::size_t max_users = 8;              // K range of the sessions used by the fixed-point checks
  std::size_t fixed_point_sessions = 5;
  std::size_t restarts = 10;
  double restart_tolerance = 1e-6;        // relative
  std::vector<double> linearity_counts{2.0, 5.0, 10.0};
  std::size_t ergodic_sessions = 3;
  std::size_t ergodic_slots = 100000;
  std::size_t ergodic_scs = 8;
  double ergodic_tolerance = 0.01;        // relative, widened to 4 standard errors when noise dominates
  std::size_t total_spend_sessions = 100000;
  std::size_t recomposition_sessions = 200;

  void validate() const {
    if (max_users == 0) {
      throw SpecError("validation.max_users", "must be >= 1");
    }
    if (restarts == 0) {
      throw SpecError("validation.restarts", "must be >= 1");
    }
    if (!(restart_tolerance > 0.0)) {
      throw SpecError("validation.restart_tolerance", "must be positive");
    }
    for (std::size_t i = 0; i < linearity_counts.size(); ++i) {
      if (!(linearity_counts[i] > 0.0)) {
        throw SpecError("validation.linearity_counts[" + std::to_string(i) + "]", "must be positive");
      }
    }
    if (ergodic_slots < 2) {
      throw SpecError("validation.ergodic_slots", "must be >= 2");
    }
    if (ergodic_scs == 0) {
      throw SpecError("validation.ergodic_scs", "must be >= 1");
    }
    if (!(ergodic_tolerance > 0.0)) {
      throw SpecError("validation.ergodic_tolerance", "must be positive");
    }
    if (total_spend_sessions < 2) {
      throw SpecError("validation.total_spend_sessions", "must be >= 2");
    }
  }

  friend bool operator==(const ValidationSettings&, const ValidationSettings&) = default;
};

/// One experiment: models, solver settings, optional sweep grid and run
/// settings. Read from and written to JSON.
struct ExperimentConfig {
  std::uint64_t seed = 20260;
  unsigned workers = 0;  // 0 = all cores
  std::string output_dir = "out";
  ChannelParams channel;
  UtilitySpec utility;
  PriceSpec prices;
  TrafficSpec traffic;
  SolverSettings solver;
  std::optional<ExperimentGrid> grid;
  ValidationSettings validation;

  Scenario scenario() const {
    Scenario s;
    try {
      channel.validate();
    } catch (const std::exception& e) {
      throw SpecError("channel", e.what());
    }
    s.channel = channel;
    s.utility = utility.build();
    s.prices = prices.build();
    s.traffic = traffic.build();
    solver.validate();
    s.solver = solver;
    return s;
  }

  /// Cross-field checks. Utilities violating the scale condition are
  /// accepted here so validation can report them.
  void validate() const {
    const Scenario s = scenario();
    validation.validate();
    if (grid) {
      ExperimentGrid g = *grid;
      g.validate();
      if (s.utility.satisfies_scale_condition) {
        validate_grid(s, g);
      }
    }
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw SpecError(path.empty() ? "<root>" : path, "expected an object");
  }
}

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) {
      known = known || it.key() == k;
    }
    if (!known) {
      throw SpecError(join_path(path, it.key()), "unknown key");
    }
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw SpecError(path, "expected a number");
  }
  return j.get<double>();
}

inline std::uint64_t get_count(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) {
    return j.get<std::uint64_t>();
  }
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw SpecError(path, "expected a non-negative integer");
}

inline bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) {
    throw SpecError(path, "expected true or false");
  }
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) {
    throw SpecError(path, "expected a string");
  }
  return j.get<std::string>();
}

inline std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) {
    throw SpecError(path, "expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <typename T, typename Get>
void read_if(const json& j, const char* key, const std::string& path, T& target, Get get) {
  if (j.contains(key)) {
    target = get(j.at(key), join_path(path, key));
  }
}

inline void read_optional_number(const json& j, const char* key, const std::string& path,
                                 std::optional<double>& target) {
  if (!j.contains(key)) {
    target.reset();
  } else if (j.at(key).is_null()) {
    target.reset();
  } else {
    target = get_number(j.at(key), join_path(path, key));
  }
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline ChannelParams channel_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path,
             {"bandwidth_per_sc", "capacity_margin", "pathloss_exponent", "cell_radius", "edge_snr_db", "tx_power",
              "noise_psd", "min_distance_fraction"});
  ChannelParams c;
  read_if(j, "bandwidth_per_sc", path, c.bandwidth_per_sc, get_number);
  read_if(j, "capacity_margin", path, c.capacity_margin, get_number);
  read_if(j, "pathloss_exponent", path, c.pathloss_exponent, get_number);
  read_if(j, "cell_radius", path, c.cell_radius, get_number);
  read_if(j, "min_distance_fraction", path, c.min_distance_fraction, get_number);
  const bool physical = j.contains("tx_power") || j.contains("noise_psd");
  if (physical || j.contains("edge_snr_db")) {
    read_optional_number(j, "edge_snr_db", path, c.edge_snr_db);
  }
  read_optional_number(j, "tx_power", path, c.tx_power);
  read_optional_number(j, "noise_psd", path, c.noise_psd);
  return c;
}

inline json channel_to_json(const ChannelParams& c) {
  json j;
  j["bandwidth_per_sc"] = c.bandwidth_per_sc;
  j["capacity_margin"] = c.capacity_margin;
  j["pathloss_exponent"] = c.pathloss_exponent;
  j["cell_radius"] = c.cell_radius;
  j["edge_snr_db"] = optional_number(c.edge_snr_db);
  j["tx_power"] = optional_number(c.tx_power);
  j["noise_psd"] = optional_number(c.noise_psd);
  j["min_distance_fraction"] = c.min_distance_fraction;
  return j;
}

inline UtilitySpec utility_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"family", "alpha"});
  UtilitySpec u;
  const std::string family = j.contains("family") ? get_string(j.at("family"), path + ".family") : "alpha_fair";
  if (family == "alpha_fair") {
    u.kind = UtilityKind::alpha_fair;
  } else if (family == "exponential") {
    u.kind = UtilityKind::exponential;
  } else if (family == "diminishing_return") {
    u.kind = UtilityKind::diminishing_return;
  } else {
    throw SpecError(path + ".family", "expected alpha_fair, exponential or diminishing_return, got '" + family + "'");
  }
  read_if(j, "alpha", path, u.alpha, get_number);
  if (u.kind == UtilityKind::alpha_fair && !(u.alpha >= 0.0)) {
    throw SpecError(path + ".alpha", "must be >= 0");
  }
  return u;
}

inline json utility_to_json(const UtilitySpec& u) {
  json j;
  switch (u.kind) {
    case UtilityKind::alpha_fair:
      j["family"] = "alpha_fair";
      break;
    case UtilityKind::exponential:
      j["family"] = "exponential";
      break;
    case UtilityKind::diminishing_return:
      j["family"] = "diminishing_return";
      break;
  }
  j["alpha"] = u.alpha;
  return j;
}

inline OnDemandSpec on_demand_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"family", "low", "high", "mean", "cv"});
  OnDemandSpec o;
  const std::string family = j.contains("family") ? get_string(j.at("family"), path + ".family") : "uniform";
  if (family == "uniform") {
    o.family = PriceFamily::uniform;
  } else if (family == "lognormal") {
    o.family = PriceFamily::lognormal;
  } else {
    throw SpecError(path + ".family", "expected uniform or lognormal, got '" + family + "'");
  }
  read_optional_number(j, "low", path, o.low);
  read_optional_number(j, "high", path, o.high);
  read_optional_number(j, "mean", path, o.mean);
  read_optional_number(j, "cv", path, o.cv);
  return o;
}

inline json on_demand_to_json(const OnDemandSpec& o) {
  json j;
  j["family"] = o.family == PriceFamily::uniform ? "uniform" : "lognormal";
  if (o.low) {
    j["low"] = *o.low;
  }
  if (o.high) {
    j["high"] = *o.high;
  }
  if (o.mean) {
    j["mean"] = *o.mean;
  }
  if (o.cv) {
    j["cv"] = *o.cv;
  }
  return j;
}

inline PriceSpec prices_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"reservation_price", "utility_scale", "on_demand", "sc_cap"});
  PriceSpec p;
  read_if(j, "reservation_price", path, p.reservation_price, get_number);
  read_if(j, "utility_scale", path, p.utility_scale, get_number);
  read_if(j, "sc_cap", path, p.sc_cap, get_number);
  if (j.contains("on_demand")) {
    p.on_demand = on_demand_from_json(j.at("on_demand"), path + ".on_demand");
  }
  return p;
}

inline json prices_to_json(const PriceSpec& p) {
  json j;
  j["reservation_price"] = p.reservation_price;
  j["utility_scale"] = p.utility_scale;
  j["on_demand"] = on_demand_to_json(p.on_demand);
  j["sc_cap"] = p.sc_cap;
  return j;
}

inline TrafficSpec traffic_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"kind", "k_low", "k_up", "mean", "cv", "pmf"});
  TrafficSpec t;
  const std::string kind = j.contains("kind") ? get_string(j.at("kind"), path + ".kind") : "uniform";
  if (kind == "uniform") {
    t.kind = TrafficKind::uniform;
  } else if (kind == "mean_cv") {
    t.kind = TrafficKind::mean_cv;
  } else if (kind == "pmf") {
    t.kind = TrafficKind::pmf;
  } else {
    throw SpecError(path + ".kind", "expected uniform, mean_cv or pmf, got '" + kind + "'");
  }
  read_if(j, "k_low", path, t.k_low, get_count);
  read_if(j, "k_up", path, t.k_up, get_count);
  read_if(j, "mean", path, t.mean, get_number);
  read_if(j, "cv", path, t.cv, get_number);
  read_if(j, "pmf", path, t.pmf, get_numbers);
  return t;
}

inline json traffic_to_json(const TrafficSpec& t) {
  json j;
  switch (t.kind) {
    case TrafficKind::uniform:
      j["kind"] = "uniform";
      break;
    case TrafficKind::mean_cv:
      j["kind"] = "mean_cv";
      break;
    case TrafficKind::pmf:
      j["kind"] = "pmf";
      break;
  }
  j["k_low"] = t.k_low;
  j["k_up"] = t.k_up;
  j["mean"] = t.mean;
  j["cv"] = t.cv;
  j["pmf"] = t.pmf;
  return j;
}

inline SolverSettings solver_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"sgd_iterations", "sgd_step0", "sgd_initial", "pf_fast_path", "stationarity_samples"});
  SolverSettings s;
  read_if(j, "sgd_iterations", path, s.sgd_iterations, get_count);
  read_if(j, "sgd_step0", path, s.sgd_step0, get_number);
  read_optional_number(j, "sgd_initial", path, s.sgd_initial);
  read_if(j, "pf_fast_path", path, s.pf_fast_path, get_bool);
  read_if(j, "stationarity_samples", path, s.stationarity_samples, get_count);
  return s;
}

inline json solver_to_json(const SolverSettings& s) {
  json j;
  j["sgd_iterations"] = s.sgd_iterations;
  j["sgd_step0"] = s.sgd_step0;
  j["sgd_initial"] = optional_number(s.sgd_initial);
  j["pf_fast_path"] = s.pf_fast_path;
  j["stationarity_samples"] = s.stationarity_samples;
  return j;
}

inline ExperimentGrid grid_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"variable", "values", "sessions", "schemes"});
  ExperimentGrid g;
  if (!j.contains("variable")) {
    throw SpecError(path + ".variable", "missing");
  }
  const std::string var = get_string(j.at("variable"), path + ".variable");
  const auto parsed = parse_sweep_variable(var);
  if (!parsed) {
    throw SpecError(path + ".variable", "expected xi_cs, xi_k, mu_cs, mu_k or alpha, got '" + var + "'");
  }
  g.variable = *parsed;
  if (!j.contains("values")) {
    throw SpecError(path + ".values", "missing");
  }
  g.values = get_numbers(j.at("values"), path + ".values");
  read_if(j, "sessions", path, g.sessions, get_count);
  if (j.contains("schemes")) {
    const json& a = j.at("schemes");
    if (!a.is_array()) {
      throw SpecError(path + ".schemes", "expected an array of scheme names");
    }
    g.schemes.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string field = path + ".schemes[" + std::to_string(i) + "]";
      const std::string name = get_string(a[i], field);
      const auto s = parse_scheme(name);
      if (!s) {
        throw SpecError(field, "expected two_stage, reservation_only or on_demand_only, got '" + name + "'");
      }
      g.schemes.push_back(*s);
    }
  }
  return g;
}

inline json grid_to_json(const ExperimentGrid& g) {
  json j;
  j["variable"] = to_string(g.variable);
  j["values"] = g.values;
  j["sessions"] = g.sessions;
  json schemes = json::array();
  for (Scheme s : g.schemes) {
    schemes.push_back(to_string(s));
  }
  j["schemes"] = schemes;
  return j;
}

inline ValidationSettings validation_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path,
             {"max_users", "fixed_point_sessions", "restarts", "restart_tolerance", "linearity_counts",
              "ergodic_sessions", "ergodic_slots", "ergodic_scs", "ergodic_tolerance", "total_spend_sessions",
              "recomposition_sessions"});
  ValidationSettings v;
  read_if(j, "max_users", path, v.max_users, get_count);
  read_if(j, "fixed_point_sessions", path, v.fixed_point_sessions, get_count);
  read_if(j, "restarts", path, v.restarts, get_count);
  read_if(j, "restart_tolerance", path, v.restart_tolerance, get_number);
  read_if(j, "linearity_counts", path, v.linearity_counts, get_numbers);
  read_if(j, "ergodic_sessions", path, v.ergodic_sessions, get_count);
  read_if(j, "ergodic_slots", path, v.ergodic_slots, get_count);
  read_if(j, "ergodic_scs", path, v.ergodic_scs, get_count);
  read_if(j, "ergodic_tolerance", path, v.ergodic_tolerance, get_number);
  read_if(j, "total_spend_sessions", path, v.total_spend_sessions, get_count);
  read_if(j, "recomposition_sessions", path, v.recomposition_sessions, get_count);
  return v;
}

inline json validation_to_json(const ValidationSettings& v) {
  json j;
  j["max_users"] = v.max_users;
  j["fixed_point_sessions"] = v.fixed_point_sessions;
  j["restarts"] = v.restarts;
  j["restart_tolerance"] = v.restart_tolerance;
  j["linearity_counts"] = v.linearity_counts;
  j["ergodic_sessions"] = v.ergodic_sessions;
  j["ergodic_slots"] = v.ergodic_slots;
  j["ergodic_scs"] = v.ergodic_scs;
  j["ergodic_tolerance"] = v.ergodic_tolerance;
  j["total_spend_sessions"] = v.total_spend_sessions;
  j["recomposition_sessions"] = v.recomposition_sessions;
  return j;
}

}  // namespace detail

/// Parses a config tree. Missing sections and keys take their defaults;
/// unknown keys are errors so typos do not silently fall back.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::join_path;
  detail::require_object(j, "");
  detail::allow_keys(j, "",
                     {"seed", "workers", "output_dir", "channel", "utility", "prices", "traffic", "solver", "grid",
                      "validation"});
  ExperimentConfig c;
  detail::read_if(j, "seed", "", c.seed, detail::get_count);
  if (j.contains("workers")) {
    c.workers = static_cast<unsigned>(detail::get_count(j.at("workers"), "workers"));
  }
  detail::read_if(j, "output_dir", "", c.output_dir, detail::get_string);
  if (j.contains("channel")) {
    c.channel = detail::channel_from_json(j.at("channel"), "channel");
  }
  if (j.contains("utility")) {
    c.utility = detail::utility_from_json(j.at("utility"), "utility");
  }
  if (j.contains("prices")) {
    c.prices = detail::prices_from_json(j.at("prices"), "prices");
  }
  if (j.contains("traffic")) {
    c.traffic = detail::traffic_from_json(j.at("traffic"), "traffic");
  }
  if (j.contains("solver")) {
    c.solver = detail::solver_from_json(j.at("solver"), "solver");
  }
  if (j.contains("grid") && !j.at("grid").is_null()) {
    c.grid = detail::grid_from_json(j.at("grid"), "grid");
  }
  if (j.contains("validation")) {
    c.validation = detail::validation_from_json(j.at("validation"), "validation");
  }
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  j["channel"] = detail::channel_to_json(c.channel);
  j["utility"] = detail::utility_to_json(c.utility);
  j["prices"] = detail::prices_to_json(c.prices);
  j["traffic"] = detail::traffic_to_json(c.traffic);
  j["solver"] = detail::solver_to_json(c.solver);
  j["grid"] = c.grid ? detail::grid_to_json(*c.grid) : nlohmann::json(nullptr);
  j["validation"] = detail::validation_to_json(c.validation);
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("<file>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SpecError("<file>", "cannot read config '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_CONFIG_HPP
