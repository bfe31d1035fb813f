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

#ifndef SPECTRUM_LEASE_COMMANDS_HPP
#define SPECTRUM_LEASE_COMMANDS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spectrum_lease/config.hpp"
#include "spectrum_lease/dra.hpp"
#include "spectrum_lease/leasing.hpp"
#include "spectrum_lease/montecarlo.hpp"
#include "spectrum_lease/random.hpp"
#include "spectrum_lease/scenario.hpp"

namespace spectrum_lease {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config_error = 2 };

/// Command-line overrides applied on top of the config file.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> output_dir;
  bool resume = false;
};

struct RunContext {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path out;
};

inline RunContext make_context(const ExperimentConfig& config, const RunOptions& opts) {
  RunContext ctx;
  ctx.seed = opts.seed.value_or(config.seed);
  ctx.workers = resolve_workers(opts.workers.value_or(config.workers));
  ctx.out = opts.output_dir.value_or(config.output_dir);
  std::filesystem::create_directories(ctx.out);
  return ctx;
}

namespace detail {

/// Rounds to the fixed 9 significant digits so JSON numbers print the same
/// way as CSV fields.
inline nlohmann::json num(double x) {
  if (!std::isfinite(x)) {
    return nullptr;
  }
  return std::stod(format_number(x));
}

inline nlohmann::json estimate_json(const Estimate& e) {
  return {{"mean", num(e.mean)}, {"standard_error", num(e.standard_error)}, {"samples", e.count}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

/// Theta of `count` fresh user sets from the given stream family.
inline std::vector<double> sample_thetas(const Scenario& s, std::uint64_t seed, StreamTag tag, std::size_t count,
                                         unsigned workers) {
  return make_theta_source(s.traffic, s.utility, s.channel, seed, tag, s.solver.pf_fast_path, workers)(0, count);
}

inline std::vector<double> gradients_at(const Scenario& s, const std::vector<double>& thetas, double reserved) {
  std::vector<double> g(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    g[i] = sample_gradient(thetas[i], reserved, s.utility, s.prices);
  }
  return g;
}

}  // namespace detail

/// Result of the solve command, also written as leaseplan.json.
struct SolveSummary {
  LeasePlan plan;
  std::optional<LeasePlan> sgd;   // SGD run, also when the plan came from the closed-form root
  Estimate stationarity;          // fresh-sample gradient at plan.reserved
  Estimate mean_theta;
  std::optional<double> reservation_only;
  nlohmann::json json;
};

inline SolveSummary solve_plan(const ExperimentConfig& config, const RunContext& ctx) {
  const Scenario s = config.scenario();
  require_scale_condition(s.utility);
  SolveSummary out;
  const auto sgd_opts = s.solver.sgd(ctx.workers);
  if (no_reservation_discount(s.prices)) {
    out.plan = no_discount_plan();
  } else {
    LeasePlan sgd = sgd_reservation(s.traffic, s.utility, s.channel, s.prices, ctx.seed, sgd_opts);
    if (s.pf_fast()) {
      out.plan = pf_reservation_plan(s.traffic, s.prices);
      out.sgd = std::move(sgd);
    } else {
      out.plan = std::move(sgd);
    }
  }
  const auto thetas =
      detail::sample_thetas(s, ctx.seed, StreamTag::theta_estimate, s.solver.stationarity_samples, ctx.workers);
  out.mean_theta = estimate(thetas);
  if (s.pf_fast()) {
    out.mean_theta = {s.traffic.mean(), 0.0, 0};
  }
  out.stationarity = estimate(detail::gradients_at(s, thetas, out.plan.reserved));
  if (s.utility.invertible()) {
    out.reservation_only = baseline_reservation_only(out.mean_theta.mean, s.utility, s.prices);
  }

  using nlohmann::json;
  using detail::num;
  json j;
  j["seed"] = ctx.seed;
  j["utility"] = s.utility.name;
  j["method"] = to_string(out.plan.method);
  j["reason"] = out.plan.reason;
  j["n_r"] = num(out.plan.reserved);
  j["n_r_rounded"] = out.plan.reserved_rounded;
  j["reservation_price"] = num(s.prices.reservation_price);
  j["mean_on_demand_price"] = num(s.prices.on_demand.mean());
  j["on_demand_rule"] = {
      {"formula", s.utility.invertible() ? "n_s = max(inverse_gradient(c_s / (u_g * theta)) - n_r, 0)"
                                         : "n_s = sc_cap - n_r if c_s < u_g * theta else 0"},
      {"utility_scale", num(s.prices.utility_scale)},
      {"sc_cap", num(s.prices.sc_cap)}};
  j["mean_theta"] = detail::estimate_json(out.mean_theta);
  j["stationarity_gradient"] = detail::estimate_json(out.stationarity);
  j["reservation_only_n_r"] = out.reservation_only ? num(*out.reservation_only) : json(nullptr);
  const LeasePlan* sgd = out.plan.method == ReservationMethod::sgd ? &out.plan : (out.sgd ? &*out.sgd : nullptr);
  if (sgd != nullptr) {
    j["sgd"] = {{"iterations", sgd_opts.iterations},
                {"step0", num(sgd_opts.step0)},
                {"n_r", num(sgd->reserved)},
                {"in_sample_gradient", detail::estimate_json(sgd->gradient_at_solution)}};
  } else {
    j["sgd"] = nullptr;
  }
  out.json = std::move(j);
  return out;
}

inline std::string sgd_trace_csv(const SolveSummary& summary) {
  std::string text = "iteration,n_r,theta,gradient\n";
  const LeasePlan* sgd =
      summary.plan.method == ReservationMethod::sgd ? &summary.plan : (summary.sgd ? &*summary.sgd : nullptr);
  if (sgd == nullptr) {
    return text;
  }
  for (const SgdStep& st : sgd->history) {
    text += std::to_string(st.iteration);
    for (double x : {st.reserved, st.theta, st.gradient}) {
      text += ',';
      text += std::isfinite(x) ? format_number(x) : std::string();
    }
    text += '\n';
  }
  return text;
}

/// Writes leaseplan.json and sgd_trace.csv.
inline int cmd_solve(const ExperimentConfig& config, const RunOptions& opts, std::ostream& log = std::cerr) {
  const RunContext ctx = make_context(config, opts);
  const SolveSummary summary = solve_plan(config, ctx);
  detail::write_text(ctx.out / "leaseplan.json", summary.json.dump(2) + "\n");
  detail::write_text(ctx.out / "sgd_trace.csv", sgd_trace_csv(summary));
  log << "n_r = " << format_number(summary.plan.reserved) << " (" << to_string(summary.plan.method) << ")\n";
  return exit_ok;
}

namespace detail {

/// Completed grid points of an existing sweep.csv, keyed by their formatted
/// sweep value; a point counts only if every scheme line is present in order.
inline std::map<std::string, std::vector<std::string>> completed_points(const std::filesystem::path& path,
                                                                        const ExperimentGrid& grid) {
  std::map<std::string, std::vector<std::string>> done;
  std::ifstream in(path);
  if (!in) {
    return done;
  }
  std::string line;
  if (!std::getline(in, line) || line != sweep_csv_header()) {
    return done;
  }
  std::map<std::string, std::vector<std::string>> lines;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      continue;
    }
    lines[line.substr(0, comma)].push_back(line);
  }
  for (auto& [value, rows] : lines) {
    if (rows.size() != grid.schemes.size()) {
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string prefix = value + "," + to_string(grid.schemes[i]) + ",";
      ok = ok && rows[i].rfind(prefix, 0) == 0 && std::count(rows[i].begin(), rows[i].end(), ',') == 8;
    }
    if (ok) {
      done.emplace(value, std::move(rows));
    }
  }
  return done;
}

}  // namespace detail

/// Writes sweep.csv, rewriting it after every grid point. With `resume`,
/// points already complete in an existing file are kept verbatim.
inline int cmd_sweep(const ExperimentConfig& config, const RunOptions& opts, std::ostream& log = std::cerr) {
  if (!config.grid) {
    throw SpecError("grid", "the sweep command needs a grid section");
  }
  const ExperimentGrid& grid = *config.grid;
  const RunContext ctx = make_context(config, opts);
  const Scenario base = config.scenario();
  const auto path = ctx.out / "sweep.csv";
  auto done = opts.resume ? detail::completed_points(path, grid) : std::map<std::string, std::vector<std::string>>{};
  if (!done.empty()) {
    log << "resuming: " << done.size() << " of " << grid.values.size() << " points already complete\n";
  }
  auto flush = [&] {
    std::string text = sweep_csv_header() + "\n";
    for (double v : grid.values) {
      const auto it = done.find(format_number(v));
      if (it == done.end()) {
        continue;
      }
      for (const auto& l : it->second) {
        text += l + "\n";
      }
    }
    detail::write_text(path, text);
  };
  SweepOptions so;
  so.seed = ctx.seed;
  so.workers = ctx.workers;
  so.skip = [&](double v) { return done.count(format_number(v)) > 0; };
  so.on_point = [&](double v, const std::vector<SweepRow>& rows) {
    std::vector<std::string> lines;
    for (const auto& r : rows) {
      lines.push_back(sweep_csv_line(r));
    }
    done[format_number(v)] = std::move(lines);
    flush();
    log << to_string(grid.variable) << " = " << format_number(v) << " done\n";
  };
  sweep(base, grid, so);
  flush();
  return exit_ok;
}

/// One named validation check.
struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string observed;
  std::string expected;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

namespace detail {

inline std::string fmt(double x) { return format_number(x); }

inline CheckResult skipped(std::string name, std::string why) {
  CheckResult c;
  c.name = std::move(name);
  c.passed = true;
  c.skipped = true;
  c.detail = std::move(why);
  return c;
}

/// User sets with K uniform on {1..max_users} for the solver checks.
inline std::vector<UserSet> validation_sessions(const Scenario& s, const ValidationSettings& v, std::uint64_t seed,
                                                std::size_t count, std::uint64_t offset) {
  const TrafficModel k = TrafficModel::uniform(1, v.max_users);
  std::vector<UserSet> out;
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(seed, StreamTag::validation, offset + i);
    out.push_back(sample_user_set(k, s.channel, rng));
  }
  return out;
}

inline double max_relative_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  }
  return worst;
}

inline CheckResult check_scale(const Scenario& s) {
  CheckResult c;
  c.name = "scale_condition";
  c.passed = check_scale_condition(s.utility);
  c.observed = c.passed ? "holds" : "violated";
  c.expected = "U'(r1)/U'(r2) == U'(r1/n)/U'(r2/n) within 1e-9 relative for all probes";
  c.detail = "utility " + s.utility.name +
             (c.passed ? "" : ": per-user throughput is not linear in the SC count, so the leasing closed forms do not apply");
  return c;
}

inline CheckResult check_uniqueness(const Scenario& s, const ValidationSettings& v, std::uint64_t seed) {
  CheckResult c;
  c.name = "fixed_point_uniqueness";
  const auto sets = validation_sessions(s, v, seed, v.fixed_point_sessions, 0);
  double worst_diff = 0.0;
  double worst_residual = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto base = solve_fixed_point(sets[i], s.utility, s.channel);
    worst_residual = std::max(worst_residual, base.residual);
    RandomStream rng(seed, StreamTag::validation, 1000000 + i);
    for (std::size_t r = 0; r < v.restarts; ++r) {
      FixedPointOptions fo;
      fo.initial.resize(sets[i].count());
      for (auto& x : fo.initial) {
        x = std::exp(-4.0 + 5.0 * rng.uniform());
      }
      const auto other = solve_fixed_point(sets[i], s.utility, s.channel, fo);
      worst_diff = std::max(worst_diff, max_relative_diff(other.unit_throughputs, base.unit_throughputs));
      worst_residual = std::max(worst_residual, other.residual);
    }
  }
  c.passed = worst_diff <= v.restart_tolerance;
  c.observed = "max relative spread " + fmt(worst_diff) + ", max residual " + fmt(worst_residual);
  c.expected = "spread <= " + fmt(v.restart_tolerance);
  c.detail = std::to_string(sets.size()) + " sessions x " + std::to_string(v.restarts) + " random restarts";
  return c;
}

inline CheckResult check_linearity(const Scenario& s, const ValidationSettings& v, std::uint64_t seed) {
  CheckResult c;
  c.name = "throughput_linearity";
  const auto sets = validation_sessions(s, v, seed, v.fixed_point_sessions, 2000000);
  double worst = 0.0;
  for (const auto& users : sets) {
    const auto unit = solve_fixed_point(users, s.utility, s.channel);
    for (double n : v.linearity_counts) {
      FixedPointOptions fo;
      fo.sc_count = n;
      const auto scaled = solve_fixed_point(users, s.utility, s.channel, fo);
      worst = std::max(worst, max_relative_diff(scaled.unit_throughputs, unit.unit_throughputs));
    }
  }
  const double tol = 1e-6;
  c.passed = worst <= tol;
  c.observed = "max relative deviation of r(n)/n from r(1): " + fmt(worst);
  c.expected = "<= " + fmt(tol);
  return c;
}

inline CheckResult check_ergodic(const Scenario& s, const ValidationSettings& v, std::uint64_t seed) {
  CheckResult c;
  c.name = "ergodic_throughput";
  const auto sets = validation_sessions(s, v, seed, v.ergodic_sessions, 3000000);
  double worst_rel = 0.0;
  double worst_z = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto profile = solve_fixed_point(sets[i], s.utility, s.channel);
    RandomStream rng(seed, StreamTag::fading, i);
    const auto trace = simulate_session(sets[i], s.utility, s.channel, profile, v.ergodic_scs, v.ergodic_slots, rng);
    for (std::size_t k = 0; k < sets[i].count(); ++k) {
      const double target = static_cast<double>(v.ergodic_scs) * profile.unit_throughputs[k];
      const double err = std::abs(trace.throughputs[k] - target);
      const double se = throughput_standard_error(trace, k);
      worst_rel = std::max(worst_rel, err / target);
      if (se > 0.0) {
        worst_z = std::max(worst_z, err / se);
      }
      ok = ok && (err <= v.ergodic_tolerance * target || err <= 4.0 * se);
    }
  }
  c.passed = ok;
  c.observed = "max relative error " + fmt(worst_rel) + ", max |z| " + fmt(worst_z);
  c.expected = "each user within " + fmt(v.ergodic_tolerance) + " relative or 4 standard errors of n_sc * r(1)";
  c.detail = std::to_string(v.ergodic_slots) + " slots, " + std::to_string(v.ergodic_scs) + " SCs";
  return c;
}

/// Logarithmic utility: c_r n_r + E[c_s n_s] = u_g E[K] at the optimal n_r.
inline CheckResult check_total_spend(const Scenario& s, const ValidationSettings& v, std::uint64_t seed,
                                     unsigned workers) {
  if (!s.utility.is_proportional_fair()) {
    return skipped("total_spend_identity", "holds for the logarithmic utility only");
  }
  CheckResult c;
  c.name = "total_spend_identity";
  Scenario fast = s;
  fast.solver.pf_fast_path = true;
  const double reserved = pf_reservation_root(s.traffic, s.prices);
  std::vector<double> spend(v.total_spend_sessions);
  parallel_for(spend.size(), workers, [&](std::size_t i) {
    const SessionRecord rec = sample_session(fast, seed, i, false);
    const double price = s.prices.on_demand.quantile(rec.price_variate);
    spend[i] = price * optimal_on_demand(rec.theta, price, reserved, s.utility, s.prices);
  });
  const Estimate e = estimate(spend);
  const double gap = s.prices.reservation_price * reserved + e.mean - s.prices.utility_scale * s.traffic.mean();
  c.passed = std::abs(gap) <= 3.0 * e.standard_error;
  c.observed = "c_r n_r + mean(c_s n_s) - u_g E[K] = " + fmt(gap);
  c.expected = "|gap| <= 3 SE = " + fmt(3.0 * e.standard_error);
  c.detail = "n_r = " + fmt(reserved) + ", " + std::to_string(spend.size()) + " sessions";
  return c;
}

inline CheckResult check_stationarity(const Scenario& s, std::uint64_t seed, unsigned workers) {
  CheckResult c;
  c.name = "sgd_stationarity";
  if (no_reservation_discount(s.prices)) {
    const auto plan = sgd_reservation(s.traffic, s.utility, s.channel, s.prices, seed, s.solver.sgd(workers));
    c.passed = plan.reserved == 0.0;
    c.observed = "n_r = " + fmt(plan.reserved);
    c.expected = "n_r = 0 when the mean on-demand price does not exceed c_r";
    return c;
  }
  auto opts = s.solver.sgd(workers);
  opts.record_history = false;
  const auto plan = sgd_reservation(s.traffic, s.utility, s.channel, s.prices, seed, opts);
  if (plan.reserved <= 0.0) {
    return skipped("sgd_stationarity", "SGD returned n_r = 0; the first-order condition need not hold at the boundary");
  }
  const auto thetas = sample_thetas(s, seed, StreamTag::validation, s.solver.stationarity_samples, workers);
  const Estimate e = estimate(gradients_at(s, thetas, plan.reserved));
  c.passed = std::abs(e.mean) <= 3.0 * e.standard_error;
  c.observed = "mean gradient " + fmt(e.mean) + " at n_r = " + fmt(plan.reserved);
  c.expected = "|mean| <= 3 SE = " + fmt(3.0 * e.standard_error);
  c.detail = std::to_string(e.count) + " fresh user sets";
  return c;
}

/// Surplus from the branch formula against -c_s n_s + u_g G(X, n_r + n_s)
/// summed directly from the throughput profile.
inline CheckResult check_recomposition(const Scenario& s, const ValidationSettings& v, std::uint64_t seed) {
  CheckResult c;
  c.name = "surplus_recomposition";
  const double scale = s.prices.utility_scale * std::max(s.traffic.mean(), 1.0) / s.prices.on_demand.mean();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < v.recomposition_sessions; ++i) {
    const SessionRecord rec = sample_session(s, seed, i, true);
    if (rec.users == 0) {
      continue;
    }
    RandomStream rng(seed, StreamTag::validation, 4000000 + i);
    const double reserved = 2.0 * scale * rng.uniform_open();
    const double price = s.prices.on_demand.quantile(rec.price_variate);
    const double q = session_surplus(rec.profile, price, reserved, s.utility, s.prices);
    const double ns = optimal_on_demand(rec.theta, price, reserved, s.utility, s.prices);
    double g = 0.0;
    for (double r : rec.profile.unit_throughputs) {
      g += s.utility.value((reserved + ns) * r);
    }
    const double recomposed = -price * ns + s.prices.utility_scale * g;
    worst = std::max(worst, std::abs(q - recomposed) / std::max(1.0, std::abs(q)));
    ++checked;
  }
  c.passed = worst <= 1e-9;
  c.observed = "max relative difference " + fmt(worst);
  c.expected = "<= 1e-09";
  c.detail = std::to_string(checked) + " non-empty sessions at random n_r";
  return c;
}

}  // namespace detail

inline ValidationReport run_validation(const ExperimentConfig& config, const RunContext& ctx) {
  const Scenario s = config.scenario();
  const auto& v = config.validation;
  ValidationReport report;
  report.checks.push_back(detail::check_scale(s));
  if (!report.checks.back().passed) {
    for (const char* name : {"fixed_point_uniqueness", "throughput_linearity", "ergodic_throughput",
                             "total_spend_identity", "sgd_stationarity", "surplus_recomposition"}) {
      report.checks.push_back(detail::skipped(name, "requires the scale condition"));
    }
    return report;
  }
  report.checks.push_back(detail::check_uniqueness(s, v, ctx.seed));
  report.checks.push_back(detail::check_linearity(s, v, ctx.seed));
  report.checks.push_back(detail::check_ergodic(s, v, ctx.seed));
  report.checks.push_back(detail::check_total_spend(s, v, ctx.seed, ctx.workers));
  report.checks.push_back(detail::check_stationarity(s, ctx.seed, ctx.workers));
  report.checks.push_back(detail::check_recomposition(s, v, ctx.seed));
  return report;
}

inline nlohmann::json report_json(const ValidationReport& report, std::uint64_t seed) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"status", c.skipped ? "skipped" : (c.passed ? "pass" : "fail")},
                      {"observed", c.observed},
                      {"expected", c.expected},
                      {"detail", c.detail}});
  }
  return {{"seed", seed}, {"passed", report.passed()}, {"checks", checks}};
}

/// Writes validate_report.json; exit_failure when any check fails.
inline int cmd_validate(const ExperimentConfig& config, const RunOptions& opts, std::ostream& log = std::cerr) {
  const RunContext ctx = make_context(config, opts);
  const ValidationReport report = run_validation(config, ctx);
  detail::write_text(ctx.out / "validate_report.json", report_json(report, ctx.seed).dump(2) + "\n");
  for (const auto& c : report.checks) {
    log << (c.skipped ? "SKIP " : (c.passed ? "PASS " : "FAIL ")) << c.name;
    if (!c.skipped) {
      log << ": " << c.observed << " (expected " << c.expected << ")";
    } else {
      log << ": " << c.detail;
    }
    log << "\n";
  }
  return report.passed() ? exit_ok : exit_failure;
}

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_COMMANDS_HPP
