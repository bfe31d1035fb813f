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

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "spectrum_lease/montecarlo.hpp"

namespace sl = spectrum_lease;

namespace {

sl::Scenario small_scenario() {
  sl::Scenario s;
  s.traffic = sl::TrafficModel::uniform(0, 4);
  return s;
}

std::size_t count_fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST(Names, RoundTrip) {
  for (auto v : {sl::Scheme::two_stage, sl::Scheme::reservation_only, sl::Scheme::on_demand_only}) {
    EXPECT_EQ(sl::parse_scheme(sl::to_string(v)), v);
  }
  for (auto v : {sl::SweepVariable::xi_cs, sl::SweepVariable::xi_k, sl::SweepVariable::mu_cs, sl::SweepVariable::mu_k,
                 sl::SweepVariable::alpha}) {
    EXPECT_EQ(sl::parse_sweep_variable(sl::to_string(v)), v);
  }
  EXPECT_FALSE(sl::parse_scheme("both").has_value());
  EXPECT_FALSE(sl::parse_sweep_variable("beta").has_value());
}

TEST(Sessions, StreamsAreIndexedNotSequential) {
  const auto s = small_scenario();
  const auto a = sl::sample_session(s, 5, 17, false);
  const auto b = sl::sample_session(s, 5, 17, false);
  EXPECT_EQ(a.users, b.users);
  EXPECT_EQ(a.price_variate, b.price_variate);
  EXPECT_GT(a.price_variate, 0.0);
  EXPECT_LT(a.price_variate, 1.0);
  EXPECT_EQ(a.theta, static_cast<double>(a.users));
  const auto c = sl::sample_session(s, 6, 17, false);
  EXPECT_NE(a.price_variate, c.price_variate);
}

TEST(Sessions, BankReusesSessionsAcrossPricePoints) {
  const auto base = small_scenario();
  sl::SessionBank bank(3);
  const auto& first = bank.sessions(base, 50, false, 1);
  const auto moved = sl::apply_point(base, sl::SweepVariable::xi_cs, 0.1);
  const auto& second = bank.sessions(moved, 50, false, 1);
  EXPECT_EQ(&first, &second);
  const auto other = sl::apply_point(base, sl::SweepVariable::xi_k, 0.3);
  EXPECT_NE(&first, &bank.sessions(other, 50, false, 1));
}

TEST(Period, EmptyTrafficCostsNothing) {
  sl::Scenario s;
  s.traffic = sl::TrafficModel::uniform(0, 0);
  sl::SessionBank bank(1);
  const auto& sessions = bank.sessions(s, 100, true, 1);
  const auto plan = sl::two_stage_plan(s, 1, 1);
  EXPECT_EQ(plan.reserved, 0.0);
  EXPECT_EQ(sl::baseline_reservation_only(sl::mean_theta(s, sessions), s.utility, s.prices), 0.0);
  for (auto scheme : {sl::Scheme::two_stage, sl::Scheme::reservation_only, sl::Scheme::on_demand_only}) {
    const auto row = sl::run_period(s, scheme, 0.0, sessions, 1);
    EXPECT_EQ(row.on_demand.mean, 0.0);
    EXPECT_EQ(row.surplus.mean, 0.0);
    EXPECT_TRUE(std::isnan(row.mean_cost_per_sc));
  }
}

TEST(Period, StatisticsMatchDirectRecomputation) {
  const auto s = small_scenario();
  sl::SessionBank bank(8);
  const auto& sessions = bank.sessions(s, 2000, false, 1);
  const double reserved = 7.5;
  const auto row = sl::run_period(s, sl::Scheme::two_stage, reserved, sessions, 1, false);
  // logarithmic utility: n_s = max(u_g K / c_s - n_r, 0), c_s uniform on [0.8, 1.8]
  double ns_sum = 0.0;
  double spend_sum = 0.0;
  for (const auto& r : sessions) {
    const double price = 0.8 + r.price_variate;
    const double ns = r.users == 0 ? 0.0 : std::max(5.0 * r.users / price - reserved, 0.0);
    ns_sum += ns;
    spend_sum += price * ns;
  }
  const double n = static_cast<double>(sessions.size());
  EXPECT_NEAR(row.on_demand.mean, ns_sum / n, 1e-9);
  EXPECT_NEAR(row.mean_on_demand_spend, spend_sum / n, 1e-9);
  EXPECT_NEAR(row.mean_total_sc, reserved + ns_sum / n, 1e-9);
  EXPECT_NEAR(row.mean_cost_per_sc, (reserved + spend_sum / n) / (reserved + ns_sum / n), 1e-12);
  EXPECT_TRUE(std::isnan(row.surplus.mean));
}

TEST(Period, StandardErrorShrinksWithSessions) {
  const auto s = small_scenario();
  sl::SessionBank bank(11);
  const auto small = sl::run_period(s, sl::Scheme::two_stage, 5.0, bank.sessions(s, 4000, false, 1), 1, false);
  const auto large = sl::run_period(s, sl::Scheme::two_stage, 5.0, bank.sessions(s, 8000, false, 1), 1, false);
  const double ratio = small.on_demand.standard_error / large.on_demand.standard_error;
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.1 * std::sqrt(2.0));
}

TEST(Period, ConstantPriceMakesSpendProportional) {
  const auto s = sl::apply_point(small_scenario(), sl::SweepVariable::xi_cs, 0.0);
  sl::SessionBank bank(2);
  const auto& sessions = bank.sessions(s, 1000, false, 1);
  const auto row = sl::run_period(s, sl::Scheme::on_demand_only, 0.0, sessions, 1, false);
  EXPECT_NEAR(row.mean_on_demand_spend, s.prices.on_demand.mean() * row.on_demand.mean, 1e-9);
  EXPECT_NEAR(row.mean_cost_per_sc, s.prices.on_demand.mean(), 1e-12);
}

TEST(Period, SurplusUsesCommonSessions) {
  const auto s = small_scenario();
  sl::SessionBank bank(4);
  const auto& sessions = bank.sessions(s, 300, true, 1);
  const double nr = sl::pf_reservation_root(s.traffic, s.prices);
  const auto two = sl::run_period(s, sl::Scheme::two_stage, nr, sessions, 1);
  const auto od = sl::run_period(s, sl::Scheme::on_demand_only, 0.0, sessions, 1);
  // with nothing reserved the two-stage rule is the on-demand-only rule
  const auto two0 = sl::run_period(s, sl::Scheme::two_stage, 0.0, sessions, 1);
  EXPECT_EQ(two0.surplus.mean, od.surplus.mean);
  EXPECT_EQ(two0.on_demand.mean, od.on_demand.mean);
  EXPECT_TRUE(std::isfinite(two.surplus.mean));
  EXPECT_GT(two.surplus.standard_error, 0.0);
}

TEST(Points, ApplyKeepsTheOtherMoment) {
  sl::Scenario base;
  base.prices.on_demand = sl::OnDemandPrice(sl::PriceFamily::lognormal, 1.2, 0.2);
  base.traffic = sl::TrafficModel::with_mean_cv(8.0, 0.4);
  const auto a = sl::apply_point(base, sl::SweepVariable::xi_cs, 0.35);
  EXPECT_DOUBLE_EQ(a.prices.on_demand.mean(), 1.2);
  EXPECT_DOUBLE_EQ(a.prices.on_demand.cv(), 0.35);
  EXPECT_EQ(a.prices.on_demand.family(), sl::PriceFamily::lognormal);
  const auto b = sl::apply_point(base, sl::SweepVariable::mu_cs, 1.4);
  EXPECT_DOUBLE_EQ(b.prices.on_demand.cv(), 0.2);
  const auto c = sl::apply_point(base, sl::SweepVariable::xi_k, 0.6);
  EXPECT_NEAR(c.traffic.mean(), base.traffic.mean(), 1e-9);
  EXPECT_NEAR(c.traffic.cv(), 0.6, 1e-6);
  const auto d = sl::apply_point(base, sl::SweepVariable::mu_k, 10.0);
  EXPECT_NEAR(d.traffic.mean(), 10.0, 1e-9);
  EXPECT_NEAR(d.traffic.cv(), base.traffic.cv(), 1e-6);
  const auto e = sl::apply_point(base, sl::SweepVariable::alpha, 0.5);
  EXPECT_EQ(e.utility.alpha, 0.5);
}

TEST(Grid, ValidationNamesTheField) {
  const auto base = small_scenario();
  auto field_of = [&](const sl::ExperimentGrid& g) {
    try {
      sl::validate_grid(base, g);
    } catch (const sl::SpecError& e) {
      return e.field();
    }
    return std::string("none");
  };
  sl::ExperimentGrid g;
  EXPECT_EQ(field_of(g), "grid.values");
  g.values = {0.1, 0.3, 0.2};
  EXPECT_EQ(field_of(g), "grid.values");
  g.values = {0.1, 0.2};
  g.sessions = 999;
  EXPECT_EQ(field_of(g), "grid.sessions");
  g.sessions = 1000;
  EXPECT_EQ(field_of(g), "none");
  g.values = {0.1, 0.7};  // uniform support would reach below zero
  EXPECT_EQ(field_of(g), "grid.values[1]");
  g.variable = sl::SweepVariable::alpha;
  g.values = {0.0, 1.0};
  EXPECT_EQ(field_of(g), "grid.values[0]");
  g.schemes = {sl::Scheme::two_stage};
  EXPECT_EQ(field_of(g), "none");
  g.schemes.clear();
  EXPECT_EQ(field_of(g), "grid.schemes");
  sl::Scenario expo = base;
  expo.utility = sl::exponential_utility();
  sl::ExperimentGrid h;
  h.values = {0.1};
  EXPECT_THROW(sl::validate_grid(expo, h), sl::SpecError);
}

TEST(Sweep, DeterministicAcrossWorkers) {
  const auto base = small_scenario();
  sl::ExperimentGrid g;
  g.values = {0.0, 0.2};
  g.sessions = 1000;
  auto render = [&](unsigned workers) {
    sl::SweepOptions o;
    o.seed = 99;
    o.workers = workers;
    std::string out;
    for (const auto& row : sl::sweep(base, g, o)) {
      out += sl::sweep_csv_line(row) + "\n";
    }
    return out;
  };
  const auto one = render(1);
  EXPECT_EQ(one, render(3));
  EXPECT_EQ(one, render(1));
}

TEST(Sweep, SkipAndCallbackFollowGridOrder) {
  const auto base = small_scenario();
  sl::ExperimentGrid g;
  g.values = {0.0, 0.1, 0.2};
  g.sessions = 1000;
  g.schemes = {sl::Scheme::two_stage, sl::Scheme::on_demand_only};
  std::vector<double> seen;
  sl::SweepOptions o;
  o.skip = [](double v) { return v == 0.1; };
  o.on_point = [&](double v, const std::vector<sl::SweepRow>& rows) {
    seen.push_back(v);
    EXPECT_EQ(rows.size(), 2u);
  };
  const auto rows = sl::sweep(base, g, o);
  EXPECT_EQ(seen, (std::vector<double>{0.0, 0.2}));
  EXPECT_EQ(rows.size(), 4u);
}

TEST(Csv, Format) {
  EXPECT_EQ(sl::sweep_csv_header(),
            "sweep_value,scheme,n_r,mean_n_s,se_n_s,mean_total_sc,mean_cost_per_sc,mean_surplus,se_surplus");
  sl::SweepRow r;
  r.value = 0.1;
  r.scheme = sl::Scheme::reservation_only;
  r.reserved = 40.0;
  r.on_demand = {0.0, 0.0, 10};
  r.mean_total_sc = 40.0;
  r.mean_cost_per_sc = 1.0;
  r.surplus = {12.345678912345, 0.25, 10};
  const auto line = sl::sweep_csv_line(r);
  EXPECT_EQ(line, "0.1,reservation_only,40,0,0,40,1,12.3456789,0.25");
  EXPECT_EQ(count_fields(line), count_fields(sl::sweep_csv_header()));
  EXPECT_EQ(sl::format_number(1.0 / 3.0), "0.333333333");
}
