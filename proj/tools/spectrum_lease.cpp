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

// Command-line front end: spectrum_lease solve|sweep|validate <config>.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spectrum_lease/commands.hpp"

namespace sl = spectrum_lease;

int main(int argc, char** argv) {
  CLI::App app{"Two-stage spectrum leasing: advance reservation and on-demand requests"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  bool resume = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "root seed, overrides the config");
    cmd->add_option("--workers", workers, "worker threads, 0 = all cores; results do not depend on it");
    cmd->add_option("--out", out, "output directory, overrides the config");
  };
  CLI::App* solve = app.add_subcommand("solve", "compute the advance reservation; writes leaseplan.json, sgd_trace.csv");
  CLI::App* sweep = app.add_subcommand("sweep", "run the grid sweep; writes sweep.csv");
  CLI::App* validate = app.add_subcommand("validate", "run the validation checks; writes validate_report.json");
  add_common(solve);
  add_common(sweep);
  add_common(validate);
  sweep->add_flag("--resume", resume, "keep grid points already complete in sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sl::exit_ok : sl::exit_config_error;
  }

  sl::ExperimentConfig config;
  try {
    config = sl::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sl::exit_config_error;
  }
  sl::RunOptions opts{seed, workers, out, resume};
  try {
    if (*solve) {
      return sl::cmd_solve(config, opts);
    }
    if (*sweep) {
      return sl::cmd_sweep(config, opts);
    }
    return sl::cmd_validate(config, opts);
  } catch (const sl::SpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sl::exit_config_error;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sl::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sl::exit_failure;
  }
}
