// Copyright 2026 The fpci Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Command-line driver: fpci run|verify|theory <config>.
//
// Exit codes: 0 success, 1 other failure (including failed checks),
// 2 configuration error, 3 every seed diverged. FPCI_OUTPUT_DIR overrides
// the configured output directory.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fpci/config.hpp"
#include "fpci/error.hpp"
#include "fpci/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

fpci::RunConfig load(const std::string& path) {
  fpci::RunConfig cfg = fpci::load_config(path);
  if (const char* dir = std::getenv("FPCI_OUTPUT_DIR"); dir != nullptr && *dir != '\0') cfg.output_dir = dir;
  return cfg;
}

int cmd_run(const std::string& path, bool quiet) {
  const fpci::ExperimentResult result = fpci::run_experiment(load(path));
  if (!quiet) std::cout << result.summary_json;
  std::cerr << "wrote " << result.seeds.size() << " trajectories to " << result.resolved.config.output_dir.string()
            << "\n";
  return result.all_diverged ? kExitDiverged : kExitOk;
}

int cmd_verify(const std::string& path, std::size_t draws) {
  const fpci::ResolvedExperiment resolved = fpci::resolve_experiment(load(path));
  const fpci::VerifyReport report = fpci::verify_assumptions(resolved, draws);
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " lhs=" << fpci::format_double(c.lhs)
              << " rhs=" << fpci::format_double(c.rhs) << " se=" << fpci::format_double(c.std_error) << "\n";
  }
  return report.pass ? kExitOk : kExitFailure;
}

int cmd_theory(const std::string& path) {
  std::cout << fpci::theory_report_json(fpci::resolve_experiment(load(path)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point iterations with compressed iterates"};
  app.require_subcommand(1);
  std::string config;
  bool quiet = false;
  std::size_t draws = 20000;

  auto* run = app.add_subcommand("run", "run every seed, write CSV trajectories and summary.json");
  run->add_option("config", config, "run configuration (YAML)")->required();
  run->add_flag("-q,--quiet", quiet, "do not print the summary");
  auto* verify = app.add_subcommand("verify", "Monte-Carlo checks of the compressor and map assumptions");
  verify->add_option("config", config, "run configuration (YAML)")->required();
  verify->add_option("--draws", draws, "samples per check")->check(CLI::Range(2, 100000000));
  auto* theory = app.add_subcommand("theory", "print the theoretical bound without running");
  theory->add_option("config", config, "run configuration (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, quiet);
    if (*verify) return cmd_verify(config, draws);
    return cmd_theory(config);
  } catch (const fpci::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fpci::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
