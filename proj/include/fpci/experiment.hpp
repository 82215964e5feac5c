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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fpci/algorithms.hpp"
#include "fpci/compressors.hpp"
#include "fpci/config.hpp"
#include "fpci/maps.hpp"
#include "fpci/problem.hpp"
#include "fpci/simnet.hpp"
#include "fpci/theory.hpp"

namespace fpci {

// A RunConfig with every "auto" value resolved against the problem and its
// contraction certificate.
struct ResolvedExperiment {
  RunConfig config;
  std::shared_ptr<const ProblemSpec> problem;
  MapSpec map;
  CompressorSpec compressor;
  ContractionCertificate certificate;
  double omega = 0.0;
  VrParams params;       // used in vr mode
  VrParams auto_params;  // theory defaults
  BoundReport bound;     // plain_bound or vr_bound depending on the mode
  Vector x_star;
  Vector x0;
  std::optional<Vector> h0;
};

std::shared_ptr<const ProblemSpec> build_problem(const ProblemConfig& cfg, std::size_t nodes);
ResolvedExperiment resolve_experiment(const RunConfig& cfg);
RunSpec run_spec_for(const ResolvedExperiment& resolved, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  std::optional<std::size_t> diverged_at;
  std::string error;
  Transcript transcript;
};

struct PlateauSummary {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean over trajectories of the mean of their last ceil(window * length)
// entries, with the across-trajectory standard error (0 for one trajectory).
// Throws Error on empty input or unequal lengths.
PlateauSummary summarize_plateau(const std::vector<std::vector<double>>& trajectories, double window_fraction);

struct ExperimentResult {
  ResolvedExperiment resolved;
  std::vector<SeedResult> seeds;
  std::optional<PlateauSummary> plateau;  // over the seeds that did not diverge
  bool all_diverged = false;
  std::string summary_json;
};

// Runs every seed. With write_files, writes seed_<seed>.csv (and
// transcript_<seed>.csv when requested) plus summary.json into output_dir.
ExperimentResult run_experiment(const RunConfig& cfg, bool write_files = true);

// Serialized BoundReport, certificate and resolved stepsizes, as printed
// by `fpci theory`.
std::string theory_report_json(const ResolvedExperiment& resolved);

// %.17g rendering, which re-parses to the identical double.
std::string format_double(double v);

// Header "seed,k,r_sq,psi,bits_cum,wall_ns"; psi is empty when absent.
void write_csv(std::span<const MetricsRow> rows, std::ostream& out);
void write_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);

struct VerifyReport {
  std::vector<StatCheck> checks;
  bool pass = true;
};

// Monte-Carlo checks of the compressor moments and of the certificate's
// contraction and Lipschitz constants at a few random points.
VerifyReport verify_assumptions(const ResolvedExperiment& resolved, std::size_t draws);

}  // namespace fpci
