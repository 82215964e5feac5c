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
#include <optional>
#include <string>
#include <vector>

#include "fpci/algorithms.hpp"
#include "fpci/compressors.hpp"
#include "fpci/maps.hpp"
#include "fpci/problem.hpp"

namespace fpci {

enum class ProblemSource { kSynthetic, kLibsvm, kSaddle, kQuadratic };
std::string to_string(ProblemSource s);

struct ProblemConfig {
  ProblemSource source = ProblemSource::kSynthetic;
  // synthetic
  std::size_t rows = 400;
  std::size_t dim = 20;
  double condition_number = 2.0;
  // synthetic, libsvm and quadratic
  double lambda = 1e-3;
  // synthetic and saddle data generation
  std::uint64_t data_seed = 0;
  // libsvm, resolved against the config file's directory
  std::filesystem::path path;
  // saddle
  double mu = 1.0;
  // quadratic: one symmetric matrix and one vector per node
  std::vector<std::vector<std::vector<double>>> hessians;
  std::vector<std::vector<double>> linear;
  Regularizer g;
  Regularizer h;
  bool operator==(const ProblemConfig&) const = default;
};

struct MapConfig {
  MapKind kind = MapKind::kGD;
  std::optional<double> gamma;  // unset = auto
  std::size_t minibatch = 1;
  bool operator==(const MapConfig&) const = default;
};

struct AlgorithmConfig {
  Mode mode = Mode::kPlain;
  std::size_t nodes = 1;
  std::size_t iterations = 100;
  std::optional<double> alpha;  // unset = auto
  std::optional<double> eta;    // unset = auto
  std::optional<std::vector<double>> x0;  // unset = zero
  std::optional<std::vector<double>> h0;  // unset = zero
  bool operator==(const AlgorithmConfig&) const = default;
};

struct RunConfig {
  ProblemConfig problem;
  MapConfig map;
  CompressorSpec compressor = IdentityCompressor{};
  AlgorithmConfig algorithm;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  std::size_t mc_budget = 2000;     // certificate B and sigma^2
  std::size_t psi_mc_budget = 64;   // Psi per logged row, stochastic maps only
  double plateau_window = 0.2;
  bool write_transcript = false;
  bool operator==(const RunConfig&) const = default;
};

// Parses a YAML run configuration. Relative paths resolve against base_dir.
// Every error is a ConfigError naming the key and its 1-based line.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

// YAML text that parses back to an equal RunConfig.
std::string serialize_config(const RunConfig& cfg);

}  // namespace fpci
