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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fpci/compressors.hpp"
#include "fpci/maps.hpp"
#include "fpci/rng.hpp"
#include "fpci/simnet.hpp"
#include "fpci/vector.hpp"

namespace fpci {

enum class Mode { kPlain, kVr };
std::string to_string(Mode mode);
std::optional<Mode> parse_mode(const std::string& name);

struct IterateState {
  Vector x;
  std::size_t k = 0;
};

struct WorkerState {
  Vector h;
  Vector last_delta;
  Vector last_Delta;
};

struct VrParams {
  double alpha = 1.0;
  double eta = 1.0;
};

// Throws ConfigError unless 0 < alpha <= 1 and 0 <= eta <= 1.
void validate_vr_params(const VrParams& params);

// Variance-reduced run state. `mirror` is the master's copy of every h_i,
// advanced with the received delta_i so only delta_i crosses the network.
struct VrState {
  IterateState iterate;
  std::vector<WorkerState> workers;
  std::vector<Vector> mirror;
};

// h_i^0 = h0 (zero when unset) for every node.
VrState make_vr_state(const Vector& x0, std::size_t n, const std::optional<Vector>& h0 = std::nullopt);

// Per-round randomness: node i at iteration k draws map noise from
// root / (kMapNoise, i, k) and compression noise from
// root / (kCompressionNoise, i, k).
RngStream map_stream(const RngStream& root, std::size_t node, std::size_t k);
RngStream compression_stream(const RngStream& root, std::size_t node, std::size_t k);

// x^{k+1} = (1/n) sum_i C(T_i(x^k, s_i^k); xi_i^k). Returns the payloads.
// With a transcript, the round's broadcast and gather are recorded.
// Throws DivergenceError(k + 1) if x^{k+1} is not finite.
std::vector<Vector> step_plain(IterateState& state, const MapSpec& map, const CompressorSpec& comp,
                               const RngStream& root, Transcript* transcript = nullptr);

// delta_i = C(T_i(x^k) - h_i), h_i += alpha delta_i, Delta_i = delta_i + h_i^k,
// x^{k+1} = (1 - eta) x^k + eta (1/n) sum_i Delta_i.
std::vector<Vector> step_vr(VrState& state, const VrParams& params, const MapSpec& map, const CompressorSpec& comp,
                            const RngStream& root, Transcript* transcript = nullptr);

struct PsiValue {
  double value = 0.0;
  double std_error = 0.0;  // zero for deterministic maps
};

// Psi = ||x - x*||^2 + (4 eta^2 omega / (alpha n^2)) sum_i E||h_i - T_i(x*, s)||^2.
// Stochastic maps estimate the expectation from mc_budget draws of `stream`.
PsiValue lyapunov_psi(const Vector& x, const std::vector<WorkerState>& workers, const VrParams& params,
                      const MapSpec& map, const Vector& x_star, double omega, std::size_t mc_budget,
                      const RngStream& stream);

struct MetricsRow {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double r_sq = 0.0;
  std::optional<double> psi;
  std::uint64_t bits_cum = 0;
  std::int64_t wall_ns = 0;
};

using MetricsSink = std::function<void(const MetricsRow&)>;

struct RunSpec {
  Mode mode = Mode::kPlain;
  std::size_t iterations = 1;
  MapSpec map;
  CompressorSpec compressor = IdentityCompressor{};
  VrParams params;
  Vector x0;
  std::optional<Vector> h0;
  Vector x_star;
  std::uint64_t seed = 0;
  std::size_t mc_budget = 64;  // Psi estimation for stochastic maps
  // Abort when r^k exceeds this multiple of r^0 (of ||x*||^2 + 1 if r^0 = 0).
  double divergence_factor = 1e12;
};

struct RunResult {
  std::vector<MetricsRow> rows;  // k = 0..K
  Transcript transcript;
  Vector x_final;
};

// Drives K steps. Rows go to `sink` as they are produced, so a divergence
// (thrown as DivergenceError carrying k) leaves the partial trajectory
// flushed. Psi is reported in vr mode only.
RunResult run_loop(const RunSpec& spec, const MetricsSink& sink = {});

}  // namespace fpci
