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

#include "fpci/algorithms.hpp"

#include <chrono>
#include <cmath>

#include "fpci/error.hpp"

namespace fpci {
namespace {

std::size_t node_count(const MapSpec& map) { return map.problem->nodes(); }

Vector mean_of(std::vector<Vector>& parts) {
  Vector acc = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) acc += parts[i];
  return acc / static_cast<double>(parts.size());
}

void require_finite(const Vector& x, std::size_t k) {
  for (double v : x.coords()) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite iterate", k);
  }
}

// Runs `f` and turns a non-finite intermediate into a divergence at k.
template <typename F>
auto guarded(std::size_t k, F&& f) {
  try {
    return f();
  } catch (const NonFiniteError& e) {
    throw DivergenceError(e.what(), k);
  }
}

std::vector<Vector> deliver(std::vector<Vector> payloads, const Vector& x, std::size_t k,
                            const CompressorSpec& comp, Transcript* transcript) {
  if (transcript == nullptr) return payloads;
  broadcast(x, payloads.size(), k, *transcript);
  std::vector<std::optional<Vector>> wrapped(payloads.begin(), payloads.end());
  return gather(std::move(wrapped), payloads.size(), comp, k, *transcript);
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::kPlain ? "plain" : "vr"; }

std::optional<Mode> parse_mode(const std::string& name) {
  if (name == "plain") return Mode::kPlain;
  if (name == "vr") return Mode::kVr;
  return std::nullopt;
}

void validate_vr_params(const VrParams& params) {
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]", "algorithm.alpha");
  if (!(params.eta >= 0.0 && params.eta <= 1.0)) throw ConfigError("eta must be in [0, 1]", "algorithm.eta");
}

VrState make_vr_state(const Vector& x0, std::size_t n, const std::optional<Vector>& h0) {
  const Vector h = h0.value_or(Vector(x0.dim()));
  require_same_dim(x0, h, "initial shift");
  VrState state;
  state.iterate = {x0, 0};
  state.workers.assign(n, WorkerState{h, Vector(x0.dim()), Vector(x0.dim())});
  state.mirror.assign(n, h);
  return state;
}

RngStream map_stream(const RngStream& root, std::size_t node, std::size_t k) {
  return root.derive({stream_role::kMapNoise, node, k});
}

RngStream compression_stream(const RngStream& root, std::size_t node, std::size_t k) {
  return root.derive({stream_role::kCompressionNoise, node, k});
}

std::vector<Vector> step_plain(IterateState& state, const MapSpec& map, const CompressorSpec& comp,
                               const RngStream& root, Transcript* transcript) {
  const std::size_t n = node_count(map);
  const std::size_t k = state.k;
  std::vector<Vector> payloads = guarded(k + 1, [&] {
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      RngStream s = map_stream(root, i, k);
      RngStream xi = compression_stream(root, i, k);
      out.push_back(apply_compressor(comp, apply_map(map, i, state.x, s), xi));
    }
    return out;
  });
  std::vector<Vector> received = deliver(payloads, state.x, k, comp, transcript);
  Vector next = guarded(k + 1, [&] { return mean_of(received); });
  require_finite(next, k + 1);
  state.x = std::move(next);
  state.k = k + 1;
  return payloads;
}

std::vector<Vector> step_vr(VrState& state, const VrParams& params, const MapSpec& map, const CompressorSpec& comp,
                            const RngStream& root, Transcript* transcript) {
  const std::size_t n = node_count(map);
  if (state.workers.size() != n || state.mirror.size() != n) {
    throw DimensionError("vr state has " + std::to_string(state.workers.size()) + " workers for " +
                         std::to_string(n) + " nodes");
  }
  IterateState& it = state.iterate;
  const std::size_t k = it.k;
  std::vector<Vector> payloads = guarded(k + 1, [&] {
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      WorkerState& w = state.workers[i];
      RngStream s = map_stream(root, i, k);
      RngStream xi = compression_stream(root, i, k);
      Vector delta = apply_compressor(comp, apply_map(map, i, it.x, s) - w.h, xi);
      w.last_Delta = delta + w.h;
      w.h += params.alpha * delta;
      w.last_delta = delta;
      out.push_back(std::move(delta));
    }
    return out;
  });
  std::vector<Vector> received = deliver(payloads, it.x, k, comp, transcript);
  Vector next = guarded(k + 1, [&] {
    std::vector<Vector> shifted;
    shifted.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      shifted.push_back(received[i] + state.mirror[i]);
      state.mirror[i] += params.alpha * received[i];
    }
    return (1.0 - params.eta) * it.x + params.eta * mean_of(shifted);
  });
  require_finite(next, k + 1);
  it.x = std::move(next);
  it.k = k + 1;
  return payloads;
}

PsiValue lyapunov_psi(const Vector& x, const std::vector<WorkerState>& workers, const VrParams& params,
                      const MapSpec& map, const Vector& x_star, double omega, std::size_t mc_budget,
                      const RngStream& stream) {
  const std::size_t n = node_count(map);
  const double dist = squared_distance(x, x_star);
  if (omega == 0.0) return {dist, 0.0};
  const double weight = 4.0 * params.eta * params.eta * omega /
                        (params.alpha * static_cast<double>(n) * static_cast<double>(n));
  if (!is_stochastic(map)) {
    RngStream unused = stream;
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) shift += squared_distance(workers[i].h, apply_map(map, i, x_star, unused));
    return {dist + weight * shift, 0.0};
  }
  const std::size_t draws = std::max<std::size_t>(mc_budget, 2);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < draws; ++t) {
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      RngStream s = stream.derive({i, t});
      shift += squared_distance(workers[i].h, apply_map(map, i, x_star, s));
    }
    sum += shift;
    sum_sq += shift * shift;
  }
  const double m = static_cast<double>(draws);
  const double mean = sum / m;
  const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
  return {dist + weight * mean, weight * std::sqrt(var / m)};
}

RunResult run_loop(const RunSpec& spec, const MetricsSink& sink) {
  if (spec.iterations < 1) throw ConfigError("iterations must be >= 1", "algorithm.iterations");
  validate_map(spec.map);
  const std::size_t n = node_count(spec.map);
  const std::size_t d = spec.map.problem->dim();
  if (spec.x0.dim() != d || spec.x_star.dim() != d) {
    throw DimensionError("run_loop: x0/x_star dimension does not match the problem (" + std::to_string(d) + ")");
  }
  validate_compressor(spec.compressor, d);
  if (spec.mode == Mode::kVr) validate_vr_params(spec.params);

  const RngStream root(spec.seed);
  const double omega = compressor_omega(spec.compressor, d);
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  std::uint64_t bits = 0;

  IterateState plain{spec.x0, 0};
  VrState vr;
  if (spec.mode == Mode::kVr) vr = make_vr_state(spec.x0, n, spec.h0);

  auto emit = [&](const Vector& x, std::size_t k) {
    MetricsRow row;
    row.seed = spec.seed;
    row.k = k;
    row.r_sq = squared_distance(x, spec.x_star);
    if (spec.mode == Mode::kVr) {
      row.psi = lyapunov_psi(x, vr.workers, spec.params, spec.map, spec.x_star, omega, spec.mc_budget,
                             root.derive({stream_role::kLyapunov, k}))
                    .value;
    }
    row.bits_cum = bits;
    row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    if (sink) sink(row);
    result.rows.push_back(row);
    return row.r_sq;
  };

  const double r0 = emit(spec.x0, 0);
  const double reference = r0 > 0.0 ? r0 : squared_norm(spec.x_star) + 1.0;
  const double limit = spec.divergence_factor * reference;
  for (std::size_t k = 0; k < spec.iterations; ++k) {
    const std::uint64_t before = result.transcript.total_bits();
    if (spec.mode == Mode::kPlain) {
      step_plain(plain, spec.map, spec.compressor, root, &result.transcript);
    } else {
      step_vr(vr, spec.params, spec.map, spec.compressor, root, &result.transcript);
    }
    bits += result.transcript.total_bits() - before;
    const Vector& x = spec.mode == Mode::kPlain ? plain.x : vr.iterate.x;
    const double r = emit(x, k + 1);
    if (!(r <= limit)) throw DivergenceError("r^k exceeded the divergence threshold", k + 1);
  }
  result.x_final = spec.mode == Mode::kPlain ? plain.x : vr.iterate.x;
  return result;
}

}  // namespace fpci
