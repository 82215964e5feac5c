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

#include "fpci/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fpci/error.hpp"
#include "json.hpp"

namespace fpci {
namespace {

using nlohmann::ordered_json;

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json to_json(const BoundReport& b) {
  return {{"rate_factor", finite_or_null(b.rate_factor)},
          {"plateau_radius_sq", finite_or_null(b.plateau_radius_sq)},
          {"valid", b.valid},
          {"hypothesis_note", b.hypothesis_note}};
}

ordered_json to_json(const ContractionCertificate& c) {
  return {{"rho", c.rho},
          {"B", c.B},
          {"B_std_error", c.B_std_error},
          {"c_sq", c.c_sq},
          {"node_c_sq", c.node_c_sq},
          {"sigma_sq", c.sigma_sq},
          {"sigma_sq_std_error", c.sigma_sq_std_error},
          {"provenance", to_string(c.provenance)},
          {"formula", c.formula}};
}

ordered_json describe_run(const ResolvedExperiment& r) {
  const ProblemSpec& p = *r.problem;
  const bool vr = r.config.algorithm.mode == Mode::kVr;
  ordered_json stepsizes = {{"gamma", r.map.gamma}};
  if (vr) {
    stepsizes["alpha"] = r.params.alpha;
    stepsizes["eta"] = r.params.eta;
    stepsizes["alpha_auto"] = r.auto_params.alpha;
    stepsizes["eta_auto"] = r.auto_params.eta;
  }
  return {{"problem",
           {{"kind", to_string(r.config.problem.source)},
            {"dim", p.dim()},
            {"nodes", p.nodes()},
            {"strong_convexity", p.strong_convexity()},
            {"smoothness", p.smoothness()},
            {"x_star_sq_norm", squared_norm(r.x_star)}}},
          {"map", {{"kind", to_string(r.map.kind)}, {"minibatch", r.map.minibatch}, {"stochastic", is_stochastic(r.map)}}},
          {"compressor",
           {{"kind", describe(r.compressor)}, {"omega", r.omega}, {"message_bits", message_bits(r.compressor, p.dim())}}},
          {"mode", to_string(r.config.algorithm.mode)},
          {"iterations", r.config.algorithm.iterations},
          {"stepsizes", stepsizes},
          {"certificate", to_json(r.certificate)},
          {"bound", to_json(r.bound)},
          {"bound_applies_to", vr ? "psi" : "r_sq"}};
}

Vector vector_or_zero(const std::optional<std::vector<double>>& v, std::size_t d, const char* key) {
  if (!v) return Vector(d);
  if (v->size() != d) {
    throw ConfigError("initial vector has dimension " + std::to_string(v->size()) + ", problem has " + std::to_string(d),
                      key);
  }
  return Vector(*v);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

std::shared_ptr<const ProblemSpec> build_problem(const ProblemConfig& cfg, std::size_t nodes) {
  RngStream data = RngStream(cfg.data_seed).derive({stream_role::kData});
  ProblemSpec p = [&] {
    switch (cfg.source) {
      case ProblemSource::kSynthetic:
        return generate_synthetic(cfg.rows, cfg.dim, cfg.condition_number, nodes, cfg.lambda, data);
      case ProblemSource::kLibsvm: return load_libsvm(cfg.path, cfg.lambda, nodes);
      case ProblemSource::kSaddle: return generate_saddle(cfg.mu, cfg.dim, nodes, data);
      case ProblemSource::kQuadratic: {
        std::vector<Eigen::MatrixXd> hessians;
        std::vector<Vector> linear;
        for (std::size_t i = 0; i < cfg.hessians.size(); ++i) {
          const auto& rows = cfg.hessians[i];
          const auto d = static_cast<Eigen::Index>(cfg.linear.at(i).size());
          if (static_cast<Eigen::Index>(rows.size()) != d) {
            throw ConfigError("matrix of node " + std::to_string(i) + " is not " + std::to_string(d) + "x" +
                                  std::to_string(d),
                              "problem.hessians");
          }
          Eigen::MatrixXd m(d, d);
          for (Eigen::Index r = 0; r < d; ++r) {
            if (static_cast<Eigen::Index>(rows[r].size()) != d) {
              throw ConfigError("matrix of node " + std::to_string(i) + " has a ragged row", "problem.hessians");
            }
            for (Eigen::Index c = 0; c < d; ++c) m(r, c) = rows[r][c];
          }
          hessians.push_back(std::move(m));
          linear.emplace_back(cfg.linear[i]);
        }
        return ProblemSpec::quadratic(std::move(hessians), std::move(linear), cfg.lambda);
      }
    }
    throw ConfigError("unknown problem source", "problem.kind");
  }();
  if (cfg.g.kind != RegularizerKind::kNone || cfg.h.kind != RegularizerKind::kNone) {
    p = p.with_regularizers(cfg.g, cfg.h);
  }
  return std::make_shared<const ProblemSpec>(std::move(p));
}

ResolvedExperiment resolve_experiment(const RunConfig& cfg) {
  ResolvedExperiment r;
  r.config = cfg;
  r.problem = build_problem(cfg.problem, cfg.algorithm.nodes);
  const std::size_t d = r.problem->dim();
  const std::size_t n = r.problem->nodes();
  r.map = make_map(cfg.map.kind, r.problem, cfg.map.gamma, cfg.map.minibatch);
  r.compressor = cfg.compressor;
  validate_compressor(r.compressor, d);
  r.omega = compressor_omega(r.compressor, d);
  r.certificate = certificate_of(r.map, cfg.mc_budget, RngStream(cfg.problem.data_seed).derive({stream_role::kCertificate}));
  r.x_star = map_fixed_point(r.map);
  r.x0 = vector_or_zero(cfg.algorithm.x0, d, "algorithm.x0");
  if (cfg.algorithm.h0) r.h0 = vector_or_zero(cfg.algorithm.h0, d, "algorithm.h0");
  r.auto_params = vr_stepsizes(r.certificate, r.omega, n);
  r.params = {cfg.algorithm.alpha.value_or(r.auto_params.alpha), cfg.algorithm.eta.value_or(r.auto_params.eta)};
  r.bound = cfg.algorithm.mode == Mode::kPlain ? plain_bound(r.certificate, r.omega, n)
                                               : vr_bound(r.certificate, r.params, r.omega, n);
  return r;
}

RunSpec run_spec_for(const ResolvedExperiment& r, std::uint64_t seed) {
  RunSpec spec;
  spec.mode = r.config.algorithm.mode;
  spec.iterations = r.config.algorithm.iterations;
  spec.map = r.map;
  spec.compressor = r.compressor;
  spec.params = r.params;
  spec.x0 = r.x0;
  spec.h0 = r.h0;
  spec.x_star = r.x_star;
  spec.seed = seed;
  spec.mc_budget = r.config.psi_mc_budget;
  return spec;
}

PlateauSummary summarize_plateau(const std::vector<std::vector<double>>& trajectories, double window_fraction) {
  if (trajectories.empty() || trajectories.front().empty()) throw Error("summarize_plateau: empty input");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw Error("summarize_plateau: window must be in (0, 1]");
  const std::size_t len = trajectories.front().size();
  const auto count = std::max<std::size_t>(
      1, std::min(len, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(len) - 1e-9))));
  std::vector<double> means;
  for (const auto& t : trajectories) {
    if (t.size() != len) throw Error("summarize_plateau: trajectories differ in length");
    double sum = 0.0;
    for (std::size_t k = len - count; k < len; ++k) sum += t[k];
    means.push_back(sum / static_cast<double>(count));
  }
  const MeanSe m = mean_se(means);
  return {m.mean, m.se};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::span<const MetricsRow> rows, std::ostream& out) {
  out << "seed,k,r_sq,psi,bits_cum,wall_ns\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << r.k << ',' << format_double(r.r_sq) << ',' << (r.psi ? format_double(*r.psi) : "") << ','
        << r.bits_cum << ',' << r.wall_ns << '\n';
  }
}

void write_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(rows, out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

std::string theory_report_json(const ResolvedExperiment& resolved) { return describe_run(resolved).dump(2) + "\n"; }

ExperimentResult run_experiment(const RunConfig& cfg, bool write_files) {
  ExperimentResult out;
  out.resolved = resolve_experiment(cfg);
  const ResolvedExperiment& r = out.resolved;
  if (write_files) std::filesystem::create_directories(cfg.output_dir);

  for (std::uint64_t seed : cfg.seeds) {
    SeedResult s;
    s.seed = seed;
    const MetricsSink sink = [&](const MetricsRow& row) { s.rows.push_back(row); };
    try {
      RunResult run = run_loop(run_spec_for(r, seed), sink);
      s.transcript = std::move(run.transcript);
    } catch (const DivergenceError& e) {
      s.diverged_at = e.iteration();
      s.error = e.what();
    }
    if (write_files) {
      write_csv(s.rows, cfg.output_dir / ("seed_" + std::to_string(seed) + ".csv"));
      if (cfg.write_transcript && !s.diverged_at) {
        s.transcript.write_csv(cfg.output_dir / ("transcript_" + std::to_string(seed) + ".csv"));
      }
    }
    out.seeds.push_back(std::move(s));
  }

  std::vector<const SeedResult*> healthy;
  for (const auto& s : out.seeds) {
    if (!s.diverged_at) healthy.push_back(&s);
  }
  out.all_diverged = healthy.empty();

  ordered_json summary = describe_run(r);
  ordered_json seeds = ordered_json::array();
  for (const auto& s : out.seeds) {
    ordered_json j = {{"seed", s.seed}, {"diverged", s.diverged_at.has_value()}, {"rows", s.rows.size()}};
    if (s.diverged_at) {
      j["diverged_at"] = *s.diverged_at;
      j["error"] = s.error;
    } else {
      j["final_r_sq"] = s.rows.back().r_sq;
      j["total_bits"] = s.rows.back().bits_cum;
    }
    seeds.push_back(j);
  }
  summary["seeds"] = seeds;

  ordered_json verdicts;
  const bool vr = cfg.algorithm.mode == Mode::kVr;
  if (!healthy.empty()) {
    std::vector<std::vector<double>> trajectories;
    for (const auto* s : healthy) {
      std::vector<double> t;
      for (const auto& row : s->rows) t.push_back(row.r_sq);
      trajectories.push_back(std::move(t));
    }
    out.plateau = summarize_plateau(trajectories, cfg.plateau_window);
    summary["plateau"] = {{"mean", out.plateau->mean},
                          {"std_error", out.plateau->std_error},
                          {"window_fraction", cfg.plateau_window},
                          {"seeds_used", healthy.size()}};
    if (r.bound.valid) {
      // Double precision cannot resolve r below about (eps |x*|)^2, so a zero
      // radius is compared against that floor.
      const double eps = std::numeric_limits<double>::epsilon();
      const double floor = 1e4 * eps * eps * (squared_norm(r.x_star) + 1.0);
      summary["plateau"]["roundoff_floor"] = floor;
      // The vr bound controls Psi >= r, so it also caps the r plateau.
      verdicts["plateau_within_radius"] =
          out.plateau->mean <= r.bound.plateau_radius_sq + 3.0 * out.plateau->std_error + floor;
      const std::size_t len = healthy.front()->rows.size();
      std::vector<double> initial;
      for (const auto* s : healthy) initial.push_back(vr ? *s->rows.front().psi : s->rows.front().r_sq);
      const double start = mean_se(initial).mean;
      bool inside = true;
      std::size_t worst_k = 0;
      double worst_excess = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) {
        std::vector<double> col;
        for (const auto* s : healthy) col.push_back(vr ? *s->rows[k].psi : s->rows[k].r_sq);
        const MeanSe m = mean_se(col);
        const double excess = m.mean - (envelope(r.bound, start, k) + 3.0 * m.se + floor);
        if (excess > worst_excess) {
          worst_excess = excess;
          worst_k = k;
        }
        inside = inside && excess <= 0.0;
      }
      verdicts["envelope_respected"] = inside;
      verdicts["envelope_worst_k"] = worst_k;
    } else {
      verdicts["plateau_within_radius"] = "not_asserted";
      verdicts["envelope_respected"] = "not_asserted";
    }
  } else {
    summary["plateau"] = nullptr;
    verdicts["plateau_within_radius"] = r.bound.valid ? ordered_json(false) : ordered_json("not_asserted");
    verdicts["envelope_respected"] = r.bound.valid ? ordered_json(false) : ordered_json("not_asserted");
  }
  verdicts["all_seeds_diverged"] = out.all_diverged;
  summary["verdicts"] = verdicts;
  out.summary_json = summary.dump(2) + "\n";
  if (write_files) {
    std::ofstream f(cfg.output_dir / "summary.json", std::ios::binary);
    if (!f) throw Error("cannot write " + (cfg.output_dir / "summary.json").string());
    f << out.summary_json;
  }
  return out;
}

VerifyReport verify_assumptions(const ResolvedExperiment& r, std::size_t draws) {
  VerifyReport report;
  const std::size_t d = r.problem->dim();
  const std::size_t n = r.problem->nodes();
  const std::uint64_t seed = r.config.seeds.front();
  RngStream root = RngStream(seed).derive({stream_role::kVerify});
  RngStream points = root.derive({0});
  const double scale = std::sqrt(squared_norm(r.x_star)) + 1.0;
  auto random_point = [&] {
    Vector g = sample_standard_gaussian(points, d);
    return r.x_star + (scale / std::sqrt(static_cast<double>(d))) * g;
  };
  for (std::size_t t = 0; t < 3; ++t) {
    const Vector x = random_point();
    RngStream s = root.derive({1, t});
    const MomentEstimate m = estimate_moments(r.compressor, x, std::max<std::size_t>(draws, 2), s);
    StatCheck unbiased{"compressor_unbiased_" + std::to_string(t), 0.0, 0.0, 0.0, true};
    for (std::size_t j = 0; j < d; ++j) {
      const double z = m.mean_std_error[j] > 0.0 ? std::fabs(m.mean[j] - x[j]) / m.mean_std_error[j]
                                                 : (m.mean[j] == x[j] ? 0.0 : std::numeric_limits<double>::infinity());
      unbiased.lhs = std::max(unbiased.lhs, z);
    }
    unbiased.rhs = 4.0;
    unbiased.pass = unbiased.lhs <= unbiased.rhs;
    report.checks.push_back(unbiased);
    StatCheck variance{"compressor_variance_" + std::to_string(t), m.mean_sq_deviation,
                       r.omega * squared_norm(x), m.std_error, false};
    variance.pass = variance.lhs <= variance.rhs + 3.0 * variance.std_error + 1e-12 * variance.rhs;
    report.checks.push_back(variance);
  }
  for (std::size_t t = 0; t < 3; ++t) {
    const Vector x = random_point();
    const Vector y = random_point();
    RngStream s = root.derive({2, t});
    StatCheck c = check_contraction(r.map, r.certificate, r.x_star, x, draws, s);
    c.name += "_" + std::to_string(t);
    report.checks.push_back(c);
    for (std::size_t i = 0; i < n; ++i) {
      RngStream sl = root.derive({3, t, i});
      StatCheck l = check_lipschitz(r.map, r.certificate, i, x, y, draws, sl);
      l.name += "_node" + std::to_string(i) + "_" + std::to_string(t);
      report.checks.push_back(l);
    }
  }
  for (const auto& c : report.checks) report.pass = report.pass && c.pass;
  return report;
}

}  // namespace fpci
