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

#include "fpci/maps.hpp"

#include <algorithm>
#include <cmath>

#include "fpci/error.hpp"

namespace fpci {
namespace {

constexpr double kRelTol = 1e-12;

bool node_is_stochastic(const MapSpec& map, std::size_t node) {
  return (map.kind == MapKind::kSGD || map.kind == MapKind::kProxSGD) &&
         map.minibatch < map.problem->rows(node);
}

Vector minibatch_gradient(const MapSpec& map, std::size_t node, const Vector& x, RngStream& stream) {
  const ProblemSpec& p = *map.problem;
  if (!node_is_stochastic(map, node)) return p.field(node, x);
  Vector acc(x.dim());
  const auto rows = static_cast<std::uint64_t>(p.rows(node));
  for (std::size_t t = 0; t < map.minibatch; ++t) {
    acc += p.row_gradient(node, static_cast<std::size_t>(stream.uniform_index(rows)), x);
  }
  return acc / static_cast<double>(map.minibatch);
}

// Lipschitz factor of the Davis-Yin map for a quadratic with Hessian
// spectrum in [mu, L] and G = l2(w): the prox of G is s I, s = 1/(1+gamma w),
// and the prox of H is nonexpansive, so
//   ||T z - T z'|| <= ((1 - s) + ||(2s - 1) I - gamma s A||) ||z - z'||.
double davis_yin_factor(double gamma, double g_weight, double mu, double lipschitz) {
  const double s = 1.0 / (1.0 + gamma * g_weight);
  const double low = std::fabs(2.0 * s - 1.0 - gamma * s * mu);
  const double high = std::fabs(2.0 * s - 1.0 - gamma * s * lipschitz);
  return (1.0 - s) + std::max(low, high);
}

double gda_rho(const MapSpec& map) {
  const ProblemSpec& p = *map.problem;
  const double l = p.mean_field_lipschitz();
  return 2.0 * map.gamma * p.strong_convexity() - map.gamma * map.gamma * l * l;
}

double node_sgd_smoothness(const MapSpec& map, std::size_t node) {
  const ProblemSpec& p = *map.problem;
  double s = p.node_smoothness(node);
  if (node_is_stochastic(map, node)) s += p.row_smoothness(node) / static_cast<double>(map.minibatch);
  return s;
}

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

class Accumulator {
 public:
  void add(double v) {
    ++n_;
    sum_ += v;
    sum_sq_ += v * v;
  }
  Estimate estimate() const {
    const auto n = static_cast<double>(n_);
    const double mean = n_ == 0 ? 0.0 : sum_ / n;
    if (n_ < 2) return {mean, 0.0};
    const double var = std::max(0.0, (sum_sq_ - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
  }

 private:
  std::size_t n_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

Vector mean_map(const MapSpec& map, const Vector& x, RngStream& stream) {
  const std::size_t n = map.problem->nodes();
  Vector acc = apply_map(map, 0, x, stream);
  for (std::size_t i = 1; i < n; ++i) acc += apply_map(map, i, x, stream);
  return acc / static_cast<double>(n);
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kGD: return "gd";
    case MapKind::kSGD: return "sgd";
    case MapKind::kProxSGD: return "prox_sgd";
    case MapKind::kGDA: return "gda";
    case MapKind::kDavisYin: return "davis_yin";
  }
  return "?";
}

std::optional<MapKind> parse_map_kind(const std::string& name) {
  for (MapKind k : {MapKind::kGD, MapKind::kSGD, MapKind::kProxSGD, MapKind::kGDA, MapKind::kDavisYin}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string to_string(Provenance p) { return p == Provenance::kExact ? "exact" : "monte_carlo"; }

double expected_smoothness(const ProblemSpec& problem, std::size_t minibatch) {
  double noise = 0.0;
  if (problem.has_rows()) {
    for (std::size_t i = 0; i < problem.nodes(); ++i) {
      if (minibatch < problem.rows(i)) noise = std::max(noise, problem.row_smoothness(i));
    }
  }
  return problem.mean_field_lipschitz() +
         noise / (static_cast<double>(problem.nodes()) * static_cast<double>(std::max<std::size_t>(minibatch, 1)));
}

double auto_gamma(MapKind kind, const ProblemSpec& problem, std::size_t minibatch) {
  switch (kind) {
    case MapKind::kGD:
    case MapKind::kDavisYin: return 1.0 / problem.smoothness();
    case MapKind::kSGD:
    case MapKind::kProxSGD: return 1.0 / (2.0 * expected_smoothness(problem, minibatch));
    case MapKind::kGDA: {
      const double l = problem.mean_field_lipschitz();
      return problem.strong_convexity() / (l * l);
    }
  }
  return 0.0;
}

void validate_map(const MapSpec& map) {
  if (!map.problem) throw ConfigError("map has no problem", "problem");
  const ProblemSpec& p = *map.problem;
  if (!(map.gamma > 0.0) || !std::isfinite(map.gamma)) throw ConfigError("gamma must be > 0", "map.gamma");
  const bool saddle = p.kind() == ProblemKind::kSaddle;
  const bool h_nonlinear = p.h().kind == RegularizerKind::kL1;
  switch (map.kind) {
    case MapKind::kGD: {
      if (saddle) throw ConfigError("gd needs a minimization problem; use gda for saddle problems", "map.kind");
      if (p.is_composite()) throw ConfigError("gd needs a smooth problem; use prox_sgd or davis_yin", "map.kind");
      const double limit = 1.0 / p.smoothness();
      if (map.gamma > limit * (1.0 + kRelTol)) {
        throw ConfigError("gd requires gamma <= 1/L = " + std::to_string(limit), "map.gamma");
      }
      break;
    }
    case MapKind::kSGD:
    case MapKind::kProxSGD: {
      const std::string name = to_string(map.kind);
      if (!p.has_rows()) throw ConfigError(name + " needs row data (a synthetic or libsvm problem)", "map.kind");
      if (map.minibatch == 0) throw ConfigError("minibatch must be >= 1", "map.minibatch");
      if (map.kind == MapKind::kSGD && p.is_composite()) {
        throw ConfigError("sgd needs a smooth problem; use prox_sgd", "map.kind");
      }
      if (map.kind == MapKind::kProxSGD) {
        if (p.g().kind != RegularizerKind::kNone) {
          throw ConfigError("prox_sgd uses only the H regularizer; G must be none", "problem.g");
        }
        if (h_nonlinear && p.nodes() > 1) {
          throw ConfigError("an l1 prox averaged over several nodes has no common fixed point with the "
                            "composite minimizer; use nodes = 1",
                            "problem.h");
        }
      }
      const double limit = 1.0 / (2.0 * expected_smoothness(p, map.minibatch));
      if (map.gamma > limit * (1.0 + kRelTol)) {
        throw ConfigError(name + " requires gamma <= 1/(2 L_exp) = " + std::to_string(limit), "map.gamma");
      }
      break;
    }
    case MapKind::kGDA: {
      if (!saddle) throw ConfigError("gda needs a saddle problem", "map.kind");
      const double rho = gda_rho(map);
      if (!(rho > 0.0)) {
        throw ConfigError("gamma too large: rho = 2 gamma mu - gamma^2 L^2 = " + std::to_string(rho) +
                              " must be > 0",
                          "map.gamma");
      }
      break;
    }
    case MapKind::kDavisYin: {
      if (saddle) throw ConfigError("davis_yin needs a minimization problem", "map.kind");
      if (p.g().kind != RegularizerKind::kL2 || !(p.g().weight > 0.0)) {
        throw ConfigError("davis_yin requires G = l2 with weight > 0 (strongly convex and smooth)", "problem.g");
      }
      if (h_nonlinear && p.nodes() > 1) {
        throw ConfigError("davis_yin with an l1 H requires nodes = 1", "problem.h");
      }
      const double q = davis_yin_factor(map.gamma, p.g().weight, p.strong_convexity(), p.mean_field_lipschitz());
      if (!(q < 1.0)) {
        throw ConfigError("davis_yin contraction factor " + std::to_string(q) +
                              " >= 1; decrease gamma or increase the G weight",
                          "map.gamma");
      }
      break;
    }
  }
}

MapSpec make_map(MapKind kind, std::shared_ptr<const ProblemSpec> problem, std::optional<double> gamma,
                 std::size_t minibatch) {
  if (!problem) throw ConfigError("map has no problem", "problem");
  MapSpec map{kind, gamma.value_or(auto_gamma(kind, *problem, minibatch)), minibatch, std::move(problem)};
  validate_map(map);
  return map;
}

bool is_stochastic(const MapSpec& map) {
  for (std::size_t i = 0; i < map.problem->nodes(); ++i) {
    if (node_is_stochastic(map, i)) return true;
  }
  return false;
}

Vector apply_map(const MapSpec& map, std::size_t node, const Vector& x, RngStream& stream) {
  const ProblemSpec& p = *map.problem;
  if (node >= p.nodes()) {
    throw ConfigError("node index " + std::to_string(node) + " out of range (n = " + std::to_string(p.nodes()) + ")",
                      "node");
  }
  if (x.dim() != p.dim()) {
    throw DimensionError("apply_map: expected dimension " + std::to_string(p.dim()) + ", got " +
                         std::to_string(x.dim()));
  }
  const double gamma = map.gamma;
  switch (map.kind) {
    case MapKind::kGD:
    case MapKind::kGDA: return x - gamma * p.field(node, x);
    case MapKind::kSGD: return x - gamma * minibatch_gradient(map, node, x, stream);
    case MapKind::kProxSGD: return prox(p.h(), gamma, x - gamma * minibatch_gradient(map, node, x, stream));
    case MapKind::kDavisYin: {
      const Vector xg = prox(p.g(), gamma, x);
      const Vector reflected = 2.0 * xg - x - gamma * p.field(node, xg);
      return (x - xg) + prox(p.h(), gamma, reflected);
    }
  }
  return x;
}

Vector map_fixed_point(const MapSpec& map) {
  const Vector x_star = solve_reference(*map.problem);
  if (map.kind == MapKind::kDavisYin) return x_star * (1.0 + map.gamma * map.problem->g().weight);
  return x_star;
}

ContractionCertificate certificate_of(const MapSpec& map, std::size_t mc_budget, const RngStream& stream) {
  validate_map(map);
  const ProblemSpec& p = *map.problem;
  const std::size_t n = p.nodes();
  const double gamma = map.gamma;
  const Vector x_star = map_fixed_point(map);
  ContractionCertificate cert;
  cert.node_c_sq.assign(n, 1.0);

  auto exact_sigma = [&] {
    RngStream unused = stream;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += squared_norm(apply_map(map, i, x_star, unused));
    return acc / static_cast<double>(n);
  };

  switch (map.kind) {
    case MapKind::kGD:
      cert.rho = gamma * p.strong_convexity();
      // Node maps are Lipschitz with max|1 - gamma lambda| over the node spectrum.
      for (std::size_t i = 0; i < n; ++i) {
        const double c = std::max({1.0, std::abs(1.0 - gamma * p.node_strong_convexity(i)),
                                   std::abs(1.0 - gamma * p.node_smoothness(i))});
        cert.node_c_sq[i] = c * c;
      }
      cert.formula = "gd: rho = gamma mu, B = 0, c_i = max(1, |1 - gamma lambda_i|)";
      break;
    case MapKind::kSGD:
    case MapKind::kProxSGD: {
      cert.rho = gamma * p.strong_convexity();
      for (std::size_t i = 0; i < n; ++i) {
        const double s = node_sgd_smoothness(map, i);
        cert.node_c_sq[i] = gamma * s <= 2.0 ? 1.0 : 1.0 + gamma * (gamma * s - 2.0) * p.node_smoothness(i);
      }
      cert.formula = "sgd: rho = gamma mu, B = 2 gamma^2 E||g(x*) - grad F(x*)||^2 (gamma <= 1/(2 L_exp))";
      if (is_stochastic(map)) {
        if (mc_budget < 2) throw ConfigError("mc_budget must be >= 2 for stochastic maps", "mc_budget");
        const Vector grad_star = p.mean_field(x_star);
        RngStream draws = stream;
        Accumulator noise, sigma;
        for (std::size_t t = 0; t < mc_budget; ++t) {
          Vector g_mean(p.dim());
          double sq = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const Vector g = minibatch_gradient(map, i, x_star, draws);
            g_mean += g;
            Vector t_i = x_star - gamma * g;
            if (map.kind == MapKind::kProxSGD) t_i = prox(p.h(), gamma, t_i);
            sq += squared_norm(t_i);
          }
          g_mean /= static_cast<double>(n);
          noise.add(squared_distance(g_mean, grad_star));
          sigma.add(sq / static_cast<double>(n));
        }
        const Estimate b = noise.estimate();
        const Estimate s = sigma.estimate();
        cert.B = 2.0 * gamma * gamma * b.mean;
        cert.B_std_error = 2.0 * gamma * gamma * b.std_error;
        cert.sigma_sq = s.mean;
        cert.sigma_sq_std_error = s.std_error;
        cert.provenance = Provenance::kMonteCarlo;
      }
      break;
    }
    case MapKind::kGDA: {
      cert.rho = gda_rho(map);
      for (std::size_t i = 0; i < n; ++i) {
        const double c = 1.0 + gamma * p.node_smoothness(i);
        cert.node_c_sq[i] = c * c;
      }
      cert.formula = "gda: rho = 2 gamma mu - gamma^2 L^2, B = 0, c_i = 1 + gamma L_i";
      break;
    }
    case MapKind::kDavisYin: {
      const double w = p.g().weight;
      const double q = davis_yin_factor(gamma, w, p.strong_convexity(), p.mean_field_lipschitz());
      cert.rho = 1.0 - q * q;
      for (std::size_t i = 0; i < n; ++i) {
        const double qi = davis_yin_factor(gamma, w, p.node_strong_convexity(i), p.node_smoothness(i));
        cert.node_c_sq[i] = qi * qi;
      }
      cert.formula = "davis_yin: rho = 1 - q^2, q = (1-s) + max|2s-1-gamma s t|, s = 1/(1+gamma w_G), B = 0";
      break;
    }
  }
  if (cert.provenance == Provenance::kExact) cert.sigma_sq = exact_sigma();
  // A one-step exact map (e.g. gd with gamma = 1/L at kappa = 1) has rho = 1.
  cert.rho = std::min(cert.rho, 1.0);
  if (!(cert.rho > 0.0)) throw ConfigError("certificate has rho <= 0", "map.gamma");
  double c_sum = 0.0;
  for (double c : cert.node_c_sq) c_sum += c;
  cert.c_sq = c_sum / static_cast<double>(n);
  return cert;
}

StatCheck check_contraction(const MapSpec& map, const ContractionCertificate& cert, const Vector& x_star,
                            const Vector& x, std::size_t draws, RngStream& stream) {
  StatCheck out;
  out.name = "contraction";
  out.rhs = (1.0 - cert.rho) * squared_distance(x, x_star) + cert.B;
  if (!is_stochastic(map)) {
    out.lhs = squared_distance(mean_map(map, x, stream), x_star);
    out.pass = out.lhs <= out.rhs + kRelTol * std::max(out.rhs, squared_distance(x, x_star));
    return out;
  }
  Accumulator acc;
  for (std::size_t t = 0; t < std::max<std::size_t>(draws, 2); ++t) acc.add(squared_distance(mean_map(map, x, stream), x_star));
  const Estimate e = acc.estimate();
  out.lhs = e.mean;
  out.std_error = e.std_error;
  out.pass = out.lhs <= out.rhs + 3.0 * out.std_error;
  return out;
}

StatCheck check_lipschitz(const MapSpec& map, const ContractionCertificate& cert, std::size_t node,
                          const Vector& x, const Vector& y, std::size_t draws, RngStream& stream) {
  StatCheck out;
  out.name = "lipschitz";
  out.rhs = cert.node_c_sq.at(node) * squared_distance(x, y);
  const std::size_t count = is_stochastic(map) ? std::max<std::size_t>(draws, 2) : 1;
  Accumulator acc;
  for (std::size_t t = 0; t < count; ++t) {
    RngStream shared = stream;
    const Vector tx = apply_map(map, node, x, stream);
    const Vector ty = apply_map(map, node, y, shared);
    acc.add(squared_distance(tx, ty));
  }
  const Estimate e = acc.estimate();
  out.lhs = e.mean;
  out.std_error = e.std_error;
  out.pass = count == 1 ? out.lhs <= out.rhs + kRelTol * std::max(out.rhs, 1e-300)
                        : out.lhs <= out.rhs + 3.0 * out.std_error;
  return out;
}

}  // namespace fpci
