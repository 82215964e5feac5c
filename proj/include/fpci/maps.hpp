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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpci/problem.hpp"
#include "fpci/rng.hpp"
#include "fpci/vector.hpp"

namespace fpci {

// Stochastic fixed-point maps T_i(x, s_i) built from a ProblemSpec.
//   kGD        x - gamma grad f_i(x)
//   kSGD       x - gamma g_i(x, s), g_i a with-replacement minibatch mean of
//              row gradients (the full node gradient when the minibatch
//              covers the node's rows)
//   kProxSGD   prox_{gamma H}(x - gamma g_i(x, s))
//   kGDA       z - gamma (grad_x F_i, -grad_y F_i)(z)
//   kDavisYin  z - prox_{gamma G}(z)
//                + prox_{gamma H}(2 prox_{gamma G}(z) - z - gamma grad f_i(prox_{gamma G}(z)))
enum class MapKind { kGD, kSGD, kProxSGD, kGDA, kDavisYin };

std::string to_string(MapKind kind);
std::optional<MapKind> parse_map_kind(const std::string& name);

struct MapSpec {
  MapKind kind = MapKind::kGD;
  double gamma = 0.0;
  std::size_t minibatch = 1;
  std::shared_ptr<const ProblemSpec> problem;
};

// L_F + max_i Lrow_i / (n m), the expected-smoothness constant of the
// node-averaged minibatch estimator (nodes whose minibatch covers all their
// rows contribute no sampling noise).
double expected_smoothness(const ProblemSpec& problem, std::size_t minibatch);

// gd, davis_yin: 1/L; sgd, prox_sgd: 1/(2 L_exp); gda: mu / L^2.
double auto_gamma(MapKind kind, const ProblemSpec& problem, std::size_t minibatch);

// Validated map; `gamma` unset selects auto_gamma. Throws ConfigError naming
// the offending constant.
MapSpec make_map(MapKind kind, std::shared_ptr<const ProblemSpec> problem, std::optional<double> gamma,
                 std::size_t minibatch = 1);
void validate_map(const MapSpec& map);

bool is_stochastic(const MapSpec& map);

// One application of T_i(x, s_i); stochastic maps consume `stream`.
Vector apply_map(const MapSpec& map, std::size_t node, const Vector& x, RngStream& stream);

// Fixed point x* of the mean map T. Equals solve_reference except for
// Davis-Yin, whose fixed point is z* = x* + gamma grad G(x*).
Vector map_fixed_point(const MapSpec& map);

enum class Provenance { kExact, kMonteCarlo };
std::string to_string(Provenance p);

// Constants of: E||T(x,s) - x*||^2 <= (1 - rho)||x - x*||^2 + B and
// E||T_i(x,s) - T_i(y,s)||^2 <= c_i^2 ||x - y||^2, plus
// sigma^2 = (1/n) sum_i E||T_i(x*, s_i)||^2.
struct ContractionCertificate {
  double rho = 0.0;
  double B = 0.0;
  double c_sq = 1.0;  // (1/n) sum_i c_i^2
  std::vector<double> node_c_sq;
  double sigma_sq = 0.0;
  Provenance provenance = Provenance::kExact;  // of B and sigma_sq
  double B_std_error = 0.0;
  double sigma_sq_std_error = 0.0;
  std::string formula;  // which analysis produced the constants
};

// gd:        rho = gamma mu, B = 0, c_i^2 = 1.
// sgd/prox:  rho = gamma mu, B = 2 gamma^2 E||avg_i g_i(x*) - grad F(x*)||^2
//            (Monte-Carlo over mc_budget draws), c_i^2 from the node's
//            expected smoothness (1 when gamma S_i <= 2).
// gda:       rho = 2 gamma mu - gamma^2 L^2, B = 0, c_i^2 = (1 + gamma L_i)^2.
// davis_yin: rho = 1 - q^2 with q = (1 - s) + max_{t in {mu, L}} |2s - 1 - gamma s t|,
//            s = 1/(1 + gamma w_G); B = 0, c_i = q_i. Valid for G = l2(w_G),
//            any prox-friendly H and quadratic F.
ContractionCertificate certificate_of(const MapSpec& map, std::size_t mc_budget, const RngStream& stream);

struct StatCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

// E||T(x,s) - x*||^2 versus (1 - rho)||x - x*||^2 + B. Deterministic maps are
// evaluated once and compared up to rounding; stochastic maps use `draws`
// samples and pass within 3 standard errors.
StatCheck check_contraction(const MapSpec& map, const ContractionCertificate& cert, const Vector& x_star,
                            const Vector& x, std::size_t draws, RngStream& stream);

// E||T_i(x,s) - T_i(y,s)||^2 versus c_i^2 ||x - y||^2 (common noise s).
StatCheck check_lipschitz(const MapSpec& map, const ContractionCertificate& cert, std::size_t node,
                          const Vector& x, const Vector& y, std::size_t draws, RngStream& stream);

}  // namespace fpci
