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

#include "fpci/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpci/error.hpp"

namespace fpci {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eta_cap(const ContractionCertificate& cert, double omega, std::size_t n) {
  if (omega == 0.0) return 1.0;
  return std::min(1.0, cert.rho * static_cast<double>(n) / (12.0 * omega * cert.c_sq));
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

BoundReport plain_bound(const ContractionCertificate& cert, double omega, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double penalty = 2.0 * omega * cert.c_sq / nn;
  BoundReport r;
  r.rate_factor = 1.0 - cert.rho + penalty;
  r.valid = cert.rho > penalty;
  if (r.valid) {
    r.plateau_radius_sq = (cert.B + 2.0 * omega * cert.sigma_sq / nn) / (cert.rho - penalty);
    r.hypothesis_note = "rho = " + fmt(cert.rho) + " > 2 omega c^2 / n = " + fmt(penalty);
  } else {
    r.plateau_radius_sq = kInf;
    r.hypothesis_note = "hypothesis fails: rho = " + fmt(cert.rho) + " <= 2 omega c^2 / n = " + fmt(penalty) +
                        "; no convergence guarantee";
  }
  return r;
}

VrParams vr_stepsizes(const ContractionCertificate& cert, double omega, std::size_t n) {
  return {1.0 / (1.0 + omega), eta_cap(cert, omega, n)};
}

BoundReport vr_bound(const ContractionCertificate& cert, const VrParams& params, double omega, std::size_t n) {
  BoundReport r;
  const double m = std::min(params.alpha, params.eta * cert.rho);
  r.rate_factor = 1.0 - m / 2.0;
  const double alpha_max = 1.0 / (1.0 + omega);
  const double eta_max = eta_cap(cert, omega, n);
  std::string note;
  if (!(params.alpha > 0.0) || params.alpha > alpha_max * (1.0 + 1e-12)) {
    note = "alpha = " + fmt(params.alpha) + " outside (0, 1/(1+omega)] = (0, " + fmt(alpha_max) + "]";
  } else if (!(params.eta > 0.0) || params.eta > eta_max * (1.0 + 1e-12)) {
    note = "eta = " + fmt(params.eta) + " outside (0, min(1, rho n/(12 omega c^2))] = (0, " + fmt(eta_max) + "]";
  }
  r.valid = note.empty();
  if (!r.valid) {
    r.plateau_radius_sq = kInf;
    r.hypothesis_note = "hypothesis fails: " + note;
    return r;
  }
  r.plateau_radius_sq = 2.0 * params.eta * cert.B / m;
  r.hypothesis_note = "min(alpha, eta rho) = " + fmt(m);
  if (omega == 0.0) r.hypothesis_note += "; omega = 0 so eta defaults to 1";
  if (params.alpha < 0.1 * params.eta * cert.rho) {
    r.hypothesis_note += "; warning: alpha << eta rho limits the rate";
  }
  return r;
}

double geometric_bound(double A, double B0, double r0, std::size_t k) {
  if (!(A > 0.0 && A < 1.0)) throw Error("geometric_bound requires 0 < A < 1, got A = " + fmt(A));
  return std::pow(A, static_cast<double>(k)) * r0 + B0 / (1.0 - A);
}

double envelope(const BoundReport& report, double initial, std::size_t k) {
  if (!report.valid) return kInf;
  return std::pow(report.rate_factor, static_cast<double>(k)) * initial + report.plateau_radius_sq;
}

}  // namespace fpci
