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
#include <string>

#include "fpci/algorithms.hpp"
#include "fpci/maps.hpp"

namespace fpci {

// Conclusion of a convergence result: E[r^k] (plain) or E[Psi^k] (vr) is at
// most rate_factor^k * (initial value) + plateau_radius_sq. When the
// hypothesis fails, valid is false and the plateau is +infinity.
struct BoundReport {
  double rate_factor = 1.0;
  double plateau_radius_sq = 0.0;
  bool valid = false;
  std::string hypothesis_note;
};

// rate = 1 - rho + 2 omega c^2 / n, plateau = (B + 2 omega sigma^2 / n) / (rho - 2 omega c^2 / n),
// valid iff rho > 2 omega c^2 / n.
BoundReport plain_bound(const ContractionCertificate& cert, double omega, std::size_t n);

// alpha = 1/(1 + omega); eta = min(1, rho n / (12 omega c^2)), 1 when omega = 0.
VrParams vr_stepsizes(const ContractionCertificate& cert, double omega, std::size_t n);

// rate = 1 - min(alpha, eta rho)/2, plateau = 2 eta B / min(alpha, eta rho).
// Invalid when alpha > 1/(1 + omega), eta > min(1, rho n / (12 omega c^2))
// or either is not positive.
BoundReport vr_bound(const ContractionCertificate& cert, const VrParams& params, double omega, std::size_t n);

// A^k r0 + B0 / (1 - A); throws Error unless 0 < A < 1.
double geometric_bound(double A, double B0, double r0, std::size_t k);

// rate_factor^k * initial + plateau_radius_sq (+infinity when invalid).
double envelope(const BoundReport& report, double initial, std::size_t k);

}  // namespace fpci
