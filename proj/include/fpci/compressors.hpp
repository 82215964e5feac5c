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
#include <string>
#include <variant>

#include "fpci/rng.hpp"
#include "fpci/vector.hpp"

namespace fpci {

// Unbiased randomized compression operators C(x; xi): E[C(x)] = x and
// E||C(x) - x||^2 <= omega ||x||^2.

struct IdentityCompressor {
  bool operator==(const IdentityCompressor&) const = default;
};

// Keep k coordinates chosen uniformly without replacement, scaled by d/k.
struct RandK {
  std::size_t k = 1;
  bool operator==(const RandK&) const = default;
};

// Randomized rounding of each coordinate to one of its two neighbouring
// signed powers of two.
struct NaturalCompression {
  bool operator==(const NaturalCompression&) const = default;
};

// l2 stochastic quantization onto s uniform levels of ||x||.
struct StandardDithering {
  std::uint32_t levels = 1;
  bool operator==(const StandardDithering&) const = default;
};

using CompressorSpec = std::variant<IdentityCompressor, RandK, NaturalCompression, StandardDithering>;

std::string describe(const CompressorSpec& spec);

// Throws ConfigError if `spec` cannot be applied to vectors of dimension d.
void validate_compressor(const CompressorSpec& spec, std::size_t d);

// Throws ConfigError (RandK with k > d) or NonFiniteError.
Vector apply_compressor(const CompressorSpec& spec, const Vector& x, RngStream& stream);

// Identity: 0; RandK: d/k - 1; natural: 1/8; dithering: min(d/s^2, sqrt(d)/s).
double compressor_omega(const CompressorSpec& spec, std::size_t d);

struct MomentEstimate {
  Vector mean;                    // empirical E[C(x)]
  Vector mean_std_error;          // componentwise standard error of `mean`
  double mean_sq_deviation = 0;   // empirical E||C(x) - x||^2
  double std_error = 0;           // standard error of mean_sq_deviation
};

// Monte-Carlo moments over `samples` >= 2 draws consumed from `stream`.
MomentEstimate estimate_moments(const CompressorSpec& spec, const Vector& x, std::size_t samples,
                                RngStream& stream);

// Bit-cost model of one compressed message of dimension d:
//   identity 64d, rand-k k(64 + ceil(log2 d)), natural 9d,
//   dithering 64 + d(1 + ceil(log2(s + 1))).
std::uint64_t message_bits(const CompressorSpec& spec, std::size_t d);

}  // namespace fpci
