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

#include "fpci/compressors.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "fpci/error.hpp"

namespace fpci {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t ceil_log2(std::uint64_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

// 2^a <= |v| < 2^(a+1) is rounded to sign(v) 2^a with probability
// (2^(a+1) - |v|) / 2^a. frexp gives the exact binary exponent for
// subnormals too, and both the subtraction and the division are exact.
double natural_round(double v, RngStream& stream) {
  if (v == 0.0) return 0.0;
  int exponent = 0;
  std::frexp(v, &exponent);  // |v| = m 2^exponent, m in [0.5, 1)
  const double low = std::ldexp(1.0, exponent - 1);
  const double high = 2.0 * low;
  const double magnitude = std::fabs(v);
  const double p_low = (high - magnitude) / low;
  const double rounded = stream.uniform() < p_low ? low : high;
  return std::copysign(rounded, v);
}

Vector apply_rand_k(std::size_t k, const Vector& x, RngStream& stream) {
  const std::size_t d = x.dim();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t t = 0; t < k; ++t) {
    const auto pick = t + static_cast<std::size_t>(stream.uniform_index(d - t));
    std::swap(order[t], order[pick]);
  }
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  std::vector<double> out(d, 0.0);
  for (std::size_t t = 0; t < k; ++t) out[order[t]] = scale * x[order[t]];
  return Vector(std::move(out));
}

Vector apply_dithering(std::uint32_t levels, const Vector& x, RngStream& stream) {
  const double norm = std::sqrt(squared_norm(x));
  std::vector<double> out(x.dim(), 0.0);
  if (norm == 0.0) return Vector(std::move(out));
  const double s = static_cast<double>(levels);
  for (std::size_t j = 0; j < x.dim(); ++j) {
    const double scaled = s * std::fabs(x[j]) / norm;
    const double level = std::floor(scaled);
    const double p_up = scaled - level;
    const double chosen = stream.uniform() < p_up ? level + 1.0 : level;
    out[j] = std::copysign(norm * chosen / s, x[j]);
  }
  return Vector(std::move(out));
}

}  // namespace

std::string describe(const CompressorSpec& spec) {
  return std::visit(overloaded{
                        [](const IdentityCompressor&) { return std::string("identity"); },
                        [](const RandK& c) { return "rand_k(k=" + std::to_string(c.k) + ")"; },
                        [](const NaturalCompression&) { return std::string("natural"); },
                        [](const StandardDithering& c) {
                          return "dithering(s=" + std::to_string(c.levels) + ")";
                        },
                    },
                    spec);
}

void validate_compressor(const CompressorSpec& spec, std::size_t d) {
  if (const auto* rk = std::get_if<RandK>(&spec)) {
    if (rk->k == 0) throw ConfigError("rand_k requires k >= 1", "compressor.k");
    if (rk->k > d) {
      throw ConfigError("rand_k requires k <= d (k=" + std::to_string(rk->k) +
                            ", d=" + std::to_string(d) + ")",
                        "compressor.k");
    }
  }
  if (const auto* sd = std::get_if<StandardDithering>(&spec); sd && sd->levels == 0) {
    throw ConfigError("dithering requires levels >= 1", "compressor.levels");
  }
  if (d == 0) throw ConfigError("compression of an empty vector", "compressor");
}

Vector apply_compressor(const CompressorSpec& spec, const Vector& x, RngStream& stream) {
  validate_compressor(spec, x.dim());
  return std::visit(overloaded{
                        [&](const IdentityCompressor&) { return x; },
                        [&](const RandK& c) { return apply_rand_k(c.k, x, stream); },
                        [&](const NaturalCompression&) {
                          std::vector<double> out(x.dim());
                          for (std::size_t j = 0; j < x.dim(); ++j) out[j] = natural_round(x[j], stream);
                          return Vector(std::move(out));
                        },
                        [&](const StandardDithering& c) { return apply_dithering(c.levels, x, stream); },
                    },
                    spec);
}

double compressor_omega(const CompressorSpec& spec, std::size_t d) {
  validate_compressor(spec, d);
  const auto dd = static_cast<double>(d);
  return std::visit(overloaded{
                        [](const IdentityCompressor&) { return 0.0; },
                        [&](const RandK& c) { return dd / static_cast<double>(c.k) - 1.0; },
                        [](const NaturalCompression&) { return 0.125; },
                        [&](const StandardDithering& c) {
                          const auto s = static_cast<double>(c.levels);
                          return std::min(dd / (s * s), std::sqrt(dd) / s);
                        },
                    },
                    spec);
}

MomentEstimate estimate_moments(const CompressorSpec& spec, const Vector& x, std::size_t samples,
                                RngStream& stream) {
  if (samples < 2) throw ConfigError("estimate_moments needs at least 2 samples", "samples");
  const std::size_t d = x.dim();
  // Accumulate deviations from x so deterministic coordinates average exactly.
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  double dev_sum = 0.0, dev_sum_sq = 0.0;
  for (std::size_t m = 0; m < samples; ++m) {
    const Vector y = apply_compressor(spec, x, stream);
    double dev = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = y[j] - x[j];
      sum[j] += e;
      sum_sq[j] += e * e;
      dev += e * e;
    }
    dev_sum += dev;
    dev_sum_sq += dev * dev;
  }
  const auto n = static_cast<double>(samples);
  std::vector<double> mean(d), se(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double mean_err = sum[j] / n;
    mean[j] = x[j] + mean_err;
    const double var = std::max(0.0, (sum_sq[j] - n * mean_err * mean_err) / (n - 1.0));
    se[j] = std::sqrt(var / n);
  }
  MomentEstimate est{Vector(std::move(mean)), Vector(std::move(se)), dev_sum / n, 0.0};
  const double dev_var =
      std::max(0.0, (dev_sum_sq - n * est.mean_sq_deviation * est.mean_sq_deviation) / (n - 1.0));
  est.std_error = std::sqrt(dev_var / n);
  return est;
}

std::uint64_t message_bits(const CompressorSpec& spec, std::size_t d) {
  const auto dd = static_cast<std::uint64_t>(d);
  return std::visit(overloaded{
                        [&](const IdentityCompressor&) { return 64 * dd; },
                        [&](const RandK& c) {
                          return static_cast<std::uint64_t>(c.k) * (64 + ceil_log2(dd));
                        },
                        [&](const NaturalCompression&) { return 9 * dd; },
                        [&](const StandardDithering& c) {
                          return 64 + dd * (1 + ceil_log2(static_cast<std::uint64_t>(c.levels) + 1));
                        },
                    },
                    spec);
}

}  // namespace fpci
