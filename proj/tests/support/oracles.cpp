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

#include "oracles.hpp"

#include <cmath>
#include <functional>

#include "fpci/rng.hpp"

namespace oracle {

std::vector<Outcome> enumerate_rand_k(const std::vector<double>& x, std::size_t k) {
  const std::size_t d = x.size();
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::size_t> current;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (current.size() == k) {
      subsets.push_back(current);
      return;
    }
    for (std::size_t j = start; j < d; ++j) {
      current.push_back(j);
      rec(j + 1);
      current.pop_back();
    }
  };
  rec(0);
  std::vector<Outcome> out;
  const double p = 1.0 / static_cast<double>(subsets.size());
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  for (const auto& s : subsets) {
    std::vector<double> v(d, 0.0);
    for (std::size_t j : s) v[j] = scale * x[j];
    out.emplace_back(p, v);
  }
  return out;
}

std::vector<Outcome> enumerate_natural(const std::vector<double>& x) {
  std::vector<Outcome> out{{1.0, {}}};
  for (double v : x) {
    std::vector<std::pair<double, double>> choices;
    const double a = std::fabs(v);
    if (a == 0.0) {
      choices.emplace_back(1.0, 0.0);
    } else {
      const double low = std::exp2(std::floor(std::log2(a)));
      const double high = 2.0 * low;
      if (a == low) {
        choices.emplace_back(1.0, v);
      } else {
        const double p_low = (high - a) / low;
        choices.emplace_back(p_low, std::copysign(low, v));
        choices.emplace_back(1.0 - p_low, std::copysign(high, v));
      }
    }
    std::vector<Outcome> next;
    for (const auto& [p, vec] : out) {
      for (const auto& [q, c] : choices) {
        auto w = vec;
        w.push_back(c);
        next.emplace_back(p * q, w);
      }
    }
    out = std::move(next);
  }
  return out;
}

ExactMoments moments(const std::vector<Outcome>& outcomes, const std::vector<double>& x) {
  ExactMoments m;
  m.mean.assign(x.size(), 0.0);
  for (const auto& [p, v] : outcomes) {
    m.total_probability += p;
    double dev = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      m.mean[j] += p * v[j];
      dev += (v[j] - x[j]) * (v[j] - x[j]);
    }
    m.mean_sq_deviation += p * dev;
  }
  return m;
}

Eigen::VectorXd affine_iterate(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double gamma,
                               const Eigen::VectorXd& x0, std::size_t k) {
  const Eigen::VectorXd x_star = A.ldlt().solve(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const Eigen::VectorXd factors = (1.0 - gamma * eig.eigenvalues().array()).pow(static_cast<double>(k)).matrix();
  const Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * (x0 - x_star);
  return x_star + eig.eigenvectors() * factors.cwiseProduct(coeffs);
}

double exact_sgd_noise(const fpci::ProblemSpec& problem, std::size_t minibatch, const fpci::Vector& x) {
  const std::size_t n = problem.nodes();
  const Eigen::VectorXd xe = to_eigen(x);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd& X = problem.features(i);
    const Eigen::VectorXd y = to_eigen(problem.targets(i));
    const auto m = static_cast<double>(X.rows());
    if (minibatch >= static_cast<std::size_t>(X.rows())) continue;
    // Row gradients a_r (a_r'x - y_r) + lambda x; the lambda part cancels in the variance.
    Eigen::VectorXd residual = X * xe - y;
    Eigen::MatrixXd grads = X.array().colwise() * residual.array();
    const Eigen::RowVectorXd mean = grads.colwise().sum() / m;
    double var = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) var += (grads.row(r) - mean).squaredNorm();
    total += var / m / static_cast<double>(minibatch);
  }
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

std::vector<fpci::Vector> single_node_plain(const fpci::MapSpec& map, const fpci::CompressorSpec& comp,
                                            const fpci::Vector& x0, std::uint64_t seed, std::size_t iterations) {
  const fpci::RngStream root(seed);
  std::vector<fpci::Vector> xs{x0};
  fpci::Vector x = x0;
  for (std::size_t k = 0; k < iterations; ++k) {
    fpci::RngStream s = root.derive({fpci::stream_role::kMapNoise, 0, k});
    fpci::RngStream xi = root.derive({fpci::stream_role::kCompressionNoise, 0, k});
    x = fpci::apply_compressor(comp, fpci::apply_map(map, 0, x, s), xi);
    xs.push_back(x);
  }
  return xs;
}

std::vector<fpci::Vector> single_node_vr(const fpci::MapSpec& map, const fpci::CompressorSpec& comp,
                                         const fpci::VrParams& params, const fpci::Vector& x0, std::uint64_t seed,
                                         std::size_t iterations) {
  const fpci::RngStream root(seed);
  std::vector<fpci::Vector> xs{x0};
  fpci::Vector x = x0;
  fpci::Vector h(x0.dim());
  for (std::size_t k = 0; k < iterations; ++k) {
    fpci::RngStream s = root.derive({fpci::stream_role::kMapNoise, 0, k});
    fpci::RngStream xi = root.derive({fpci::stream_role::kCompressionNoise, 0, k});
    const fpci::Vector delta = fpci::apply_compressor(comp, fpci::apply_map(map, 0, x, s) - h, xi);
    const fpci::Vector big_delta = delta + h;
    h += params.alpha * delta;
    x = (1.0 - params.eta) * x + params.eta * big_delta;
    xs.push_back(x);
  }
  return xs;
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

Eigen::VectorXd to_eigen(const fpci::Vector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.dim()));
  for (std::size_t j = 0; j < v.dim(); ++j) out(static_cast<Eigen::Index>(j)) = v[j];
  return out;
}

fpci::Vector from_eigen(const Eigen::VectorXd& v) {
  return fpci::Vector(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace oracle
