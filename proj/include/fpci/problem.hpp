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

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "fpci/rng.hpp"
#include "fpci/vector.hpp"

namespace fpci {

enum class RegularizerKind { kNone, kL1, kL2 };

// weight * ||x||_1 (kL1) or (weight / 2) * ||x||^2 (kL2).
struct Regularizer {
  RegularizerKind kind = RegularizerKind::kNone;
  double weight = 0.0;
  bool operator==(const Regularizer&) const = default;
};

std::string describe(const Regularizer& r);

// prox_{gamma * weight * h}(v): soft-thresholding for l1, v / (1 + gamma w)
// for l2, identity for none.
Vector prox(RegularizerKind kind, double weight, double gamma, const Vector& v);
inline Vector prox(const Regularizer& h, double gamma, const Vector& v) {
  return prox(h.kind, h.weight, gamma, v);
}

enum class ProblemKind { kQuadratic, kRidge, kSaddle };

// A finite-sum problem over n nodes. Each node carries an affine field
// v -> A_i v - b_i:
//   quadratic / ridge: the gradient of f_i(x) = 1/2 x'A_i x - b_i'x (A_i
//   includes the l2 weight lambda);
//   saddle: (grad_x F_i, -grad_y F_i) for
//   F_i(x, y) = mu/2 ||x||^2 - mu/2 ||y||^2 + x'M_i y, acting on z = (x, y).
// Ridge problems additionally keep their rows for minibatch sampling:
// f_i(x) = 1/(2 m_i) ||X_i x - y_i||^2 + lambda/2 ||x||^2.
// Composite problems add nonsmooth terms G and H shared by all nodes.
class ProblemSpec {
 public:
  static ProblemSpec quadratic(std::vector<Eigen::MatrixXd> hessians, std::vector<Vector> linear,
                               double lambda);
  static ProblemSpec ridge(std::vector<Eigen::MatrixXd> features, std::vector<Vector> targets,
                           double lambda);
  static ProblemSpec saddle(double mu, std::vector<Eigen::MatrixXd> couplings);

  ProblemSpec with_regularizers(Regularizer g, Regularizer h) const;

  ProblemKind kind() const noexcept { return kind_; }
  std::size_t nodes() const noexcept { return field_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  double saddle_mu() const noexcept { return mu_; }
  const Regularizer& g() const noexcept { return g_; }
  const Regularizer& h() const noexcept { return h_; }
  bool is_composite() const noexcept {
    return g_.kind != RegularizerKind::kNone || h_.kind != RegularizerKind::kNone;
  }

  const Eigen::MatrixXd& field_matrix(std::size_t node) const { return field_.at(node); }
  const Eigen::VectorXd& field_offset(std::size_t node) const { return offset_.at(node); }
  Eigen::MatrixXd mean_field_matrix() const;
  Eigen::VectorXd mean_field_offset() const;

  // Node field A_i v - b_i (the node gradient for minimization problems).
  Vector field(std::size_t node, const Vector& v) const;
  Vector mean_field(const Vector& v) const;

  // L_i = ||A_i||_2 and L = max_i L_i.
  double node_smoothness(std::size_t node) const { return node_smoothness_.at(node); }
  double smoothness() const;
  // Smallest eigenvalue of A_i (minimization problems) or mu (saddle).
  double node_strong_convexity(std::size_t node) const { return node_mu_.at(node); }
  // mu of the mean problem.
  double strong_convexity() const noexcept { return mu_mean_; }
  // ||mean_i A_i||_2.
  double mean_field_lipschitz() const noexcept { return mean_lipschitz_; }

  bool has_rows() const noexcept { return kind_ == ProblemKind::kRidge; }
  std::size_t rows(std::size_t node) const { return features_.at(node).rows(); }
  const Eigen::MatrixXd& features(std::size_t node) const { return features_.at(node); }
  const Vector& targets(std::size_t node) const { return targets_.at(node); }
  // max_r ||a_r||^2 + lambda over the node's rows.
  double row_smoothness(std::size_t node) const { return row_smoothness_.at(node); }
  // gradient of 1/2 (a_r'x - y_r)^2 + lambda/2 ||x||^2.
  Vector row_gradient(std::size_t node, std::size_t row, const Vector& x) const;

 private:
  ProblemSpec() = default;
  void finalize();

  ProblemKind kind_ = ProblemKind::kQuadratic;
  std::size_t dim_ = 0;
  double lambda_ = 0.0;
  double mu_ = 0.0;
  Regularizer g_{}, h_{};
  std::vector<Eigen::MatrixXd> field_;
  std::vector<Eigen::VectorXd> offset_;
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Vector> targets_;
  std::vector<double> node_smoothness_, node_mu_, row_smoothness_;
  double mu_mean_ = 0.0;
  double mean_lipschitz_ = 0.0;
};

// Minimizer of (1/n) sum_i f_i + G + H, or the saddle point. Smooth and
// saddle problems are solved exactly; l1 terms use proximal gradient to
// ||x^{k+1} - x^k|| <= 1e-14 max(1, ||x||) followed by an active-set polish.
Vector solve_reference(const ProblemSpec& problem);

// Ridge problem over m x d features with geometrically spaced singular
// values, chosen so that X'X/m + lambda I has condition number kappa.
// Targets follow a planted model y = X w + 0.1 e with w, e standard normal.
// Rows are split contiguously into n equal blocks (n must divide m).
ProblemSpec generate_synthetic(std::size_t m, std::size_t d, double kappa, std::size_t n,
                               double lambda, RngStream& stream);

// LIBSVM text ("label idx:value ..." with 1-based indices) as a dense ridge
// problem, rows partitioned contiguously across n nodes.
ProblemSpec load_libsvm(const std::filesystem::path& path, double lambda, std::size_t n);
ProblemSpec parse_libsvm(std::istream& in, double lambda, std::size_t n);

// Saddle problem with n coupling matrices of i.i.d. N(0, 1/d) entries.
ProblemSpec generate_saddle(double mu, std::size_t d, std::size_t n, RngStream& stream);

Eigen::Map<const Eigen::VectorXd> as_eigen(const Vector& v);
Vector to_vector(const Eigen::VectorXd& v);

}  // namespace fpci
