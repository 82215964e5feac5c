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

#include "fpci/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fpci/error.hpp"

namespace fpci {
namespace {

constexpr double kSymmetryTol = 1e-12;

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

Spectrum symmetric_spectrum(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return {solver.eigenvalues().minCoeff(), solver.eigenvalues().maxCoeff()};
}

double spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().size() == 0 ? 0.0 : svd.singularValues()(0);
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

std::vector<std::size_t> block_sizes(std::size_t rows, std::size_t n) {
  std::vector<std::size_t> sizes(n, rows / n);
  for (std::size_t i = 0; i < rows % n; ++i) ++sizes[i];
  return sizes;
}

ProblemSpec partition_rows(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           double lambda, std::size_t n) {
  if (n == 0) throw ConfigError("node count must be >= 1", "nodes");
  if (static_cast<std::size_t>(features.rows()) < n) {
    throw ConfigError("fewer rows (" + std::to_string(features.rows()) + ") than nodes (" +
                          std::to_string(n) + ")",
                      "nodes");
  }
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<Vector> block_targets;
  Eigen::Index start = 0;
  for (std::size_t size : block_sizes(features.rows(), n)) {
    const auto rows = static_cast<Eigen::Index>(size);
    blocks.emplace_back(features.middleRows(start, rows));
    block_targets.push_back(to_vector(targets.segment(start, rows)));
    start += rows;
  }
  return ProblemSpec::ridge(std::move(blocks), std::move(block_targets), lambda);
}

}  // namespace

Eigen::Map<const Eigen::VectorXd> as_eigen(const Vector& v) {
  return {v.data(), static_cast<Eigen::Index>(v.dim())};
}

Vector to_vector(const Eigen::VectorXd& v) { return Vector(std::vector<double>(v.data(), v.data() + v.size())); }

std::string describe(const Regularizer& r) {
  switch (r.kind) {
    case RegularizerKind::kNone: return "none";
    case RegularizerKind::kL1: return "l1(" + std::to_string(r.weight) + ")";
    case RegularizerKind::kL2: return "l2(" + std::to_string(r.weight) + ")";
  }
  return "?";
}

Vector prox(RegularizerKind kind, double weight, double gamma, const Vector& v) {
  const double t = gamma * weight;
  if (t < 0.0) throw ConfigError("prox requires gamma * weight >= 0", "weight");
  switch (kind) {
    case RegularizerKind::kNone: return v;
    case RegularizerKind::kL2: return v / (1.0 + t);
    case RegularizerKind::kL1: {
      std::vector<double> out(v.dim());
      for (std::size_t j = 0; j < v.dim(); ++j) {
        const double mag = std::fabs(v[j]) - t;
        out[j] = mag > 0.0 ? std::copysign(mag, v[j]) : 0.0;
      }
      return Vector(std::move(out));
    }
  }
  return v;
}

ProblemSpec ProblemSpec::quadratic(std::vector<Eigen::MatrixXd> hessians, std::vector<Vector> linear,
                                   double lambda) {
  if (hessians.empty()) throw ConfigError("quadratic problem needs at least one node", "nodes");
  if (hessians.size() != linear.size()) {
    throw DimensionError("quadratic problem: " + std::to_string(hessians.size()) + " matrices but " +
                         std::to_string(linear.size()) + " vectors");
  }
  if (!(lambda >= 0.0)) throw ConfigError("l2 weight must be >= 0", "lambda");
  ProblemSpec p;
  p.kind_ = ProblemKind::kQuadratic;
  p.dim_ = linear.front().dim();
  p.lambda_ = lambda;
  for (std::size_t i = 0; i < hessians.size(); ++i) {
    auto& a = hessians[i];
    require_finite(a, "quadratic matrix");
    if (static_cast<std::size_t>(a.rows()) != p.dim_ || static_cast<std::size_t>(a.cols()) != p.dim_ ||
        linear[i].dim() != p.dim_) {
      throw DimensionError("quadratic problem: node " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (max_abs(a - a.transpose()) > kSymmetryTol * std::max(1.0, max_abs(a))) {
      throw ConfigError("quadratic matrix of node " + std::to_string(i) + " is not symmetric", "matrix");
    }
    a.diagonal().array() += lambda;
    p.field_.push_back(std::move(a));
    p.offset_.push_back(as_eigen(linear[i]));
  }
  p.finalize();
  return p;
}

ProblemSpec ProblemSpec::ridge(std::vector<Eigen::MatrixXd> features, std::vector<Vector> targets,
                               double lambda) {
  if (features.empty()) throw ConfigError("ridge problem needs at least one node", "nodes");
  if (features.size() != targets.size()) throw DimensionError("ridge problem: features/targets node count mismatch");
  if (!(lambda > 0.0)) throw ConfigError("ridge problems require lambda > 0", "lambda");
  ProblemSpec p;
  p.kind_ = ProblemKind::kRidge;
  p.dim_ = static_cast<std::size_t>(features.front().cols());
  p.lambda_ = lambda;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    require_finite(x, "feature matrix");
    if (static_cast<std::size_t>(x.cols()) != p.dim_) {
      throw DimensionError("ridge problem: node " + std::to_string(i) + " has " + std::to_string(x.cols()) +
                           " columns, expected " + std::to_string(p.dim_));
    }
    if (x.rows() == 0) throw ConfigError("ridge node " + std::to_string(i) + " has no rows", "nodes");
    if (static_cast<std::size_t>(x.rows()) != targets[i].dim()) {
      throw DimensionError("ridge problem: node " + std::to_string(i) + " rows/targets mismatch");
    }
    const double m = static_cast<double>(x.rows());
    Eigen::MatrixXd a = x.transpose() * x / m;
    a.diagonal().array() += lambda;
    p.field_.push_back(std::move(a));
    p.offset_.push_back(x.transpose() * as_eigen(targets[i]) / m);
    p.row_smoothness_.push_back(x.rowwise().squaredNorm().maxCoeff() + lambda);
  }
  p.features_ = std::move(features);
  p.targets_ = std::move(targets);
  p.finalize();
  return p;
}

ProblemSpec ProblemSpec::saddle(double mu, std::vector<Eigen::MatrixXd> couplings) {
  if (!(mu > 0.0)) throw ConfigError("saddle problem requires mu > 0", "mu");
  if (couplings.empty()) throw ConfigError("saddle problem needs at least one node", "nodes");
  ProblemSpec p;
  p.kind_ = ProblemKind::kSaddle;
  p.mu_ = mu;
  const auto half = couplings.front().rows();
  if (couplings.front().cols() != half) throw DimensionError("saddle coupling matrices must be square");
  p.dim_ = static_cast<std::size_t>(2 * half);
  for (const auto& m : couplings) {
    require_finite(m, "coupling matrix");
    if (m.rows() != half || m.cols() != half) throw DimensionError("saddle coupling matrices differ in size");
    Eigen::MatrixXd g = mu * Eigen::MatrixXd::Identity(2 * half, 2 * half);
    g.topRightCorner(half, half) = m;
    g.bottomLeftCorner(half, half) = -m.transpose();
    p.field_.push_back(std::move(g));
    p.offset_.push_back(Eigen::VectorXd::Zero(2 * half));
  }
  p.finalize();
  return p;
}

void ProblemSpec::finalize() {
  node_smoothness_.clear();
  node_mu_.clear();
  const Eigen::MatrixXd mean = mean_field_matrix();
  if (kind_ == ProblemKind::kSaddle) {
    for (const auto& g : field_) {
      node_smoothness_.push_back(spectral_norm(g));
      node_mu_.push_back(mu_);
    }
    mu_mean_ = mu_;
    mean_lipschitz_ = spectral_norm(mean);
    return;
  }
  for (std::size_t i = 0; i < field_.size(); ++i) {
    const Spectrum s = symmetric_spectrum(field_[i]);
    if (s.min < -1e-10 * std::max(1.0, s.max)) {
      throw ConfigError("node " + std::to_string(i) + " objective is not convex (min eigenvalue " +
                            std::to_string(s.min) + ")",
                        "matrix");
    }
    node_smoothness_.push_back(s.max);
    node_mu_.push_back(std::max(0.0, s.min));
  }
  const Spectrum s = symmetric_spectrum(mean);
  if (!(s.min > 0.0)) {
    throw ConfigError("mean objective is not strongly convex (mu = " + std::to_string(s.min) + ")", "lambda");
  }
  mu_mean_ = s.min;
  mean_lipschitz_ = s.max;
}

ProblemSpec ProblemSpec::with_regularizers(Regularizer g, Regularizer h) const {
  for (const auto* r : {&g, &h}) {
    if (!(r->weight >= 0.0) || !std::isfinite(r->weight)) throw ConfigError("regularizer weight must be >= 0", "weight");
  }
  if (kind_ == ProblemKind::kSaddle && (g.kind != RegularizerKind::kNone || h.kind != RegularizerKind::kNone)) {
    throw ConfigError("saddle problems do not take regularizers", "regularizer");
  }
  ProblemSpec p = *this;
  p.g_ = g;
  p.h_ = h;
  return p;
}

Eigen::MatrixXd ProblemSpec::mean_field_matrix() const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& a : field_) acc += a;
  return acc / static_cast<double>(field_.size());
}

Eigen::VectorXd ProblemSpec::mean_field_offset() const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& b : offset_) acc += b;
  return acc / static_cast<double>(offset_.size());
}

Vector ProblemSpec::field(std::size_t node, const Vector& v) const {
  if (node >= nodes()) throw ConfigError("node index " + std::to_string(node) + " out of range", "node");
  if (v.dim() != dim_) throw DimensionError("field: expected dimension " + std::to_string(dim_));
  Eigen::VectorXd out = field_[node] * as_eigen(v) - offset_[node];
  return to_vector(out);
}

Vector ProblemSpec::mean_field(const Vector& v) const {
  if (v.dim() != dim_) throw DimensionError("mean_field: expected dimension " + std::to_string(dim_));
  Eigen::VectorXd out = mean_field_matrix() * as_eigen(v) - mean_field_offset();
  return to_vector(out);
}

double ProblemSpec::smoothness() const {
  return *std::max_element(node_smoothness_.begin(), node_smoothness_.end());
}

Vector ProblemSpec::row_gradient(std::size_t node, std::size_t row, const Vector& x) const {
  const auto& features = features_.at(node);
  const auto r = static_cast<Eigen::Index>(row);
  const double residual = features.row(r).dot(as_eigen(x)) - targets_[node][row];
  Eigen::VectorXd g = residual * features.row(r).transpose() + lambda_ * as_eigen(x);
  return to_vector(g);
}

Vector solve_reference(const ProblemSpec& problem) {
  const Eigen::MatrixXd a = problem.mean_field_matrix();
  const Eigen::VectorXd b = problem.mean_field_offset();
  if (problem.kind() == ProblemKind::kSaddle) {
    return to_vector(Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(b));
  }
  double w1 = 0.0, w2 = 0.0;
  for (const auto* r : {&problem.g(), &problem.h()}) {
    if (r->kind == RegularizerKind::kL1) w1 += r->weight;
    if (r->kind == RegularizerKind::kL2) w2 += r->weight;
  }
  Eigen::MatrixXd smooth = a;
  smooth.diagonal().array() += w2;
  Eigen::LLT<Eigen::MatrixXd> llt(smooth);
  if (llt.info() != Eigen::Success) throw ConvergenceError("reference solve: Hessian is not positive definite");
  if (w1 == 0.0) return to_vector(llt.solve(b));

  // Proximal gradient on the l1 part.
  const double lipschitz = symmetric_spectrum(smooth).max;
  const double step = 1.0 / lipschitz;
  const auto d = static_cast<Eigen::Index>(problem.dim());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  constexpr std::size_t kMaxIterations = 10'000'000;
  bool converged = false;
  for (std::size_t it = 0; it < kMaxIterations; ++it) {
    Eigen::VectorXd v = x - step * (smooth * x - b);
    Eigen::VectorXd next = v.array().sign() * (v.array().abs() - step * w1).max(0.0);
    const double change = (next - x).norm();
    x = std::move(next);
    if (change <= 1e-14 * std::max(1.0, x.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("reference solve: proximal gradient did not converge");

  // Active-set polish: solve the KKT system on the support with fixed signs.
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (x(j) != 0.0) support.push_back(j);
  }
  if (support.empty()) return to_vector(x);
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd sub(s, s);
  Eigen::VectorXd rhs(s);
  for (Eigen::Index p = 0; p < s; ++p) {
    rhs(p) = b(support[p]) - w1 * (x(support[p]) > 0.0 ? 1.0 : -1.0);
    for (Eigen::Index q = 0; q < s; ++q) sub(p, q) = smooth(support[p], support[q]);
  }
  const Eigen::VectorXd xs = sub.llt().solve(rhs);
  Eigen::VectorXd polished = Eigen::VectorXd::Zero(d);
  for (Eigen::Index p = 0; p < s; ++p) {
    if ((xs(p) > 0.0) != (x(support[p]) > 0.0) || xs(p) == 0.0) return to_vector(x);
    polished(support[p]) = xs(p);
  }
  const Eigen::VectorXd residual = b - smooth * polished;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (polished(j) == 0.0 && std::fabs(residual(j)) > w1 * (1.0 + 1e-9)) return to_vector(x);
  }
  return to_vector(polished);
}

ProblemSpec generate_synthetic(std::size_t m, std::size_t d, double kappa, std::size_t n, double lambda,
                               RngStream& stream) {
  if (!(kappa >= 1.0)) throw ConfigError("condition number must be >= 1", "condition_number");
  if (d == 0) throw ConfigError("dimension must be >= 1", "dim");
  if (m < d) throw ConfigError("synthetic data needs rows >= dim", "rows");
  if (n == 0 || m % n != 0) throw ConfigError("node count must divide the row count", "nodes");
  if (!(lambda > 0.0)) throw ConfigError("ridge problems require lambda > 0", "lambda");
  if (d == 1 && kappa != 1.0) throw ConfigError("a one-dimensional problem has condition number 1", "condition_number");

  const auto rows = static_cast<Eigen::Index>(m);
  const auto cols = static_cast<Eigen::Index>(d);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd g(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) g(i, j) = stream.standard_normal();
    return g;
  };
  const Eigen::MatrixXd left = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(rows, cols)).householderQ() *
                               Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd right =
      Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(cols, cols)).householderQ() *
      Eigen::MatrixXd::Identity(cols, cols);

  // Hessian eigenvalues e_j = e_min kappa^(j/(d-1)), e_min >= lambda.
  const double e_min = std::max(1.0 / kappa, lambda);
  Eigen::VectorXd singular(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(d - 1);
    const double e = j == 0 ? e_min : (j == cols - 1 ? e_min * kappa : e_min * std::pow(kappa, frac));
    singular(j) = std::sqrt(std::max(0.0, static_cast<double>(m) * (e - lambda)));
  }
  const Eigen::MatrixXd features = left * singular.asDiagonal() * right.transpose();
  Eigen::VectorXd planted(cols);
  for (Eigen::Index j = 0; j < cols; ++j) planted(j) = stream.standard_normal();
  Eigen::VectorXd targets = features * planted;
  for (Eigen::Index i = 0; i < rows; ++i) targets(i) += 0.1 * stream.standard_normal();
  return partition_rows(features, targets, lambda, n);
}

ProblemSpec parse_libsvm(std::istream& in, double lambda, std::size_t n) {
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;
    double label = 0.0;
    try {
      std::size_t used = 0;
      label = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("invalid label '" + token + "'", line_no);
    }
    std::vector<std::pair<std::size_t, double>> row;
    std::size_t previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw FormatError("expected index:value, got '" + token + "'", line_no);
      long long index = 0;
      double value = 0.0;
      try {
        std::size_t used = 0;
        index = std::stoll(token.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("index");
        const std::string value_text = token.substr(colon + 1);
        value = std::stod(value_text, &used);
        if (used != value_text.size()) throw std::invalid_argument("value");
      } catch (const std::exception&) {
        throw FormatError("malformed feature '" + token + "'", line_no);
      }
      if (index < 1) {
        throw FormatError("feature index " + std::to_string(index) + " is invalid; indices are 1-based", line_no);
      }
      if (static_cast<std::size_t>(index) <= previous) {
        throw FormatError("feature indices must be strictly increasing", line_no);
      }
      if (!std::isfinite(value) || !std::isfinite(label)) throw FormatError("non-finite value", line_no);
      previous = static_cast<std::size_t>(index);
      max_index = std::max(max_index, previous);
      row.emplace_back(previous - 1, value);
    }
    labels.push_back(label);
    entries.push_back(std::move(row));
  }
  if (entries.empty()) throw FormatError("empty LIBSVM file", std::max<std::size_t>(line_no, 1));
  if (max_index == 0) throw FormatError("LIBSVM file has no features", line_no);
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()),
                                                   static_cast<Eigen::Index>(max_index));
  Eigen::VectorXd targets(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t r = 0; r < entries.size(); ++r) {
    targets(static_cast<Eigen::Index>(r)) = labels[r];
    for (const auto& [j, v] : entries[r]) features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
  }
  return partition_rows(features, targets, lambda, n);
}

ProblemSpec load_libsvm(const std::filesystem::path& path, double lambda, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open LIBSVM file " + path.string(), "problem.path");
  return parse_libsvm(in, lambda, n);
}

ProblemSpec generate_saddle(double mu, std::size_t d, std::size_t n, RngStream& stream) {
  if (d == 0) throw ConfigError("dimension must be >= 1", "dim");
  if (n == 0) throw ConfigError("node count must be >= 1", "nodes");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Eigen::MatrixXd> couplings;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * stream.standard_normal();
    couplings.push_back(std::move(m));
  }
  return ProblemSpec::saddle(mu, std::move(couplings));
}

}  // namespace fpci
