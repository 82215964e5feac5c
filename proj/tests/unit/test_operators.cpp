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

#include <cmath>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "fpci/error.hpp"
#include "fpci/maps.hpp"
#include "fpci/problem.hpp"
#include "oracles.hpp"

using fpci::MapKind;
using fpci::ProblemSpec;
using fpci::RngStream;
using fpci::Vector;

namespace {

std::shared_ptr<const ProblemSpec> diag12() {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 2;
  return std::make_shared<const ProblemSpec>(ProblemSpec::quadratic({a}, {Vector{1, 2}}, 0.0));
}

std::shared_ptr<const ProblemSpec> ridge(std::size_t n, double kappa = 4.0, std::size_t m = 120, std::size_t d = 6) {
  RngStream s(17);
  return std::make_shared<const ProblemSpec>(fpci::generate_synthetic(m, d, kappa, n, 1e-2, s));
}

Vector random_near(RngStream& s, const Vector& centre, double scale) {
  return centre + scale * fpci::sample_standard_gaussian(s, centre.dim());
}

}  // namespace

TEST_CASE("gd map examples") {
  RngStream s(1);
  const auto iso = std::make_shared<const ProblemSpec>(
      ProblemSpec::quadratic({Eigen::MatrixXd::Identity(3, 3)}, {Vector(3)}, 0.0));
  const auto gd1 = fpci::make_map(MapKind::kGD, iso, 1.0);
  CHECK(fpci::apply_map(gd1, 0, {4, -2, 7}, s) == Vector(3));

  const auto gd = fpci::make_map(MapKind::kGD, diag12(), 0.5);
  CHECK(fpci::apply_map(gd, 0, {0, 0}, s) == Vector({0.5, 1.0}));
  CHECK_THROWS_AS(fpci::apply_map(gd, 1, {0, 0}, s), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::apply_map(gd, 0, {0, 0, 0}, s), fpci::DimensionError);
}

TEST_CASE("gda map example") {
  Eigen::MatrixXd m(1, 1);
  m << 1.0;
  const auto saddle = std::make_shared<const ProblemSpec>(ProblemSpec::saddle(1.0, {m}));
  const auto gda = fpci::make_map(MapKind::kGDA, saddle, 0.1);
  RngStream s(2);
  const Vector z = fpci::apply_map(gda, 0, {1, 1}, s);
  CHECK(z[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fpci::solve_reference(*saddle) == Vector({0, 0}));
  const auto cert = fpci::certificate_of(gda, 10, s);
  CHECK(cert.rho == doctest::Approx(2 * 0.1 * 1 - 0.01 * 2));
  CHECK(cert.c_sq == doctest::Approx((1 + 0.1 * std::sqrt(2.0)) * (1 + 0.1 * std::sqrt(2.0))));
  CHECK_THROWS_AS(fpci::make_map(MapKind::kGDA, saddle, 1.5), fpci::ConfigError);
}

TEST_CASE("davis-yin with G = H = 0 is a gd step") {
  const auto p = diag12();
  const fpci::MapSpec dy{MapKind::kDavisYin, 0.5, 1, p};
  const fpci::MapSpec gd{MapKind::kGD, 0.5, 1, p};
  RngStream s(3);
  for (int t = 0; t < 5; ++t) {
    const Vector x = fpci::sample_standard_gaussian(s, 2);
    CHECK(fpci::apply_map(dy, 0, x, s) == fpci::apply_map(gd, 0, x, s));
  }
}

TEST_CASE("prox examples") {
  CHECK(fpci::prox(fpci::RegularizerKind::kL1, 1.0, 1.0, {2, -0.5}) == Vector({1, 0}));
  CHECK(fpci::prox(fpci::RegularizerKind::kL2, 1.0, 1.0, {2, 4}) == Vector({1, 2}));
  CHECK(fpci::prox(fpci::RegularizerKind::kNone, 3.0, 1.0, {7}) == Vector({7}));
  CHECK_THROWS_AS(fpci::prox(fpci::RegularizerKind::kL1, -1.0, 1.0, {7}), fpci::ConfigError);
}

TEST_CASE("certificate of gd") {
  const auto gd = fpci::make_map(MapKind::kGD, diag12(), 0.5);
  const auto cert = fpci::certificate_of(gd, 10, RngStream(0));
  CHECK(cert.rho == 0.5);
  CHECK(cert.B == 0.0);
  CHECK(cert.c_sq == 1.0);
  CHECK(cert.provenance == fpci::Provenance::kExact);
  CHECK(cert.sigma_sq == doctest::Approx(2.0));

  const auto centred = std::make_shared<const ProblemSpec>(
      ProblemSpec::quadratic({Eigen::MatrixXd::Identity(2, 2) * 3.0}, {Vector(2)}, 0.0));
  CHECK(fpci::certificate_of(fpci::make_map(MapKind::kGD, centred, std::nullopt), 10, RngStream(0)).sigma_sq == 0.0);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kGD, diag12(), 0.6), fpci::ConfigError);
}

TEST_CASE("solve_reference examples") {
  const Vector x = fpci::solve_reference(*diag12());
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-15));

  // grad f(0) = -b with |b_j| < weight, so 0 satisfies the subgradient condition.
  const auto l1 = ProblemSpec::quadratic({Eigen::MatrixXd::Identity(3, 3)}, {Vector{0.3, -0.2, 0.1}}, 0.0)
                      .with_regularizers({}, {fpci::RegularizerKind::kL1, 0.5});
  CHECK(fpci::solve_reference(l1) == Vector(3));

  // Partially active l1: x_j = soft(b_j, w) / a_j for diagonal A.
  Eigen::MatrixXd a(3, 3);
  a << 2, 0, 0, 0, 1, 0, 0, 0, 4;
  const auto partial = ProblemSpec::quadratic({a}, {Vector{3, 0.1, -2}}, 0.0)
                           .with_regularizers({}, {fpci::RegularizerKind::kL1, 0.5});
  const Vector xp = fpci::solve_reference(partial);
  CHECK(std::fabs(xp[0] - 1.25) < 1e-12);
  CHECK(xp[1] == 0.0);
  CHECK(std::fabs(xp[2] + 0.375) < 1e-12);
}

TEST_CASE("synthetic problems") {
  RngStream s1(5), s2(5);
  const auto a = fpci::generate_synthetic(60, 5, 10.0, 3, 1e-3, s1);
  const auto b = fpci::generate_synthetic(60, 5, 10.0, 3, 1e-3, s2);
  CHECK(a.mean_field_matrix() == b.mean_field_matrix());
  CHECK(a.nodes() == 3);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.mean_field_matrix());
  const double ratio = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  CHECK(ratio >= 9.9);
  CHECK(ratio <= 10.1);

  RngStream s3(6);
  const auto iso = std::make_shared<const ProblemSpec>(fpci::generate_synthetic(40, 4, 1.0, 1, 1e-3, s3));
  const auto gd = fpci::make_map(MapKind::kGD, iso, std::nullopt);
  RngStream n(0);
  const Vector x_star = fpci::solve_reference(*iso);
  const Vector x1 = fpci::apply_map(gd, 0, Vector(4), n);
  CHECK(fpci::squared_distance(x1, x_star) <= 1e-24 * (1 + fpci::squared_norm(x_star)));

  RngStream s4(7);
  CHECK_THROWS_WITH_AS(fpci::generate_synthetic(40, 4, 0.5, 1, 1e-3, s4), doctest::Contains("condition number must be >= 1"),
                       fpci::ConfigError);
  CHECK_THROWS_AS(fpci::generate_synthetic(40, 4, 2.0, 3, 1e-3, s4), fpci::ConfigError);
}

TEST_CASE("the mean problem does not depend on the node split") {
  RngStream s1(9), s2(9);
  const auto one = fpci::generate_synthetic(100, 5, 3.0, 1, 1e-2, s1);
  const auto ten = fpci::generate_synthetic(100, 5, 3.0, 10, 1e-2, s2);
  CHECK((one.mean_field_matrix() - ten.mean_field_matrix()).norm() < 1e-12);
  CHECK(fpci::squared_distance(fpci::solve_reference(one), fpci::solve_reference(ten)) < 1e-20);
}

TEST_CASE("libsvm parsing") {
  std::istringstream one("1 1:2.0 3:1.0\n");
  const auto p = fpci::parse_libsvm(one, 0.1, 1);
  CHECK(p.dim() == 3);
  CHECK(p.features(0).row(0)(0) == 2.0);
  CHECK(p.features(0).row(0)(1) == 0.0);
  CHECK(p.features(0).row(0)(2) == 1.0);
  CHECK(p.targets(0)[0] == 1.0);

  std::istringstream two("1 1:1\n-1 2:1\n");
  const auto q = fpci::parse_libsvm(two, 0.1, 2);
  CHECK(q.nodes() == 2);
  CHECK(q.rows(0) == 1);
  CHECK(q.rows(1) == 1);

  std::istringstream zero("1 0:1\n");
  try {
    fpci::parse_libsvm(zero, 0.1, 1);
    FAIL("expected a FormatError");
  } catch (const fpci::FormatError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("1-based") != std::string::npos);
  }
  std::istringstream bad("1 1:2\n1 2:x\n");
  try {
    fpci::parse_libsvm(bad, 0.1, 1);
    FAIL("expected a FormatError");
  } catch (const fpci::FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(fpci::parse_libsvm(empty, 0.1, 1), fpci::FormatError);
  CHECK_THROWS_AS(fpci::load_libsvm("/nonexistent/file.svm", 0.1, 1), fpci::ConfigError);
}

TEST_CASE("deterministic maps fix x* and contract") {
  const auto p = ridge(3);
  RngStream s(10);
  for (MapKind kind : {MapKind::kGD, MapKind::kDavisYin}) {
    auto problem = p;
    if (kind == MapKind::kDavisYin) {
      problem = std::make_shared<const ProblemSpec>(p->with_regularizers({fpci::RegularizerKind::kL2, 0.2}, {}));
    }
    const auto map = fpci::make_map(kind, problem, std::nullopt);
    const auto cert = fpci::certificate_of(map, 10, s);
    const Vector x_star = fpci::map_fixed_point(map);
    Vector t(x_star.dim());
    for (std::size_t i = 0; i < problem->nodes(); ++i) t += fpci::apply_map(map, i, x_star, s);
    t /= static_cast<double>(problem->nodes());
    CHECK(std::sqrt(fpci::squared_distance(t, x_star)) <= 1e-10);
    for (int j = 0; j < 20; ++j) {
      const Vector x = random_near(s, x_star, 2.0);
      const auto c = fpci::check_contraction(map, cert, x_star, x, 1, s);
      CHECK(c.pass);
    }
    for (std::size_t i = 0; i < problem->nodes(); ++i) {
      const auto l = fpci::check_lipschitz(map, cert, i, random_near(s, x_star, 1.0), random_near(s, x_star, 1.0), 1, s);
      CHECK(l.pass);
    }
  }
}

TEST_CASE("davis-yin with an l1 term fixes z*") {
  const auto p = std::make_shared<const ProblemSpec>(
      ridge(1)->with_regularizers({fpci::RegularizerKind::kL2, 0.3}, {fpci::RegularizerKind::kL1, 0.05}));
  const auto map = fpci::make_map(MapKind::kDavisYin, p, std::nullopt);
  RngStream s(11);
  const Vector z = fpci::map_fixed_point(map);
  CHECK(std::sqrt(fpci::squared_distance(fpci::apply_map(map, 0, z, s), z)) <= 1e-10);
  const auto multi = std::make_shared<const ProblemSpec>(
      ridge(2)->with_regularizers({fpci::RegularizerKind::kL2, 0.3}, {fpci::RegularizerKind::kL1, 0.05}));
  CHECK_THROWS_AS(fpci::make_map(MapKind::kDavisYin, multi, std::nullopt), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kDavisYin, ridge(1), std::nullopt), fpci::ConfigError);
}

TEST_CASE("prox-sgd with full batches is deterministic and fixes x*") {
  const auto p = std::make_shared<const ProblemSpec>(ridge(1)->with_regularizers({}, {fpci::RegularizerKind::kL1, 0.02}));
  const auto map = fpci::make_map(MapKind::kProxSGD, p, std::nullopt, 1000);
  CHECK_FALSE(fpci::is_stochastic(map));
  RngStream s(12);
  const Vector x_star = fpci::solve_reference(*p);
  CHECK(std::sqrt(fpci::squared_distance(fpci::apply_map(map, 0, x_star, s), x_star)) <= 1e-10);
  const auto cert = fpci::certificate_of(map, 10, s);
  CHECK(cert.B == 0.0);
}

TEST_CASE("stochastic maps satisfy the certificate") {
  const auto p = ridge(2);
  const auto map = fpci::make_map(MapKind::kSGD, p, std::nullopt, 2);
  CHECK(fpci::is_stochastic(map));
  RngStream s(13);
  const auto cert = fpci::certificate_of(map, 20000, s);
  CHECK(cert.provenance == fpci::Provenance::kMonteCarlo);
  const Vector x_star = fpci::solve_reference(*p);
  const double exact_b = 2 * map.gamma * map.gamma * oracle::exact_sgd_noise(*p, 2, x_star);
  CHECK(std::fabs(cert.B - exact_b) <= 4.0 * cert.B_std_error);
  for (int j = 0; j < 20; ++j) {
    const auto c = fpci::check_contraction(map, cert, x_star, random_near(s, x_star, 1.0), 2000, s);
    CHECK(c.pass);
  }
  for (int j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < 2; ++i) {
      const auto l = fpci::check_lipschitz(map, cert, i, random_near(s, x_star, 1.0), random_near(s, x_star, 1.0), 2000, s);
      CHECK(l.pass);
    }
  }
}

TEST_CASE("full-batch sgd has no noise") {
  const auto p = ridge(1);
  const auto map = fpci::make_map(MapKind::kSGD, p, std::nullopt, p->rows(0));
  const auto cert = fpci::certificate_of(map, 100, RngStream(1));
  CHECK(cert.B == 0.0);
  CHECK(cert.provenance == fpci::Provenance::kExact);
}

TEST_CASE("gradients match finite differences") {
  const auto p = ridge(2);
  RngStream s(14);
  for (int t = 0; t < 5; ++t) {
    const Vector x = fpci::sample_standard_gaussian(s, p->dim());
    for (std::size_t i = 0; i < p->nodes(); ++i) {
      const Eigen::MatrixXd& A = p->field_matrix(i);
      const Eigen::VectorXd b = p->field_offset(i);
      auto f = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(A * v) - b.dot(v); };
      const Vector g = p->field(i, x);
      const Eigen::VectorXd xe = oracle::to_eigen(x);
      for (std::size_t j = 0; j < p->dim(); ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p->dim()));
        e(static_cast<Eigen::Index>(j)) = 1e-5;
        const double fd = (f(xe + e) - f(xe - e)) / 2e-5;
        CHECK(std::fabs(fd - g[j]) <= 1e-6 * std::max(1.0, std::fabs(g[j])));
      }
      // The field agrees with the mean of the row gradients.
      Vector rows(p->dim());
      for (std::size_t r = 0; r < p->rows(i); ++r) rows += p->row_gradient(i, r, x);
      rows /= static_cast<double>(p->rows(i));
      CHECK(std::sqrt(fpci::squared_distance(rows, g)) <= 1e-10 * (1 + std::sqrt(fpci::squared_norm(g))));
    }
  }
}

TEST_CASE("minibatch gradients are unbiased") {
  const auto p = ridge(1);
  const auto map = fpci::make_map(MapKind::kSGD, p, std::nullopt, 3);
  RngStream s(15);
  const Vector x = fpci::sample_standard_gaussian(s, p->dim());
  const Vector expected = fpci::apply_map(fpci::make_map(MapKind::kGD, p, map.gamma), 0, x, s);
  const int draws = 10000;
  std::vector<std::vector<double>> coords(p->dim());
  for (int t = 0; t < draws; ++t) {
    const Vector y = fpci::apply_map(map, 0, x, s);
    for (std::size_t j = 0; j < p->dim(); ++j) coords[j].push_back(y[j]);
  }
  for (std::size_t j = 0; j < p->dim(); ++j) {
    const auto m = oracle::mean_se(coords[j]);
    CHECK(std::fabs(m.mean - expected[j]) <= 4.0 * m.se);
  }
}

TEST_CASE("validator rules") {
  const auto p = ridge(2);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kSGD, diag12(), std::nullopt), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kGDA, p, std::nullopt), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kGD, p, -1.0), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kSGD, p, 10.0, 1), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kSGD, p, std::nullopt, 0), fpci::ConfigError);
  const auto composite = std::make_shared<const ProblemSpec>(p->with_regularizers({}, {fpci::RegularizerKind::kL1, 0.1}));
  CHECK_THROWS_AS(fpci::make_map(MapKind::kGD, composite, std::nullopt), fpci::ConfigError);
  CHECK_THROWS_AS(fpci::make_map(MapKind::kProxSGD, composite, std::nullopt), fpci::ConfigError);  // n = 2
  try {
    Eigen::MatrixXd m(1, 1);
    m << 1.0;
    fpci::make_map(MapKind::kGDA, std::make_shared<const ProblemSpec>(ProblemSpec::saddle(1.0, {m})), 2.0);
  } catch (const fpci::ConfigError& e) {
    CHECK(e.key() == "map.gamma");
  }
  CHECK(fpci::parse_map_kind("prox_sgd") == MapKind::kProxSGD);
  CHECK_FALSE(fpci::parse_map_kind("newton").has_value());
}
