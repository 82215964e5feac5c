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

#include "doctest.h"
#include "fpci/algorithms.hpp"
#include "fpci/error.hpp"
#include "oracles.hpp"

using fpci::MapKind;
using fpci::ProblemSpec;
using fpci::RngStream;
using fpci::Vector;

namespace {

Eigen::MatrixXd diag(std::initializer_list<double> v) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) d(j++) = x;
  return d.asDiagonal();
}

std::shared_ptr<const ProblemSpec> diag12(std::size_t nodes = 1) {
  std::vector<Eigen::MatrixXd> a(nodes, diag({1, 2}));
  std::vector<Vector> b(nodes, Vector{1, 2});
  return std::make_shared<const ProblemSpec>(ProblemSpec::quadratic(a, b, 0.0));
}

std::shared_ptr<const ProblemSpec> ridge(std::size_t n) {
  RngStream s(31);
  return std::make_shared<const ProblemSpec>(fpci::generate_synthetic(60, 5, 3.0, n, 1e-2, s));
}

fpci::RunSpec spec_for(const fpci::MapSpec& map, fpci::CompressorSpec comp, fpci::Mode mode, std::size_t k) {
  fpci::RunSpec spec;
  spec.mode = mode;
  spec.iterations = k;
  spec.map = map;
  spec.compressor = comp;
  spec.x0 = Vector(map.problem->dim());
  spec.x_star = fpci::map_fixed_point(map);
  spec.seed = 5;
  return spec;
}

}  // namespace

TEST_CASE("plain step averages the node payloads") {
  // Two nodes whose maps send [2, 0] and [0, 2] from x = 0: f_1 has b = [4, 0],
  // f_2 has b = [0, 4], A = 2I, gamma = 0.5.
  const auto p = std::make_shared<const ProblemSpec>(
      ProblemSpec::quadratic({diag({2, 2}), diag({2, 2})}, {Vector{4, 0}, Vector{0, 4}}, 0.0));
  const auto map = fpci::make_map(MapKind::kGD, p, 0.5);
  fpci::IterateState st{Vector(2), 0};
  const auto msgs = fpci::step_plain(st, map, fpci::IdentityCompressor{}, RngStream(0));
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0] == Vector({2, 0}));
  CHECK(msgs[1] == Vector({0, 2}));
  CHECK(st.x == Vector({1, 1}));
  CHECK(st.k == 1);
}

TEST_CASE("identity compression reproduces the uncompressed iteration") {
  const auto map = fpci::make_map(MapKind::kSGD, ridge(1), std::nullopt, 2);
  const RngStream root(9);
  fpci::IterateState st{Vector(5), 0};
  Vector reference(5);
  for (std::size_t k = 0; k < 30; ++k) {
    RngStream s = fpci::map_stream(root, 0, k);
    reference = fpci::apply_map(map, 0, reference, s);
    fpci::step_plain(st, map, fpci::IdentityCompressor{}, root);
    CHECK(fpci::bit_identical(st.x, reference));
  }
}

TEST_CASE("vr step with identity, alpha = eta = 1 is the plain step") {
  const auto map = fpci::make_map(MapKind::kGD, diag12(), 0.5);
  fpci::VrState st = fpci::make_vr_state(Vector(2), 1);
  fpci::step_vr(st, {1.0, 1.0}, map, fpci::IdentityCompressor{}, RngStream(0));
  CHECK(st.iterate.x == Vector({0.5, 1.0}));
  CHECK(st.workers[0].h == Vector({0.5, 1.0}));
  CHECK(st.workers[0].last_Delta == Vector({0.5, 1.0}));
  CHECK(st.mirror[0] == st.workers[0].h);
}

TEST_CASE("eta = 0 freezes the iterate") {
  const auto map = fpci::make_map(MapKind::kGD, ridge(2), std::nullopt);
  fpci::VrState st = fpci::make_vr_state(Vector{1, 2, 3, 4, 5}, 2);
  for (int k = 0; k < 5; ++k) fpci::step_vr(st, {0.5, 0.0}, map, fpci::RandK{2}, RngStream(1));
  CHECK(st.iterate.x == Vector({1, 2, 3, 4, 5}));
  CHECK(st.iterate.k == 5);
}

TEST_CASE("the master mirror tracks every worker shift") {
  const auto map = fpci::make_map(MapKind::kGD, ridge(3), std::nullopt);
  fpci::VrState st = fpci::make_vr_state(Vector(5), 3);
  for (int k = 0; k < 20; ++k) {
    fpci::step_vr(st, {0.5, 0.3}, map, fpci::NaturalCompression{}, RngStream(2));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(fpci::bit_identical(st.mirror[i], st.workers[i].h));
    }
  }
}

TEST_CASE("one-step mean of the compressed gd map") {
  // x* = 0, so E[x^{k+1}] = (I - gamma A) x^k for any unbiased compressor.
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec::quadratic({diag({1, 3})}, {Vector(2)}, 0.0));
  const auto map = fpci::make_map(MapKind::kGD, p, 0.25);
  const Vector x{2, -1};
  const Vector expected{2 * 0.75, -1 * 0.25};
  std::vector<std::vector<double>> coords(2);
  for (std::size_t t = 0; t < 10000; ++t) {
    fpci::IterateState st{x, 0};
    fpci::step_plain(st, map, fpci::RandK{1}, RngStream(t));
    coords[0].push_back(st.x[0]);
    coords[1].push_back(st.x[1]);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const auto m = oracle::mean_se(coords[j]);
    CHECK(std::fabs(m.mean - expected[j]) <= 4.0 * m.se);
  }
}

TEST_CASE("lyapunov function examples") {
  const auto map = fpci::make_map(MapKind::kGD, diag12(), 0.5);
  const Vector x_star{1, 1};
  std::vector<fpci::WorkerState> workers{{Vector(2), Vector(2), Vector(2)}};
  const auto psi = fpci::lyapunov_psi({0, 0}, workers, {8.0 / 9.0, 1.0 / 3.0}, map, x_star, 0.125, 10, RngStream(0));
  CHECK(psi.value == doctest::Approx(2.125).epsilon(1e-15));
  CHECK(psi.std_error == 0.0);

  const auto plain = fpci::lyapunov_psi({3, 0}, workers, {0.5, 0.5}, map, x_star, 0.0, 10, RngStream(0));
  CHECK(plain.value == fpci::squared_distance({3, 0}, x_star));

  workers[0].h = x_star;  // T(x*) = x*
  CHECK(fpci::lyapunov_psi(x_star, workers, {0.5, 0.5}, map, x_star, 0.125, 10, RngStream(0)).value == 0.0);
}

TEST_CASE("run_loop with one iteration equals one manual step") {
  const auto map = fpci::make_map(MapKind::kGD, ridge(2), std::nullopt);
  auto spec = spec_for(map, fpci::NaturalCompression{}, fpci::Mode::kVr, 1);
  spec.params = {0.8, 0.4};
  const auto result = fpci::run_loop(spec);
  REQUIRE(result.rows.size() == 2);
  fpci::VrState st = fpci::make_vr_state(spec.x0, 2);
  fpci::step_vr(st, spec.params, map, fpci::NaturalCompression{}, RngStream(spec.seed));
  CHECK(fpci::bit_identical(result.x_final, st.iterate.x));
  CHECK(result.rows[1].r_sq == fpci::squared_distance(st.iterate.x, spec.x_star));
  CHECK(result.rows[0].bits_cum == 0);
  CHECK(result.rows[1].bits_cum == 2 * (64 * 5 + 9 * 5));
  CHECK(result.rows[1].psi.has_value());
}

TEST_CASE("run_loop is deterministic") {
  const auto map = fpci::make_map(MapKind::kSGD, ridge(3), std::nullopt, 2);
  const auto spec = spec_for(map, fpci::StandardDithering{2}, fpci::Mode::kVr, 40);
  const auto a = fpci::run_loop(spec);
  const auto b = fpci::run_loop(spec);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].r_sq == b.rows[k].r_sq);
    CHECK(*a.rows[k].psi == *b.rows[k].psi);
    CHECK(a.rows[k].bits_cum == b.rows[k].bits_cum);
  }
  CHECK(a.transcript == b.transcript);
}

TEST_CASE("identity plain gd matches the closed-form affine iteration") {
  const Eigen::MatrixXd A = diag({1, 0.5, 0.25});
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec::quadratic({A}, {Vector{1, -2, 0.5}}, 0.0));
  const auto map = fpci::make_map(MapKind::kGD, p, 1.0);
  auto spec = spec_for(map, fpci::IdentityCompressor{}, fpci::Mode::kPlain, 60);
  spec.x0 = Vector{3, 3, 3};
  const auto result = fpci::run_loop(spec);
  const Eigen::VectorXd x_star = oracle::to_eigen(spec.x_star);
  for (std::size_t k = 0; k <= 60; k += 10) {
    const Eigen::VectorXd xk = oracle::affine_iterate(A, oracle::to_eigen(Vector{1, -2, 0.5}), 1.0, oracle::to_eigen(spec.x0), k);
    CHECK(std::fabs(result.rows[k].r_sq - (xk - x_star).squaredNorm()) <= 1e-12);
  }
}

TEST_CASE("n = 1 matches the dedicated single-node loops bit for bit") {
  const auto map = fpci::make_map(MapKind::kSGD, ridge(1), std::nullopt, 3);
  const std::vector<fpci::CompressorSpec> comps = {fpci::IdentityCompressor{}, fpci::RandK{2}, fpci::NaturalCompression{},
                                                   fpci::StandardDithering{3}};
  for (const auto& comp : comps) {
    const auto plain = oracle::single_node_plain(map, comp, Vector(5), 77, 50);
    fpci::IterateState st{Vector(5), 0};
    for (std::size_t k = 1; k <= 50; ++k) {
      fpci::step_plain(st, map, comp, RngStream(77));
      CHECK(fpci::bit_identical(st.x, plain[k]));
    }
    const fpci::VrParams params{0.7, 0.6};
    const auto vr = oracle::single_node_vr(map, comp, params, Vector(5), 77, 50);
    fpci::VrState vs = fpci::make_vr_state(Vector(5), 1);
    for (std::size_t k = 1; k <= 50; ++k) {
      fpci::step_vr(vs, params, map, comp, RngStream(77));
      CHECK(fpci::bit_identical(vs.iterate.x, vr[k]));
    }
  }
}

TEST_CASE("divergence is reported with the partial trajectory") {
  RngStream s(41);
  const auto p = std::make_shared<const ProblemSpec>(fpci::generate_synthetic(40, 20, 50.0, 1, 1e-3, s));
  const auto map = fpci::make_map(MapKind::kGD, p, std::nullopt);
  auto spec = spec_for(map, fpci::RandK{1}, fpci::Mode::kPlain, 2000);
  std::vector<fpci::MetricsRow> rows;
  try {
    fpci::run_loop(spec, [&](const fpci::MetricsRow& r) { rows.push_back(r); });
    FAIL("expected divergence");
  } catch (const fpci::DivergenceError& e) {
    CHECK(e.iteration() >= 1);
    CHECK(rows.size() == e.iteration() + 1);
    CHECK(rows.back().k == e.iteration());
  }
}

TEST_CASE("invalid run settings") {
  const auto map = fpci::make_map(MapKind::kGD, diag12(), 0.5);
  auto spec = spec_for(map, fpci::IdentityCompressor{}, fpci::Mode::kVr, 1);
  spec.params = {1.5, 0.5};
  CHECK_THROWS_AS(fpci::run_loop(spec), fpci::ConfigError);
  spec.params = {0.5, 0.5};
  spec.iterations = 0;
  CHECK_THROWS_AS(fpci::run_loop(spec), fpci::ConfigError);
  spec.iterations = 1;
  spec.compressor = fpci::RandK{3};
  CHECK_THROWS_AS(fpci::run_loop(spec), fpci::ConfigError);
  fpci::VrState st = fpci::make_vr_state(Vector(2), 2);
  CHECK_THROWS_AS(fpci::step_vr(st, {1, 1}, map, fpci::IdentityCompressor{}, RngStream(0)), fpci::DimensionError);
}
