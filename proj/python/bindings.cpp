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

// Python bindings. Vectors cross the boundary as lists of floats; results
// that are JSON on the C++ side are returned as JSON strings and decoded in
// the package's __init__.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fpci/algorithms.hpp"
#include "fpci/compressors.hpp"
#include "fpci/config.hpp"
#include "fpci/error.hpp"
#include "fpci/experiment.hpp"
#include "fpci/rng.hpp"
#include "fpci/theory.hpp"

namespace py = pybind11;

namespace {

fpci::Vector to_vec(const std::vector<double>& v) { return fpci::Vector(v); }
std::vector<double> from_vec(const fpci::Vector& v) { return {v.coords().begin(), v.coords().end()}; }

py::dict row_dict(const fpci::MetricsRow& r) {
  py::dict d;
  d["seed"] = r.seed;
  d["k"] = r.k;
  d["r_sq"] = r.r_sq;
  d["psi"] = r.psi ? py::cast(*r.psi) : py::none();
  d["bits_cum"] = r.bits_cum;
  d["wall_ns"] = r.wall_ns;
  return d;
}

fpci::ContractionCertificate make_certificate(double rho, double B, double c_sq, double sigma_sq) {
  fpci::ContractionCertificate c;
  c.rho = rho;
  c.B = B;
  c.c_sq = c_sq;
  c.sigma_sq = sigma_sq;
  return c;
}

}  // namespace

PYBIND11_MODULE(_fpci, m) {
  m.doc() = "Fixed-point methods with compressed iterates";

  auto error = py::register_exception<fpci::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<fpci::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<fpci::FormatError>(m, "FormatError", error.ptr());
  py::register_exception<fpci::DivergenceError>(m, "DivergenceError", error.ptr());
  py::register_exception<fpci::DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<fpci::NonFiniteError>(m, "NonFiniteError", error.ptr());

  py::class_<fpci::RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::vector<std::uint64_t>>(), py::arg("seed"),
           py::arg("path") = std::vector<std::uint64_t>{})
      .def("derive", [](const fpci::RngStream& s, const std::vector<std::uint64_t>& label) { return s.derive(label); })
      .def("next_u64", &fpci::RngStream::next_u64)
      .def("uniform", &fpci::RngStream::uniform)
      .def("standard_normal", &fpci::RngStream::standard_normal)
      .def_property_readonly("root_seed", &fpci::RngStream::root_seed)
      .def_property_readonly("path", &fpci::RngStream::path);

  py::class_<fpci::IdentityCompressor>(m, "IdentityCompressor").def(py::init<>());
  py::class_<fpci::RandK>(m, "RandK")
      .def(py::init([](std::size_t k) { return fpci::RandK{k}; }), py::arg("k"))
      .def_readonly("k", &fpci::RandK::k);
  py::class_<fpci::NaturalCompression>(m, "NaturalCompression").def(py::init<>());
  py::class_<fpci::StandardDithering>(m, "StandardDithering")
      .def(py::init([](std::uint32_t s) { return fpci::StandardDithering{s}; }), py::arg("levels"))
      .def_readonly("levels", &fpci::StandardDithering::levels);

  m.def("describe", py::overload_cast<const fpci::CompressorSpec&>(&fpci::describe));
  m.def("compressor_omega", &fpci::compressor_omega, py::arg("compressor"), py::arg("dim"));
  m.def("message_bits", &fpci::message_bits, py::arg("compressor"), py::arg("dim"));
  m.def(
      "compress",
      [](const fpci::CompressorSpec& spec, const std::vector<double>& x, fpci::RngStream& stream) {
        return from_vec(fpci::apply_compressor(spec, to_vec(x), stream));
      },
      py::arg("compressor"), py::arg("x"), py::arg("stream"),
      "One draw of C(x); advances `stream`.");

  py::class_<fpci::BoundReport>(m, "BoundReport")
      .def_readonly("rate_factor", &fpci::BoundReport::rate_factor)
      .def_readonly("plateau_radius_sq", &fpci::BoundReport::plateau_radius_sq)
      .def_readonly("valid", &fpci::BoundReport::valid)
      .def_readonly("hypothesis_note", &fpci::BoundReport::hypothesis_note);
  m.def(
      "plain_bound",
      [](double rho, double B, double c_sq, double sigma_sq, double omega, std::size_t n) {
        return fpci::plain_bound(make_certificate(rho, B, c_sq, sigma_sq), omega, n);
      },
      py::arg("rho"), py::arg("B"), py::arg("c_sq"), py::arg("sigma_sq"), py::arg("omega"), py::arg("n"));
  m.def(
      "vr_stepsizes",
      [](double rho, double c_sq, double omega, std::size_t n) {
        const auto p = fpci::vr_stepsizes(make_certificate(rho, 0.0, c_sq, 0.0), omega, n);
        return py::make_tuple(p.alpha, p.eta);
      },
      py::arg("rho"), py::arg("c_sq"), py::arg("omega"), py::arg("n"));
  m.def(
      "vr_bound",
      [](double rho, double B, double c_sq, double alpha, double eta, double omega, std::size_t n) {
        return fpci::vr_bound(make_certificate(rho, B, c_sq, 0.0), {alpha, eta}, omega, n);
      },
      py::arg("rho"), py::arg("B"), py::arg("c_sq"), py::arg("alpha"), py::arg("eta"), py::arg("omega"),
      py::arg("n"));
  m.def("geometric_bound", &fpci::geometric_bound, py::arg("A"), py::arg("B"), py::arg("r0"), py::arg("k"));

  py::class_<fpci::RunConfig>(m, "RunConfig")
      .def_readwrite("seeds", &fpci::RunConfig::seeds)
      .def_readwrite("output_dir", &fpci::RunConfig::output_dir)
      .def_readwrite("mc_budget", &fpci::RunConfig::mc_budget)
      .def_property(
          "iterations", [](const fpci::RunConfig& c) { return c.algorithm.iterations; },
          [](fpci::RunConfig& c, std::size_t k) { c.algorithm.iterations = k; })
      .def_property_readonly("mode", [](const fpci::RunConfig& c) { return fpci::to_string(c.algorithm.mode); })
      .def_property_readonly("nodes", [](const fpci::RunConfig& c) { return c.algorithm.nodes; })
      .def("__eq__", [](const fpci::RunConfig& a, const fpci::RunConfig& b) { return a == b; });

  m.def("parse_config", &fpci::parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path("."));
  m.def("load_config", &fpci::load_config, py::arg("path"));
  m.def("serialize_config", &fpci::serialize_config, py::arg("config"));

  m.def(
      "theory_report_json", [](const fpci::RunConfig& cfg) { return fpci::theory_report_json(fpci::resolve_experiment(cfg)); },
      py::arg("config"));
  m.def(
      "run_experiment",
      [](const fpci::RunConfig& cfg, bool write_files) {
        fpci::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = fpci::run_experiment(cfg, write_files);
        }
        py::list seeds;
        for (const auto& s : result.seeds) {
          py::dict d;
          d["seed"] = s.seed;
          py::list rows;
          for (const auto& r : s.rows) rows.append(row_dict(r));
          d["rows"] = rows;
          d["diverged_at"] = s.diverged_at ? py::cast(*s.diverged_at) : py::none();
          d["error"] = s.error;
          seeds.append(d);
        }
        return py::make_tuple(result.summary_json, seeds);
      },
      py::arg("config"), py::arg("write_files") = false);
  m.def(
      "verify",
      [](const fpci::RunConfig& cfg, std::size_t draws) {
        const auto report = fpci::verify_assumptions(fpci::resolve_experiment(cfg), draws);
        py::list checks;
        for (const auto& c : report.checks) {
          py::dict d;
          d["name"] = c.name;
          d["lhs"] = c.lhs;
          d["rhs"] = c.rhs;
          d["std_error"] = c.std_error;
          d["pass"] = c.pass;
          checks.append(d);
        }
        return py::make_tuple(report.pass, checks);
      },
      py::arg("config"), py::arg("draws") = 20000);
}
