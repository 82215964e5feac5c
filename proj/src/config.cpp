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

#include "fpci/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fpci/error.hpp"

namespace fpci {
namespace {

std::size_t line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

// A mapping node plus its dotted key prefix; rejects keys it was not asked
// about when finish() runs.
class Section {
 public:
  Section(YAML::Node node, std::string prefix) : node_(std::move(node)), prefix_(std::move(prefix)) {
    if (!node_.IsMap()) throw ConfigError("expected a mapping", prefix_.empty() ? "<root>" : prefix_, line_of(node_));
  }

  std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }
  std::size_t line() const { return line_of(node_); }

  std::optional<YAML::Node> find(const std::string& name) {
    seen_.insert(name);
    YAML::Node child = node_[name];
    if (!child.IsDefined() || child.IsNull()) return std::nullopt;
    return child;
  }

  template <typename T>
  std::optional<T> get(const std::string& name) {
    auto child = find(name);
    if (!child) return std::nullopt;
    return convert<T>(*child, key(name));
  }

  // Reads a number or the string "auto" (returned as nullopt).
  std::optional<double> get_auto(const std::string& name) {
    auto child = find(name);
    if (!child) return std::nullopt;
    if (child->IsScalar() && child->Scalar() == "auto") return std::nullopt;
    return convert<double>(*child, key(name));
  }

  Section child(const std::string& name) {
    auto c = find(name);
    if (!c) throw ConfigError("missing section", key(name), line());
    return Section(*c, key(name));
  }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string name = kv.first.as<std::string>();
      if (!seen_.count(name)) throw ConfigError("unknown key", key(name), line_of(kv.first));
    }
  }

  template <typename T>
  static T convert(const YAML::Node& node, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (node.IsScalar() && !node.Scalar().empty() && node.Scalar()[0] == '-') {
          throw ConfigError("expected a nonnegative integer", key, line_of(node));
        }
      }
      T value = node.as<T>();
      if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) throw ConfigError("expected a finite number", key, line_of(node));
      }
      return value;
    } catch (const YAML::BadConversion&) {
      throw ConfigError("type mismatch: cannot read '" + (node.IsScalar() ? node.Scalar() : std::string("<node>")) +
                            "' as " + type_name<T>(),
                        key, line_of(node));
    }
  }

 private:
  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_integral_v<T>) return "a nonnegative integer";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "the expected type";
  }

  YAML::Node node_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::vector<double> read_vector(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("expected a list of numbers", key, line_of(node));
  std::vector<double> out;
  for (const auto& v : node) out.push_back(Section::convert<double>(v, key));
  return out;
}

Regularizer read_regularizer(Section& parent, const std::string& name) {
  auto node = parent.find(name);
  if (!node) return {};
  Section s(*node, parent.key(name));
  Regularizer r;
  const std::string kind = s.get<std::string>("kind").value_or("none");
  if (kind == "none") r.kind = RegularizerKind::kNone;
  else if (kind == "l1") r.kind = RegularizerKind::kL1;
  else if (kind == "l2") r.kind = RegularizerKind::kL2;
  else throw ConfigError("unknown regularizer '" + kind + "' (none, l1, l2)", s.key("kind"), s.line());
  r.weight = s.get<double>("weight").value_or(0.0);
  if (!(r.weight >= 0.0)) throw ConfigError("weight must be >= 0", s.key("weight"), s.line());
  if (r.kind != RegularizerKind::kNone && !(r.weight > 0.0)) {
    throw ConfigError("weight must be > 0", s.key("weight"), s.line());
  }
  s.finish();
  return r;
}

ProblemConfig read_problem(Section s, const std::filesystem::path& base_dir) {
  ProblemConfig p;
  const std::string kind = s.get<std::string>("kind").value_or("synthetic");
  if (kind == "synthetic") p.source = ProblemSource::kSynthetic;
  else if (kind == "libsvm") p.source = ProblemSource::kLibsvm;
  else if (kind == "saddle") p.source = ProblemSource::kSaddle;
  else if (kind == "quadratic") p.source = ProblemSource::kQuadratic;
  else throw ConfigError("unknown problem kind '" + kind + "' (synthetic, libsvm, saddle, quadratic)", s.key("kind"), s.line());

  auto positive_size = [&](const std::string& name, std::size_t fallback) {
    auto node = s.find(name);
    if (!node) return fallback;
    const auto v = Section::convert<std::size_t>(*node, s.key(name));
    if (v == 0) throw ConfigError("must be >= 1", s.key(name), line_of(*node));
    return v;
  };
  auto number = [&](const std::string& name, double fallback) {
    auto node = s.find(name);
    return node ? std::make_pair(Section::convert<double>(*node, s.key(name)), line_of(*node))
                : std::make_pair(fallback, s.line());
  };

  switch (p.source) {
    case ProblemSource::kSynthetic: {
      p.rows = positive_size("rows", p.rows);
      p.dim = positive_size("dim", p.dim);
      const auto [kappa, kline] = number("condition_number", p.condition_number);
      if (!(kappa >= 1.0)) throw ConfigError("condition number must be >= 1", s.key("condition_number"), kline);
      p.condition_number = kappa;
      if (p.rows < p.dim) throw ConfigError("synthetic data needs rows >= dim", s.key("rows"), s.line());
      p.data_seed = s.get<std::uint64_t>("data_seed").value_or(0);
      break;
    }
    case ProblemSource::kLibsvm: {
      auto path = s.get<std::string>("path");
      if (!path) throw ConfigError("libsvm problems need a path", s.key("path"), s.line());
      std::filesystem::path resolved(*path);
      if (resolved.is_relative()) resolved = base_dir / resolved;
      resolved = resolved.lexically_normal();
      if (!std::filesystem::is_regular_file(resolved)) {
        throw ConfigError("file does not exist: " + resolved.string(), s.key("path"), s.line());
      }
      p.path = resolved;
      break;
    }
    case ProblemSource::kSaddle: {
      p.dim = positive_size("dim", p.dim);
      const auto [mu, mline] = number("mu", p.mu);
      if (!(mu > 0.0)) throw ConfigError("mu must be > 0", s.key("mu"), mline);
      p.mu = mu;
      p.data_seed = s.get<std::uint64_t>("data_seed").value_or(0);
      break;
    }
    case ProblemSource::kQuadratic: {
      auto hs = s.find("hessians");
      auto ls = s.find("linear");
      if (!hs || !hs->IsSequence() || hs->size() == 0) {
        throw ConfigError("quadratic problems need a nonempty list of matrices", s.key("hessians"), s.line());
      }
      if (!ls || !ls->IsSequence()) throw ConfigError("quadratic problems need a list of vectors", s.key("linear"), s.line());
      for (const auto& m : *hs) {
        if (!m.IsSequence()) throw ConfigError("expected a matrix (list of rows)", s.key("hessians"), line_of(m));
        std::vector<std::vector<double>> rows;
        for (const auto& r : m) rows.push_back(read_vector(r, s.key("hessians")));
        p.hessians.push_back(std::move(rows));
      }
      for (const auto& v : *ls) p.linear.push_back(read_vector(v, s.key("linear")));
      if (p.hessians.size() != p.linear.size()) {
        throw ConfigError("need one vector per matrix", s.key("linear"), line_of(*ls));
      }
      p.dim = p.linear.front().size();
      break;
    }
  }
  if (p.source != ProblemSource::kSaddle) {
    const double fallback = p.source == ProblemSource::kQuadratic ? 0.0 : p.lambda;
    const auto [lambda, lline] = number("lambda", fallback);
    if (p.source == ProblemSource::kQuadratic ? !(lambda >= 0.0) : !(lambda > 0.0)) {
      throw ConfigError(p.source == ProblemSource::kQuadratic ? "lambda must be >= 0" : "lambda must be > 0",
                        s.key("lambda"), lline);
    }
    p.lambda = lambda;
    p.g = read_regularizer(s, "g");
    p.h = read_regularizer(s, "h");
  } else {
    p.lambda = 0.0;
  }
  s.finish();
  return p;
}

MapConfig read_map(Section s) {
  MapConfig m;
  const std::string kind = s.get<std::string>("kind").value_or("gd");
  auto parsed = parse_map_kind(kind);
  if (!parsed) throw ConfigError("unknown map kind '" + kind + "' (gd, sgd, prox_sgd, gda, davis_yin)", s.key("kind"), s.line());
  m.kind = *parsed;
  m.gamma = s.get_auto("gamma");
  if (m.gamma && !(*m.gamma > 0.0)) throw ConfigError("gamma must be > 0", s.key("gamma"), s.line());
  m.minibatch = s.get<std::size_t>("minibatch").value_or(1);
  if (m.minibatch == 0) throw ConfigError("minibatch must be >= 1", s.key("minibatch"), s.line());
  s.finish();
  return m;
}

CompressorSpec read_compressor(Section s) {
  const std::string kind = s.get<std::string>("kind").value_or("identity");
  CompressorSpec out;
  if (kind == "identity") {
    out = IdentityCompressor{};
  } else if (kind == "rand_k") {
    auto k = s.get<std::size_t>("k");
    if (!k || *k == 0) throw ConfigError("rand_k needs k >= 1", s.key("k"), s.line());
    out = RandK{*k};
  } else if (kind == "natural") {
    out = NaturalCompression{};
  } else if (kind == "dithering") {
    auto levels = s.get<std::size_t>("levels");
    if (!levels || *levels == 0 || *levels > 0xffffffffULL) {
      throw ConfigError("dithering needs levels >= 1", s.key("levels"), s.line());
    }
    out = StandardDithering{static_cast<std::uint32_t>(*levels)};
  } else {
    throw ConfigError("unknown compressor '" + kind + "' (identity, rand_k, natural, dithering)", s.key("kind"), s.line());
  }
  s.finish();
  return out;
}

AlgorithmConfig read_algorithm(Section s) {
  AlgorithmConfig a;
  const std::string mode = s.get<std::string>("mode").value_or("plain");
  auto parsed = parse_mode(mode);
  if (!parsed) throw ConfigError("unknown mode '" + mode + "' (plain, vr)", s.key("mode"), s.line());
  a.mode = *parsed;
  a.nodes = s.get<std::size_t>("nodes").value_or(1);
  if (a.nodes == 0) throw ConfigError("nodes must be >= 1", s.key("nodes"), s.line());
  a.iterations = s.get<std::size_t>("iterations").value_or(a.iterations);
  if (a.iterations == 0) throw ConfigError("iterations must be >= 1", s.key("iterations"), s.line());
  a.alpha = s.get_auto("alpha");
  if (a.alpha && !(*a.alpha > 0.0 && *a.alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]", s.key("alpha"), s.line());
  a.eta = s.get_auto("eta");
  if (a.eta && !(*a.eta >= 0.0 && *a.eta <= 1.0)) throw ConfigError("eta must be in [0, 1]", s.key("eta"), s.line());
  for (const char* name : {"x0", "h0"}) {
    auto node = s.find(name);
    if (!node) continue;
    if (node->IsScalar() && node->Scalar() == "zero") continue;
    (std::string(name) == "x0" ? a.x0 : a.h0) = read_vector(*node, s.key(name));
  }
  s.finish();
  return a;
}

std::vector<std::uint64_t> read_seeds(const YAML::Node& node) {
  std::vector<std::uint64_t> seeds;
  if (node.IsScalar()) {
    seeds.push_back(Section::convert<std::uint64_t>(node, "seeds"));
  } else if (node.IsSequence()) {
    for (const auto& v : node) seeds.push_back(Section::convert<std::uint64_t>(v, "seeds"));
  } else {
    Section s(node, "seeds");
    const auto start = s.get<std::uint64_t>("start").value_or(0);
    const auto count = s.get<std::size_t>("count").value_or(0);
    s.finish();
    for (std::size_t i = 0; i < count; ++i) seeds.push_back(start + i);
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty", "seeds", line_of(node));
  return seeds;
}

void check_dims(const RunConfig& cfg, std::size_t line) {
  const auto& p = cfg.problem;
  if (p.source == ProblemSource::kQuadratic && p.hessians.size() != cfg.algorithm.nodes) {
    throw ConfigError("quadratic problem lists " + std::to_string(p.hessians.size()) + " nodes but algorithm.nodes = " +
                          std::to_string(cfg.algorithm.nodes),
                      "algorithm.nodes", line);
  }
  if (p.source == ProblemSource::kSynthetic && p.rows % cfg.algorithm.nodes != 0) {
    throw ConfigError("algorithm.nodes must divide problem.rows", "algorithm.nodes", line);
  }
  if (p.source == ProblemSource::kLibsvm) return;  // dimension known after loading
  const std::size_t d = p.source == ProblemSource::kSaddle ? 2 * p.dim : p.dim;
  for (const auto* v : {&cfg.algorithm.x0, &cfg.algorithm.h0}) {
    if (*v && v->value().size() != d) {
      throw ConfigError("initial vector has dimension " + std::to_string(v->value().size()) + ", problem has " +
                            std::to_string(d),
                        v == &cfg.algorithm.x0 ? "algorithm.x0" : "algorithm.h0", line);
    }
  }
}

std::string number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void emit_vector(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << number(x);
  e << YAML::EndSeq;
}

void emit_regularizer(YAML::Emitter& e, const char* name, const Regularizer& r) {
  if (r.kind == RegularizerKind::kNone) return;
  e << YAML::Key << name << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
    << (r.kind == RegularizerKind::kL1 ? "l1" : "l2") << YAML::Key << "weight" << YAML::Value << number(r.weight)
    << YAML::EndMap;
}

}  // namespace

std::string to_string(ProblemSource s) {
  switch (s) {
    case ProblemSource::kSynthetic: return "synthetic";
    case ProblemSource::kLibsvm: return "libsvm";
    case ProblemSource::kSaddle: return "saddle";
    case ProblemSource::kQuadratic: return "quadratic";
  }
  return "?";
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed YAML: " + e.msg, "", static_cast<std::size_t>(e.mark.line) + 1);
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError("empty configuration", "<root>", 1);
  RunConfig cfg;
  try {
    Section s(root, "");
    cfg.problem = read_problem(s.child("problem"), base_dir);
    if (auto m = s.find("map")) cfg.map = read_map(Section(*m, "map"));
    if (auto c = s.find("compressor")) cfg.compressor = read_compressor(Section(*c, "compressor"));
    if (auto a = s.find("algorithm")) cfg.algorithm = read_algorithm(Section(*a, "algorithm"));
    if (auto seeds = s.find("seeds")) cfg.seeds = read_seeds(*seeds);
    if (auto out = s.get<std::string>("output_dir")) {
      std::filesystem::path dir(*out);
      cfg.output_dir = (dir.is_relative() ? base_dir / dir : dir).lexically_normal();
    } else {
      cfg.output_dir = (base_dir / cfg.output_dir).lexically_normal();
    }
    cfg.mc_budget = s.get<std::size_t>("mc_budget").value_or(cfg.mc_budget);
    if (cfg.mc_budget < 2) throw ConfigError("mc_budget must be >= 2", "mc_budget", s.line());
    cfg.psi_mc_budget = s.get<std::size_t>("psi_mc_budget").value_or(cfg.psi_mc_budget);
    if (cfg.psi_mc_budget < 2) throw ConfigError("psi_mc_budget must be >= 2", "psi_mc_budget", s.line());
    cfg.plateau_window = s.get<double>("plateau_window").value_or(cfg.plateau_window);
    if (!(cfg.plateau_window > 0.0 && cfg.plateau_window <= 1.0)) {
      throw ConfigError("plateau_window must be in (0, 1]", "plateau_window", s.line());
    }
    cfg.write_transcript = s.get<bool>("write_transcript").value_or(false);
    s.finish();
    check_dims(cfg, s.line());
    if (cfg.problem.source != ProblemSource::kLibsvm && cfg.problem.source != ProblemSource::kQuadratic) {
      const std::size_t d = cfg.problem.source == ProblemSource::kSaddle ? 2 * cfg.problem.dim : cfg.problem.dim;
      try {
        validate_compressor(cfg.compressor, d);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "compressor", s.line());
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, "", static_cast<std::size_t>(e.mark.line) + 1);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string(), "config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  const auto& p = cfg.problem;
  e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << to_string(p.source);
  switch (p.source) {
    case ProblemSource::kSynthetic:
      e << YAML::Key << "rows" << YAML::Value << p.rows << YAML::Key << "dim" << YAML::Value << p.dim;
      e << YAML::Key << "condition_number" << YAML::Value << number(p.condition_number);
      e << YAML::Key << "data_seed" << YAML::Value << p.data_seed;
      break;
    case ProblemSource::kLibsvm:
      e << YAML::Key << "path" << YAML::Value << p.path.string();
      break;
    case ProblemSource::kSaddle:
      e << YAML::Key << "dim" << YAML::Value << p.dim << YAML::Key << "mu" << YAML::Value << number(p.mu);
      e << YAML::Key << "data_seed" << YAML::Value << p.data_seed;
      break;
    case ProblemSource::kQuadratic:
      e << YAML::Key << "hessians" << YAML::Value << YAML::BeginSeq;
      for (const auto& m : p.hessians) {
        e << YAML::BeginSeq;
        for (const auto& row : m) emit_vector(e, row);
        e << YAML::EndSeq;
      }
      e << YAML::EndSeq << YAML::Key << "linear" << YAML::Value << YAML::BeginSeq;
      for (const auto& v : p.linear) emit_vector(e, v);
      e << YAML::EndSeq;
      break;
  }
  if (p.source != ProblemSource::kSaddle) {
    e << YAML::Key << "lambda" << YAML::Value << number(p.lambda);
    emit_regularizer(e, "g", p.g);
    emit_regularizer(e, "h", p.h);
  }
  e << YAML::EndMap;

  e << YAML::Key << "map" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << to_string(cfg.map.kind);
  e << YAML::Key << "gamma" << YAML::Value << (cfg.map.gamma ? number(*cfg.map.gamma) : "auto");
  e << YAML::Key << "minibatch" << YAML::Value << cfg.map.minibatch << YAML::EndMap;

  e << YAML::Key << "compressor" << YAML::Value << YAML::BeginMap;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IdentityCompressor>) {
          e << YAML::Key << "kind" << YAML::Value << "identity";
        } else if constexpr (std::is_same_v<T, RandK>) {
          e << YAML::Key << "kind" << YAML::Value << "rand_k" << YAML::Key << "k" << YAML::Value << c.k;
        } else if constexpr (std::is_same_v<T, NaturalCompression>) {
          e << YAML::Key << "kind" << YAML::Value << "natural";
        } else {
          e << YAML::Key << "kind" << YAML::Value << "dithering" << YAML::Key << "levels" << YAML::Value << c.levels;
        }
      },
      cfg.compressor);
  e << YAML::EndMap;

  const auto& a = cfg.algorithm;
  e << YAML::Key << "algorithm" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << to_string(a.mode);
  e << YAML::Key << "nodes" << YAML::Value << a.nodes << YAML::Key << "iterations" << YAML::Value << a.iterations;
  e << YAML::Key << "alpha" << YAML::Value << (a.alpha ? number(*a.alpha) : "auto");
  e << YAML::Key << "eta" << YAML::Value << (a.eta ? number(*a.eta) : "auto");
  if (a.x0) {
    e << YAML::Key << "x0" << YAML::Value;
    emit_vector(e, *a.x0);
  }
  if (a.h0) {
    e << YAML::Key << "h0" << YAML::Value;
    emit_vector(e, *a.h0);
  }
  e << YAML::EndMap;

  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << cfg.seeds;
  e << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir.string();
  e << YAML::Key << "mc_budget" << YAML::Value << cfg.mc_budget;
  e << YAML::Key << "psi_mc_budget" << YAML::Value << cfg.psi_mc_budget;
  e << YAML::Key << "plateau_window" << YAML::Value << number(cfg.plateau_window);
  e << YAML::Key << "write_transcript" << YAML::Value << cfg.write_transcript;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace fpci
