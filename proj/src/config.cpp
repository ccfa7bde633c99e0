#include "brwmf/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "brwmf/errors.hpp"

namespace brwmf {

std::string_view kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Pressure: return "pressure";
    case ExperimentKind::Cascade: return "cascade";
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Domains: return "domains";
    case ExperimentKind::Full: return "full";
  }
  return "unknown";
}

namespace {

std::string at_line(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return {};
  return " (line " + std::to_string(mark.line + 1) + ")";
}

[[noreturn]] void fail(const std::string& key, const std::string& what, const YAML::Node& node) {
  throw ConfigError(key + ": " + what + at_line(node), key);
}

void require_map(const YAML::Node& node, const std::string& key) {
  if (!node.IsMap()) fail(key, "expected a mapping", node);
}

void reject_unknown(const YAML::Node& node, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const auto name = kv.first.as<std::string>();
    if (!allowed.count(name)) {
      fail(prefix.empty() ? name : prefix + "." + name, "unknown key", kv.first);
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(key, "expected a scalar value", node);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, "type mismatch for value '" + node.Scalar() + "'", node);
  }
}

std::size_t count_value(const YAML::Node& node, const std::string& key) {
  const auto v = scalar<long long>(node, key);
  if (v < 0) fail(key, "must be non-negative", node);
  return static_cast<std::size_t>(v);
}

double real_value(const YAML::Node& node, const std::string& key) {
  const double v = scalar<double>(node, key);
  if (!std::isfinite(v)) fail(key, "must be finite", node);
  return v;
}

Vec real_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) fail(key, "expected a list of numbers", node);
  Vec out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(real_value(node[i], key));
  return out;
}

const YAML::Node required(const YAML::Node& parent, const std::string& name, const std::string& key) {
  const YAML::Node n = parent[name];
  if (!n) fail(key, "missing required key", parent);
  return n;
}

GridBlock parse_grid(const YAML::Node& node, const std::string& key) {
  require_map(node, key);
  reject_unknown(node, key, {"lo", "hi", "points"});
  GridBlock g;
  g.lo = real_list(required(node, "lo", key + ".lo"), key + ".lo");
  g.hi = real_list(required(node, "hi", key + ".hi"), key + ".hi");
  const YAML::Node pts = required(node, "points", key + ".points");
  if (!pts.IsSequence()) fail(key + ".points", "expected a list of counts", pts);
  for (std::size_t i = 0; i < pts.size(); ++i) g.points.push_back(count_value(pts[i], key + ".points"));
  if (g.lo.empty() || g.lo.size() != g.hi.size() || g.lo.size() != g.points.size()) {
    fail(key, "lo, hi and points must have the same positive length", node);
  }
  for (std::size_t j = 0; j < g.lo.size(); ++j) {
    if (g.points[j] == 0) fail(key + ".points", "grids must be non-empty", pts);
    if (g.points[j] > 1 && !(g.hi[j] > g.lo[j])) fail(key + ".hi", "must exceed lo", node);
  }
  return g;
}

ModelSpec parse_model(const YAML::Node& node) {
  require_map(node, "model");
  reject_unknown(node, "model", {"family", "d", "fan_out", "support", "probabilities", "lambda", "mean", "sigma"});
  ModelSpec m;
  const YAML::Node fam = required(node, "family", "model.family");
  try {
    m.family = parse_family(scalar<std::string>(fam, "model.family"));
  } catch (const ConfigError& e) {
    fail("model.family", e.what(), fam);
  }
  m.dim = count_value(required(node, "d", "model.d"), "model.d");
  if (m.dim == 0) fail("model.d", "must be a positive integer", node["d"]);

  auto forbid = [&](const char* name) {
    if (node[name]) fail(std::string("model.") + name, "not a parameter of this family", node[name]);
  };
  switch (m.family) {
    case Family::BinaryRademacher:
      for (const char* k : {"fan_out", "support", "probabilities", "lambda", "mean", "sigma"}) forbid(k);
      break;
    case Family::FixedFanDiscrete: {
      for (const char* k : {"lambda", "mean", "sigma"}) forbid(k);
      m.fan_out = static_cast<unsigned>(count_value(required(node, "fan_out", "model.fan_out"), "model.fan_out"));
      const YAML::Node sup = required(node, "support", "model.support");
      if (!sup.IsSequence()) fail("model.support", "expected a list of points", sup);
      for (std::size_t i = 0; i < sup.size(); ++i) m.support.push_back(real_list(sup[i], "model.support"));
      m.probabilities = real_list(required(node, "probabilities", "model.probabilities"), "model.probabilities");
      break;
    }
    case Family::ShiftedPoissonGaussian:
      for (const char* k : {"fan_out", "support", "probabilities"}) forbid(k);
      m.lambda = real_value(required(node, "lambda", "model.lambda"), "model.lambda");
      m.sigma = node["sigma"] ? real_value(node["sigma"], "model.sigma") : 1.0;
      m.mean = node["mean"] ? real_list(node["mean"], "model.mean") : Vec(m.dim, 0.0);
      break;
  }
  try {
    m.validate();
  } catch (const ConfigError& e) {
    const std::string key = "model." + e.key();
    fail(key, e.what(), node[e.key()] ? node[e.key()] : node);
  }
  return m;
}

ExperimentKind parse_kind(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "kind");
  for (auto k : {ExperimentKind::Pressure, ExperimentKind::Cascade, ExperimentKind::Spectrum, ExperimentKind::Domains,
                 ExperimentKind::Full}) {
    if (kind_name(k) == s) return k;
  }
  fail("kind", "must be one of pressure, cascade, spectrum, domains, full", node);
}

nlohmann::json grid_json(const GridBlock& g) {
  return {{"lo", g.lo}, {"hi", g.hi}, {"points", g.points}};
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (depth < 1) throw ConfigError("depth must be >= 1", "depth");
  if (replicas < 1) throw ConfigError("replicas must be >= 1", "replicas");
  if (threads < 1) throw ConfigError("threads must be >= 1", "threads");
  if (node_budget < 1) throw ConfigError("node_budget must be >= 1", "node_budget");
  if (q_grid.lo.size() != model.dim) throw ConfigError("q_grid dimension must equal model.d", "q_grid");
  if (alpha_grid && alpha_grid->lo.size() != model.dim) {
    throw ConfigError("alpha_grid dimension must equal model.d", "alpha_grid");
  }
  if (lambda_grid && lambda_grid->lo.size() != model.dim) {
    throw ConfigError("lambda_grid dimension must equal model.d", "lambda_grid");
  }
  if (epsilons.empty()) throw ConfigError("epsilon list must be non-empty", "epsilon");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("epsilon values must be positive", "epsilon");
  }
  bool found = false;
  for (double e : epsilons) found = found || e == check_epsilon;
  if (!found) throw ConfigError("check_epsilon must be one of the epsilon values", "check_epsilon");
  if (n_lo < 1 || n_lo > n_hi || n_hi > depth) throw ConfigError("n_range must satisfy 1 <= lo <= hi <= depth", "n_range");
  if (gamma_probe.empty()) throw ConfigError("gamma_probe must be non-empty", "gamma_probe");
  for (double g : gamma_probe) {
    if (!(g > 1.0 && g <= 2.0)) throw ConfigError("gamma_probe values must lie in (1, 2]", "gamma_probe");
  }
  if (model.dim > 3 && (kind == ExperimentKind::Cascade || kind == ExperimentKind::Full)) {
    throw ConfigError("cascade concentration checks support d <= 3", "model.d");
  }
}

ExperimentConfig parse_config_text(std::string_view text, std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string(source) + ": malformed YAML at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(std::string(source) + ": top level must be a mapping");
  reject_unknown(root, "",
                 {"kind", "model", "depth", "replicas", "master_seed", "threads", "node_budget", "q_grid", "alpha_grid",
                  "lambda_grid", "epsilon", "check_epsilon", "n_range", "paths", "gamma_probe", "tolerances", "output"});

  ExperimentConfig c;
  c.kind = parse_kind(required(root, "kind", "kind"));
  c.model = parse_model(required(root, "model", "model"));
  c.depth = count_value(required(root, "depth", "depth"), "depth");
  if (c.depth < 1) fail("depth", "must be >= 1", root["depth"]);
  c.master_seed = scalar<std::uint64_t>(required(root, "master_seed", "master_seed"), "master_seed");
  c.q_grid = parse_grid(required(root, "q_grid", "q_grid"), "q_grid");

  if (root["replicas"]) {
    c.replicas = count_value(root["replicas"], "replicas");
    if (c.replicas < 1) fail("replicas", "must be >= 1", root["replicas"]);
  }
  if (root["threads"]) {
    c.threads = count_value(root["threads"], "threads");
    if (c.threads < 1) fail("threads", "must be >= 1", root["threads"]);
  }
  if (root["node_budget"]) c.node_budget = count_value(root["node_budget"], "node_budget");
  if (root["alpha_grid"]) c.alpha_grid = parse_grid(root["alpha_grid"], "alpha_grid");
  if (root["lambda_grid"]) c.lambda_grid = parse_grid(root["lambda_grid"], "lambda_grid");
  if (root["epsilon"]) {
    c.epsilons = real_list(root["epsilon"], "epsilon");
    if (c.epsilons.empty()) fail("epsilon", "must be non-empty", root["epsilon"]);
    for (double e : c.epsilons) {
      if (!(e > 0.0)) fail("epsilon", "values must be positive", root["epsilon"]);
    }
  }
  c.check_epsilon = root["check_epsilon"] ? real_value(root["check_epsilon"], "check_epsilon")
                    : std::find(c.epsilons.begin(), c.epsilons.end(), 0.05) != c.epsilons.end() ? 0.05
                                                                                               : c.epsilons.front();
  c.n_hi = c.depth;
  c.n_lo = c.depth > 8 ? c.depth - 8 : 1;
  if (root["n_range"]) {
    const YAML::Node r = root["n_range"];
    if (!r.IsSequence() || r.size() != 2) fail("n_range", "expected [lo, hi]", r);
    c.n_lo = count_value(r[0], "n_range");
    c.n_hi = count_value(r[1], "n_range");
  }
  if (root["paths"]) c.paths = count_value(root["paths"], "paths");
  if (root["gamma_probe"]) c.gamma_probe = real_list(root["gamma_probe"], "gamma_probe");
  if (root["tolerances"]) {
    const YAML::Node t = root["tolerances"];
    require_map(t, "tolerances");
    reject_unknown(t, "tolerances",
                   {"identity", "pressure_gap", "pressure_upper", "duality", "L_gap", "spectrum", "local_dim", "cross"});
    auto tol = [&](const char* name, double& slot) {
      if (!t[name]) return;
      slot = real_value(t[name], std::string("tolerances.") + name);
      if (!(slot > 0.0)) fail(std::string("tolerances.") + name, "must be positive", t[name]);
    };
    tol("identity", c.tolerances.identity);
    tol("pressure_gap", c.tolerances.pressure_gap);
    tol("pressure_upper", c.tolerances.pressure_upper);
    tol("duality", c.tolerances.duality);
    tol("L_gap", c.tolerances.L_gap);
    tol("spectrum", c.tolerances.spectrum);
    tol("local_dim", c.tolerances.local_dim);
    tol("cross", c.tolerances.cross);
  }
  if (root["output"]) c.output_dir = scalar<std::string>(root["output"], "output");

  try {
    c.validate();
  } catch (const ConfigError& e) {
    const YAML::Node at = root[e.key()] ? root[e.key()] : root;
    fail(e.key(), e.what(), at);
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string canonical_config(const ExperimentConfig& c) {
  nlohmann::json model = {{"family", family_name(c.model.family)}, {"d", c.model.dim}};
  switch (c.model.family) {
    case Family::BinaryRademacher: break;
    case Family::FixedFanDiscrete:
      model["fan_out"] = c.model.fan_out;
      model["support"] = c.model.support;
      model["probabilities"] = c.model.probabilities;
      break;
    case Family::ShiftedPoissonGaussian:
      model["lambda"] = c.model.lambda;
      model["mean"] = c.model.mean;
      model["sigma"] = c.model.sigma;
      break;
  }
  nlohmann::json j = {
      {"kind", kind_name(c.kind)},
      {"model", model},
      {"depth", c.depth},
      {"replicas", c.replicas},
      {"master_seed", c.master_seed},
      {"node_budget", c.node_budget},
      {"q_grid", grid_json(c.q_grid)},
      {"epsilon", c.epsilons},
      {"check_epsilon", c.check_epsilon},
      {"n_range", {c.n_lo, c.n_hi}},
      {"paths", c.paths},
      {"gamma_probe", c.gamma_probe},
      {"tolerances",
       {{"identity", c.tolerances.identity},
        {"pressure_gap", c.tolerances.pressure_gap},
        {"pressure_upper", c.tolerances.pressure_upper},
        {"duality", c.tolerances.duality},
        {"L_gap", c.tolerances.L_gap},
        {"spectrum", c.tolerances.spectrum},
        {"local_dim", c.tolerances.local_dim},
        {"cross", c.tolerances.cross}}},
  };
  if (c.alpha_grid) j["alpha_grid"] = grid_json(*c.alpha_grid);
  if (c.lambda_grid) j["lambda_grid"] = grid_json(*c.lambda_grid);
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace brwmf
