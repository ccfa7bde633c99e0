#include <doctest.h>

#include <string>

#include "brwmf/config.hpp"
#include "brwmf/errors.hpp"

using namespace brwmf;

namespace {

const char* kMinimal = R"(kind: pressure
model:
  family: binary_rademacher
  d: 1
depth: 10
master_seed: 7
q_grid:
  lo: [-1]
  hi: [1]
  points: [21]
)";

std::string error_key(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key() + " | " + e.what();
  }
  return "no error";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config parses with defaults") {
    const auto c = parse_config_text(kMinimal);
    CHECK(c.kind == ExperimentKind::Pressure);
    CHECK(c.model.family == Family::BinaryRademacher);
    CHECK(c.depth == 10);
    CHECK(c.replicas == 1);
    CHECK(c.master_seed == 7);
    CHECK(c.q_grid.to_grid().size() == 21);
    CHECK(c.n_lo == 2);
    CHECK(c.n_hi == 10);
    CHECK(c.check_epsilon == 0.05);
  }

  TEST_CASE("negative lambda names lambda") {
    const std::string text = R"(kind: domains
model:
  family: shifted_poisson_gaussian
  d: 2
  lambda: -1
depth: 5
master_seed: 1
q_grid: {lo: [-1, -1], hi: [1, 1], points: [3, 3]}
)";
    const auto k = error_key(text);
    CHECK(k.find("lambda") != std::string::npos);
    CHECK(k.find("line 5") != std::string::npos);
  }

  TEST_CASE("unknown, missing and mistyped keys") {
    CHECK(error_key(std::string(kMinimal) + "colour: blue\n").rfind("colour", 0) == 0);
    CHECK(error_key(std::string(kMinimal) + "tolerances: {spectrum: 0.1, typo: 2}\n").rfind("tolerances.typo", 0) == 0);
    CHECK(error_key("kind: pressure\ndepth: 3\n").rfind("model", 0) == 0);
    std::string bad = kMinimal;
    bad.replace(bad.find("depth: 10"), 9, "depth: ten");
    CHECK(error_key(bad).rfind("depth", 0) == 0);
    std::string zero = kMinimal;
    zero.replace(zero.find("depth: 10"), 9, "depth: 0");
    CHECK(error_key(zero).rfind("depth", 0) == 0);
    CHECK(error_key(std::string(kMinimal) + "epsilon: [0.1, -0.2]\n").rfind("epsilon", 0) == 0);
    CHECK(error_key(std::string(kMinimal) + "replicas: 0\n").rfind("replicas", 0) == 0);
    std::string fam = kMinimal;
    fam.replace(fam.find("  d: 1"), 6, "  d: 1\n  sigma: 2");
    CHECK(error_key(fam).rfind("model.sigma", 0) == 0);
  }

  TEST_CASE("hash ignores key order, output and threads but not values") {
    const std::string reordered = R"(master_seed: 7
q_grid:
  points: [21]
  hi: [1]
  lo: [-1]
depth: 10
model: {d: 1, family: binary_rademacher}
kind: pressure
output: elsewhere
threads: 8
)";
    const auto a = parse_config_text(kMinimal);
    const auto b = parse_config_text(reordered);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(config_hash(a).size() == 16);
    std::string other = kMinimal;
    other.replace(other.find("master_seed: 7"), 14, "master_seed: 8");
    CHECK(config_hash(parse_config_text(other)) != config_hash(a));
  }

  TEST_CASE("full config with every block") {
    const std::string text = R"(kind: full
model:
  family: fixed_fan_discrete
  d: 1
  fan_out: 3
  support: [[-1], [0], [2]]
  probabilities: [0.5, 0.3, 0.2]
depth: 14
replicas: 2
master_seed: 99
threads: 2
node_budget: 1000000
q_grid: {lo: [-0.5], hi: [0.5], points: [5]}
alpha_grid: {lo: [-0.5], hi: [1.0], points: [7]}
lambda_grid: {lo: [-0.1], hi: [0.1], points: [3]}
epsilon: [0.05, 0.1]
check_epsilon: 0.1
n_range: [8, 14]
paths: 50
gamma_probe: [1.5]
tolerances: {identity: 1e-11, spectrum: 0.2}
output: out/full
)";
    const auto c = parse_config_text(text);
    CHECK(c.kind == ExperimentKind::Full);
    CHECK(c.model.fan_out == 3);
    CHECK(c.alpha_grid.has_value());
    CHECK(c.lambda_grid->points[0] == 3);
    CHECK(c.check_epsilon == 0.1);
    CHECK(c.n_lo == 8);
    CHECK(c.tolerances.identity == 1e-11);
    CHECK(c.tolerances.spectrum == 0.2);
    CHECK(c.tolerances.cross == 0.15);
    CHECK(c.output_dir == "out/full");
    std::string bad = text;
    bad.replace(bad.find("check_epsilon: 0.1"), 18, "check_epsilon: 0.2");
    CHECK(error_key(bad).rfind("check_epsilon", 0) == 0);
  }

  TEST_CASE("missing file") { CHECK_THROWS(parse_config("/nonexistent/brwmf.yaml")); }
}
