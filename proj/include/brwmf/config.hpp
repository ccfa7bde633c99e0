#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brwmf/grid.hpp"
#include "brwmf/model.hpp"
#include "brwmf/tree.hpp"

namespace brwmf {

enum class ExperimentKind { Pressure, Cascade, Spectrum, Domains, Full };

std::string_view kind_name(ExperimentKind k);

struct GridBlock {
  Vec lo, hi;
  std::vector<std::size_t> points;

  QGrid to_grid() const { return QGrid::box(lo, hi, points); }
};

struct Tolerances {
  double identity = 1e-12;
  double pressure_gap = 0.05;
  double pressure_upper = 0.1;
  double duality = 1e-8;
  double L_gap = 0.05;
  double spectrum = 0.1;
  double local_dim = 0.1;
  double cross = 0.15;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Full;
  ModelSpec model;
  std::size_t depth = 0;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  std::size_t node_budget = kDefaultNodeBudget;
  GridBlock q_grid;
  std::optional<GridBlock> alpha_grid;
  std::optional<GridBlock> lambda_grid;
  std::vector<double> epsilons{0.025, 0.05, 0.1};
  double check_epsilon = 0.05;
  std::size_t n_lo = 0;
  std::size_t n_hi = 0;
  std::size_t paths = 100;
  std::vector<double> gamma_probe{1.5, 2.0};
  Tolerances tolerances;
  std::filesystem::path output_dir = "brwmf_out";

  /// Throws ConfigError naming the key of the first violated constraint.
  void validate() const;
};

/// Strict YAML parse: unknown keys, missing required keys, type mismatches
/// and constraint violations are reported as ConfigError with the key name
/// and line number.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text, std::string_view source = "<config>");

/// Canonical JSON of every setting that influences results (output
/// directory and thread count excluded), keys sorted.
std::string canonical_config(const ExperimentConfig& config);
/// 64-bit FNV-1a of canonical_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace brwmf
