#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace brwmf {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double runtime_seconds = 0.0;
  double runtime_limit_seconds = 0.0;  // 0 when unbounded
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t master_seed = 20240917;
  std::size_t threads = 1;
  std::vector<int> only;  // empty: all criteria
  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path() / "brwmf_acceptance";
};

inline constexpr int kCriterionCount = 10;

/// Runs one end-to-end acceptance criterion against closed-form oracles.
CriterionResult run_criterion(int id, const AcceptanceOptions& options);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

}  // namespace brwmf
