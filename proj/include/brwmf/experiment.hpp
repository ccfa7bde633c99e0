#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "brwmf/config.hpp"

namespace brwmf {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string kind;
  std::vector<std::uint64_t> replica_seeds;  // stream keys, replica order
  double wall_clock_seconds = 0.0;
  std::vector<std::string> outputs;          // relative to the output directory
  std::vector<CheckResult> checks;
  std::vector<std::string> flagged;
  bool complete = true;

  bool passed() const;
};

std::string toolkit_version();

/// Executes the configured experiment, writes every CSV/JSON artifact and
/// manifest.json into config.output_dir, and returns the manifest. Replica r
/// draws from stream (master_seed, r); output bytes do not depend on
/// config.threads.
RunManifest run_experiment(const ExperimentConfig& config);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace brwmf
