#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace brwmf {

/// Invalid model, grid or experiment parameters. `key()` names the offending
/// setting when one is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : std::runtime_error(message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A level would hold more nodes than the configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::size_t level, std::size_t budget)
      : std::runtime_error("node budget of " + std::to_string(budget) +
                           " exceeded while growing level " + std::to_string(level)),
        level_(level) {}

  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

/// An operation was called on an object in the wrong state, e.g. a cascade
/// over a streamed (non-materialized) tree.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// No p in (1, 1.001] keeps phi(p, q) below one on the whole grid.
class InfeasibleGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace brwmf
