#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "brwmf/model.hpp"
#include "brwmf/rng.hpp"
#include "brwmf/vec.hpp"

namespace brwmf {

inline constexpr std::size_t kDefaultNodeBudget = 30'000'000;

/// One generation T_n of the tree.
///
/// Vectors are stored coordinate-major: coordinate j of node u lives at
/// [j * node_count() + u]. Children are listed parent-major, in birth order
/// within each parent, so the children of any parent form a contiguous range.
struct LevelFrame {
  std::size_t depth = 0;
  std::size_t dim = 1;
  std::vector<std::uint32_t> parent_index;  // empty at depth 0
  std::vector<double> path_sum;             // S_n(u)
  std::vector<double> displacement;         // X_u, the last step (zero at the root)

  static LevelFrame root(std::size_t dim);

  std::size_t node_count() const { return dim == 0 ? 0 : path_sum.size() / dim; }

  std::span<const double> path_sum_column(std::size_t j) const {
    return {path_sum.data() + j * node_count(), node_count()};
  }
  std::span<const double> displacement_column(std::size_t j) const {
    return {displacement.data() + j * node_count(), node_count()};
  }
  Vec path_sum_at(std::size_t u) const;
  Vec displacement_at(std::size_t u) const;
};

/// Offsets such that the children of parent p occupy [offsets[p], offsets[p+1]).
std::vector<std::size_t> child_offsets(const LevelFrame& children, std::size_t parent_count);

/// Draws offspring for every node of `frame` (in node order, from one
/// stream) and returns the next generation. Throws BudgetExceeded when the new
/// level would exceed `budget` nodes.
LevelFrame grow_level(const ModelSpec& spec, const LevelFrame& frame, RngStream& rng,
                      std::size_t budget = kDefaultNodeBudget);

enum class GrowthMode { Materialize, Stream };

using LevelSink = std::function<void(const LevelFrame&)>;

struct TreeRun {
  ModelSpec spec;
  std::size_t max_depth = 0;
  GrowthMode mode = GrowthMode::Materialize;
  std::uint64_t stream_key = 0;
  /// Materialize: frames[k] has depth k. Stream: only the last frame.
  std::vector<LevelFrame> frames;
  bool complete = true;
  std::size_t deepest_level = 0;
  std::string failure;

  bool materialized() const { return mode == GrowthMode::Materialize; }
  /// Frame at depth k; throws UsageError when it was not retained.
  const LevelFrame& frame(std::size_t k) const;
  const LevelFrame& last() const { return frames.back(); }
};

/// Grows the tree from the root to depth n, calling every sink on each level
/// (including the root) as soon as it exists. On BudgetExceeded the run stops
/// and is returned with complete = false and the deepest finished level.
TreeRun run_to_depth(const ModelSpec& spec, std::size_t n, GrowthMode mode, std::size_t budget, RngStream& rng,
                     std::span<const LevelSink> sinks = {});

/// Debug dump: level,node_index,parent_index,S_0,...,S_{d-1}
void write_frame_csv(std::ostream& os, const LevelFrame& frame, bool header = true);

}  // namespace brwmf
