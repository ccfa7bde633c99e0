#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "brwmf/grid.hpp"
#include "brwmf/kernels.hpp"
#include "brwmf/model.hpp"
#include "brwmf/rng.hpp"
#include "brwmf/tree.hpp"

namespace brwmf {

/// Truncated Mandelbrot cascade over a materialized tree of depth n.
///
/// For every level k <= n, node u of level k and grid point q, holds
/// log Y_{n-k}(u, q), where
///   Y_0(u, q) = 1,
///   Y_{m+1}(u, q) = sum_i exp(<q, X_ui> - P~(q)) Y_m(ui, q).
/// The table keeps a pointer to the run; the run must outlive it.
class CascadeTable {
 public:
  const TreeRun& run() const { return *run_; }
  const QGrid& grid() const { return grid_; }
  std::size_t depth() const { return depth_; }
  double log_mgf_at(std::size_t qi) const { return log_mgf_[qi]; }

  /// log Y_{n-k}(u, q_qi) for all nodes u of level k.
  std::span<const double> log_y(std::size_t level, std::size_t qi) const;
  /// Children of node u at level k occupy [offsets[u], offsets[u+1]) in level k+1.
  std::span<const std::size_t> child_offsets(std::size_t level) const { return offsets_[level]; }

  /// log Y_n(root, q_qi).
  double log_total_mass(std::size_t qi) const { return log_y(0, qi)[0]; }

 private:
  friend CascadeTable build_cascade(const TreeRun&, const QGrid&, const ModelSpec&, std::size_t);

  const TreeRun* run_ = nullptr;
  QGrid grid_;
  std::size_t depth_ = 0;
  std::vector<double> log_mgf_;
  std::vector<std::vector<double>> log_y_;              // per level, [qi * count + u]
  std::vector<std::vector<std::size_t>> offsets_;       // per level < n
};

/// Backward sweep from the leaves, one column per grid point (columns may be
/// built concurrently on `threads` workers; results do not depend on it).
/// Throws UsageError when the run is not materialized or incomplete.
CascadeTable build_cascade(const TreeRun& run, const QGrid& grid, const ModelSpec& spec, std::size_t threads = 1);

/// log mu^(n)([u]) = <q, S_k(u)> - k P~(q) + log Y_{n-k}(u, q) for every node
/// of level k.
struct MeasureWeights {
  std::size_t level = 0;
  std::size_t node_count = 0;
  std::vector<double> log_mu;  // [qi * node_count + u]

  std::span<const double> for_q(std::size_t qi) const {
    return {log_mu.data() + qi * node_count, node_count};
  }
};

MeasureWeights measure_weights(const CascadeTable& table, std::size_t level);

/// Largest relative deviation of the branching recursion and of the measure
/// additivity over all internal nodes and grid points, recomputed in linear
/// space independently of the log-sum-exp kernels; plus positivity.
struct CascadeIdentityReport {
  double max_recursion_error = 0.0;
  double max_additivity_error = 0.0;
  double max_total_mass_error = 0.0;  // |mass at level k / Y_n(root) - 1|
  bool all_positive = true;
  std::size_t internal_nodes_checked = 0;
};
CascadeIdentityReport verify_cascade(const CascadeTable& table);

/// A mu_q-distributed lineage of the truncated cascade.
/// Prefix k = 0..n: node index at level k, S_k, log mu([t|k]), log Y_{n-k}(t|k).
struct SampledPath {
  std::size_t dim = 1;
  std::vector<std::uint32_t> nodes;
  std::vector<double> path_sum;  // row-major (n+1) x dim
  std::vector<double> log_mu;
  std::vector<double> log_y;

  std::size_t depth() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  std::span<const double> path_sum_at(std::size_t k) const { return {path_sum.data() + k * dim, dim}; }
};

/// Walks from the root choosing child i of u with probability
/// mu([ui]) / mu([u]).
SampledPath sample_path(const CascadeTable& table, std::size_t qi, RngStream& rng);

/// L_n(q, l) = (1/n) log sum_{u in T_n} exp<l, S_n(u)> mu([u]) from the leaf
/// weights of the table.
double L_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda);

/// Same quantity at any level k >= 1 and any q from a frame alone, via
/// (1/k) log sum exp<q + l, S_k(u)> - P~(q).
double L_n(const ModelSpec& spec, const LevelFrame& frame, std::span<const double> q, std::span<const double> lambda);

/// log Z_n(q, l) = log sum_{u in T_n} exp(<q + l, S_n(u)> - n P~(q + l)) Y_0(u, q).
double log_Z_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda);
double Z_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda);

/// Normalized mu-mass of level-k nodes with |S_k(u)/k - grad P~(q)| >= epsilon.
struct ConcentrationRow {
  std::size_t level = 0;
  double mass = 0.0;
  double log_mass = 0.0;  // -inf when no node lies outside
};
std::vector<ConcentrationRow> concentration_mass(const CascadeTable& table, std::size_t qi, double epsilon);

/// Columns: path, k, s_0.. (S_k/k), log_mu, log_y
void write_paths_csv(std::ostream& os, std::span<const SampledPath> paths, std::size_t dim, bool header = true);

}  // namespace brwmf
