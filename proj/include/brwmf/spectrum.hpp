#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brwmf/cascade.hpp"
#include "brwmf/grid.hpp"
#include "brwmf/model.hpp"
#include "brwmf/rng.hpp"
#include "brwmf/tree.hpp"

namespace brwmf {

/// Box of cubic bins over alpha-space.
struct HistogramGrid {
  Vec lo, hi;
  double width = 0.0;

  /// Bin width epsilon / 2 over [lo, hi].
  static HistogramGrid for_epsilon(Vec lo, Vec hi, double epsilon);
  std::vector<std::size_t> bins_per_axis() const;
};

/// Counts of S_n(u)/n per bin for one level. Node indices are kept sorted by
/// bin so ball counts can re-test the nodes of partially covered bins
/// exactly. Nodes outside the box are counted in `overflow` and always
/// re-tested.
struct LevelHistogram {
  std::size_t level = 0;
  std::size_t dim = 1;
  HistogramGrid grid;
  std::vector<std::size_t> bins_per_axis;
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;
  std::uint64_t total = 0;
  std::vector<std::size_t> member_offsets;  // bins + 1 entries; the overflow block follows the last bin
  std::vector<std::uint32_t> members;
};

LevelHistogram accumulate_histogram(const LevelFrame& frame, const HistogramGrid& grid);

/// N_n(alpha, eps) = #{u in T_n : |S_n(u)/n - alpha| <= eps}. Bins entirely
/// inside the ball are added wholesale; boundary bins and the overflow block
/// are re-tested node by node against `frame` (the frame the histogram was
/// built from).
std::uint64_t ball_count(const LevelHistogram& hist, const LevelFrame& frame, std::span<const double> alpha,
                         double epsilon);

struct BallQuery {
  Vec alpha;
  double epsilon = 0.0;
};

struct LevelBallCount {
  std::size_t level = 0;
  std::uint64_t count = 0;
};

/// Level sink: on every frame of depth >= 1, builds the histogram and records
/// the ball count of each query. Usable in streaming runs.
class BallCounter {
 public:
  BallCounter(HistogramGrid grid, std::vector<BallQuery> queries);

  void operator()(const LevelFrame& frame);

  const std::vector<BallQuery>& queries() const { return queries_; }
  /// Per query, the counts for each level seen so far.
  const std::vector<LevelBallCount>& series(std::size_t query) const { return series_[query]; }

 private:
  HistogramGrid grid_;
  std::vector<BallQuery> queries_;
  std::vector<std::vector<LevelBallCount>> series_;
};

struct SlopeFit {
  bool empty_phase = false;  // every count in range was zero
  double slope = 0.0;        // NaN when fewer than two non-empty levels
  double std_error = 0.0;      // NaN when fewer than three non-empty levels
  double intercept = 0.0;
  std::size_t n_lo = 0, n_hi = 0;
  std::size_t points = 0;
  std::vector<std::size_t> trimmed;  // levels in range dropped for a zero count
};

/// Least squares of log N_n against n over n_lo <= n <= n_hi.
SlopeFit ldp_slope(std::span<const LevelBallCount> counts, std::size_t n_lo, std::size_t n_hi);

struct LocalDimension {
  double mean = 0.0;
  double spread = 0.0;  // sample standard deviation
  std::size_t paths = 0;
  double target = 0.0;  // P~(q) - <q, grad P~(q)>
};

/// Mean over paths of -log mu([t|n]) / n; diam([t|n]) = e^{-n}.
LocalDimension local_dimension(std::span<const SampledPath> paths, std::span<const double> q, const ModelSpec& spec);

struct SpectrumConfig {
  std::size_t depth = 20;
  std::size_t n_lo = 12;
  std::size_t n_hi = 20;
  std::vector<double> epsilons{0.05};
  std::size_t paths = 100;
  std::size_t budget = kDefaultNodeBudget;
  std::optional<HistogramGrid> box;  // default: alpha range of the grid padded by 2 max(eps)
  std::size_t threads = 1;
};

struct SpectrumPoint {
  Vec q;
  Vec alpha;
  double epsilon = 0.0;
  SlopeFit fit;
  LocalDimension local;
  double analytic = 0.0;  // P~*(alpha)
  bool in_domain = true;
  std::string flag;
};

struct SpectrumEstimate {
  std::vector<SpectrumPoint> points;
  std::vector<std::string> flags;
  double log_mean_offspring = 0.0;
  bool complete = true;
};

/// For each q of the grid: alpha = grad P~(q), level-set slopes for every
/// epsilon, local dimension from `paths` mu_q-typical lineages, analytic
/// P~*(alpha). Points outside the domain are flagged and skipped.
SpectrumEstimate assemble_spectrum(const ModelSpec& spec, const QGrid& grid, const SpectrumConfig& config,
                                   RngStream& rng);

/// Columns: alpha_0.., epsilon, slope, stderr, local_dim, local_spread,
/// P_tilde_star, n_lo, n_hi, status
void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& est, std::size_t dim);

}  // namespace brwmf
