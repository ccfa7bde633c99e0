#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "brwmf/vec.hpp"

namespace brwmf {

/// Finite set of parameter points, usually a rectangular lattice over a box.
/// Lattice points are ordered with axis 0 varying fastest.
class QGrid {
 public:
  QGrid() = default;

  /// `counts[j]` points per axis, evenly spaced from lo[j] to hi[j]
  /// inclusive. A single point per axis sits at lo[j].
  static QGrid box(Vec lo, Vec hi, std::vector<std::size_t> counts);
  /// Arbitrary distinct finite points of a common dimension.
  static QGrid from_points(std::vector<Vec> points);

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  const Vec& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Vec>& points() const { return points_; }

  bool is_lattice() const { return !counts_.empty(); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  /// Lattice spacing per axis (0 for single-point axes).
  Vec spacing() const;

  /// Index of the lattice neighbour of point i one step along `axis`, if it
  /// exists.
  std::optional<std::size_t> neighbor(std::size_t i, std::size_t axis, int step) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Vec> points_;
  Vec lo_, hi_;
  std::vector<std::size_t> counts_;
};

}  // namespace brwmf
