#include "brwmf/grid.hpp"

#include <algorithm>
#include <cmath>

#include "brwmf/errors.hpp"

namespace brwmf {

QGrid QGrid::box(Vec lo, Vec hi, std::vector<std::size_t> counts) {
  if (lo.empty() || lo.size() != hi.size() || lo.size() != counts.size()) {
    throw ConfigError("grid box bounds and counts must share one positive dimension", "grid");
  }
  std::size_t total = 1;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j])) throw ConfigError("grid bounds must be finite", "grid");
    if (counts[j] == 0) throw ConfigError("grid needs at least one point per axis", "grid");
    if (counts[j] > 1 && !(hi[j] > lo[j])) throw ConfigError("grid upper bound must exceed lower bound", "grid");
    total *= counts[j];
  }
  QGrid g;
  g.dim_ = lo.size();
  g.points_.reserve(total);
  std::vector<std::size_t> idx(g.dim_, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vec p(g.dim_);
    for (std::size_t j = 0; j < g.dim_; ++j) {
      p[j] = counts[j] == 1 ? lo[j]
                            : lo[j] + (hi[j] - lo[j]) * static_cast<double>(idx[j]) / static_cast<double>(counts[j] - 1);
    }
    g.points_.push_back(std::move(p));
    for (std::size_t j = 0; j < g.dim_; ++j) {
      if (++idx[j] < counts[j]) break;
      idx[j] = 0;
    }
  }
  g.lo_ = std::move(lo);
  g.hi_ = std::move(hi);
  g.counts_ = std::move(counts);
  return g;
}

QGrid QGrid::from_points(std::vector<Vec> points) {
  if (points.empty()) throw ConfigError("grid must contain at least one point", "grid");
  const std::size_t d = points.front().size();
  if (d == 0) throw ConfigError("grid points must have positive dimension", "grid");
  for (const Vec& p : points) {
    if (p.size() != d) throw ConfigError("grid points differ in dimension", "grid");
    for (double v : p) {
      if (!std::isfinite(v)) throw ConfigError("grid points must be finite", "grid");
    }
  }
  std::vector<Vec> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("grid points must be pairwise distinct", "grid");
  }
  QGrid g;
  g.dim_ = d;
  g.points_ = std::move(points);
  return g;
}

Vec QGrid::spacing() const {
  Vec h(dim_, 0.0);
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    if (counts_[j] > 1) h[j] = (hi_[j] - lo_[j]) / static_cast<double>(counts_[j] - 1);
  }
  return h;
}

std::optional<std::size_t> QGrid::neighbor(std::size_t i, std::size_t axis, int step) const {
  if (!is_lattice() || axis >= dim_) return std::nullopt;
  std::size_t stride = 1;
  for (std::size_t j = 0; j < axis; ++j) stride *= counts_[j];
  const std::size_t coord = (i / stride) % counts_[axis];
  const long target = static_cast<long>(coord) + step;
  if (target < 0 || target >= static_cast<long>(counts_[axis])) return std::nullopt;
  return i + static_cast<std::size_t>(target - static_cast<long>(coord)) * stride;
}

}  // namespace brwmf
