#include "brwmf/tree.hpp"

#include <ostream>

#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"

namespace brwmf {

LevelFrame LevelFrame::root(std::size_t dim) {
  LevelFrame f;
  f.depth = 0;
  f.dim = dim;
  f.path_sum.assign(dim, 0.0);
  f.displacement.assign(dim, 0.0);
  return f;
}

Vec LevelFrame::path_sum_at(std::size_t u) const {
  Vec v(dim);
  const std::size_t n = node_count();
  for (std::size_t j = 0; j < dim; ++j) v[j] = path_sum[j * n + u];
  return v;
}

Vec LevelFrame::displacement_at(std::size_t u) const {
  Vec v(dim);
  const std::size_t n = node_count();
  for (std::size_t j = 0; j < dim; ++j) v[j] = displacement[j * n + u];
  return v;
}

std::vector<std::size_t> child_offsets(const LevelFrame& children, std::size_t parent_count) {
  std::vector<std::size_t> offsets(parent_count + 1, 0);
  for (std::uint32_t p : children.parent_index) ++offsets[p + 1];
  for (std::size_t p = 0; p < parent_count; ++p) offsets[p + 1] += offsets[p];
  return offsets;
}

LevelFrame grow_level(const ModelSpec& spec, const LevelFrame& frame, RngStream& rng, std::size_t budget) {
  const std::size_t d = spec.dim;
  const std::size_t parents = frame.node_count();
  const std::size_t level = frame.depth + 1;

  std::vector<double> rows;  // row-major children x d
  std::vector<std::uint32_t> parent_of;
  rows.reserve(parents * 2 * d);
  parent_of.reserve(parents * 2);
  for (std::size_t u = 0; u < parents; ++u) {
    const std::size_t born = append_offspring(spec, rng, rows);
    if (parent_of.size() + born > budget) throw BudgetExceeded(level, budget);
    parent_of.insert(parent_of.end(), born, static_cast<std::uint32_t>(u));
  }

  LevelFrame next;
  next.depth = level;
  next.dim = d;
  const std::size_t n = parent_of.size();
  next.parent_index = std::move(parent_of);
  next.displacement.resize(n * d);
  next.path_sum.resize(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double* parent_col = frame.path_sum.data() + j * parents;
    double* disp = next.displacement.data() + j * n;
    double* sum = next.path_sum.data() + j * n;
    for (std::size_t c = 0; c < n; ++c) {
      disp[c] = rows[c * d + j];
      sum[c] = parent_col[next.parent_index[c]] + disp[c];
    }
  }
  return next;
}

const LevelFrame& TreeRun::frame(std::size_t k) const {
  if (!materialized()) throw UsageError("tree run was streamed; only the last frame is retained");
  if (k >= frames.size()) throw UsageError("frame " + std::to_string(k) + " was not generated");
  return frames[k];
}

TreeRun run_to_depth(const ModelSpec& spec, std::size_t n, GrowthMode mode, std::size_t budget, RngStream& rng,
                     std::span<const LevelSink> sinks) {
  spec.validate();
  TreeRun run;
  run.spec = spec;
  run.max_depth = n;
  run.mode = mode;
  run.stream_key = rng.key();
  run.frames.push_back(LevelFrame::root(spec.dim));
  for (const auto& sink : sinks) sink(run.frames.back());
  for (std::size_t k = 1; k <= n; ++k) {
    LevelFrame next;
    try {
      next = grow_level(spec, run.frames.back(), rng, budget);
    } catch (const BudgetExceeded& e) {
      run.complete = false;
      run.failure = e.what();
      return run;
    }
    if (mode == GrowthMode::Materialize) {
      run.frames.push_back(std::move(next));
    } else {
      run.frames.back() = std::move(next);
    }
    run.deepest_level = k;
    for (const auto& sink : sinks) sink(run.frames.back());
  }
  return run;
}

void write_frame_csv(std::ostream& os, const LevelFrame& frame, bool header) {
  CsvWriter csv(os);
  if (header) {
    std::vector<std::string> cols{"level", "node_index", "parent_index"};
    for (std::size_t j = 0; j < frame.dim; ++j) cols.push_back("S_" + std::to_string(j));
    csv.header(cols);
  }
  const std::size_t n = frame.node_count();
  for (std::size_t u = 0; u < n; ++u) {
    csv.field(frame.depth).field(u);
    if (frame.parent_index.empty()) {
      csv.field(-1);
    } else {
      csv.field(static_cast<std::size_t>(frame.parent_index[u]));
    }
    for (std::size_t j = 0; j < frame.dim; ++j) csv.field(frame.path_sum[j * n + u]);
    csv.end_row();
  }
}

}  // namespace brwmf
