#include "brwmf/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"
#include "brwmf/parallel.hpp"
#include "brwmf/pressure.hpp"

namespace brwmf {

namespace {

// log mu^(n)([u]) for all nodes of one level and one grid point.
std::vector<double> level_log_mu(const CascadeTable& table, std::size_t level, std::size_t qi) {
  const LevelFrame& frame = table.run().frame(level);
  const Vec& q = table.grid()[qi];
  std::vector<double> out(frame.node_count());
  const auto& k = kernels::active();
  k.affine(frame.path_sum, q, -static_cast<double>(level) * table.log_mgf_at(qi), out);
  k.add_inplace(out, table.log_y(level, qi));
  return out;
}

// Neumaier-compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

std::span<const double> CascadeTable::log_y(std::size_t level, std::size_t qi) const {
  const std::size_t count = run_->frames[level].node_count();
  return {log_y_[level].data() + qi * count, count};
}

CascadeTable build_cascade(const TreeRun& run, const QGrid& grid, const ModelSpec& spec, std::size_t threads) {
  if (!run.materialized()) throw UsageError("cascade requires a materialized tree run");
  if (!run.complete) throw UsageError("cascade requires a complete tree run");
  if (grid.dim() != spec.dim) throw ConfigError("grid dimension does not match the model", "q_grid");

  CascadeTable t;
  t.run_ = &run;
  t.grid_ = grid;
  t.depth_ = run.frames.size() - 1;
  const std::size_t n = t.depth_;
  const std::size_t nq = grid.size();

  t.log_mgf_.resize(nq);
  for (std::size_t qi = 0; qi < nq; ++qi) t.log_mgf_[qi] = log_mgf(spec, grid[qi]);

  t.offsets_.resize(n);
  for (std::size_t k = 0; k < n; ++k) t.offsets_[k] = child_offsets(run.frames[k + 1], run.frames[k].node_count());

  t.log_y_.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t.log_y_[k].assign(nq * run.frames[k].node_count(), 0.0);

  const auto& kern = kernels::active();
  parallel_for(nq, threads, [&](std::size_t qi) {
    const Vec& q = grid[qi];
    std::vector<double> terms;
    for (std::size_t k = n; k-- > 0;) {
      const LevelFrame& children = run.frames[k + 1];
      const std::size_t nc = children.node_count();
      const std::size_t np = run.frames[k].node_count();
      terms.resize(nc);
      kern.affine(children.displacement, q, -t.log_mgf_[qi], terms);
      kern.add_inplace(terms, std::span<const double>(t.log_y_[k + 1].data() + qi * nc, nc));
      double* out = t.log_y_[k].data() + qi * np;
      const auto& off = t.offsets_[k];
      for (std::size_t u = 0; u < np; ++u) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t c = off[u]; c < off[u + 1]; ++c) m = std::max(m, terms[c]);
        double s = 0.0;
        for (std::size_t c = off[u]; c < off[u + 1]; ++c) s += std::exp(terms[c] - m);
        out[u] = m + std::log(s);
      }
    }
  });
  return t;
}

MeasureWeights measure_weights(const CascadeTable& table, std::size_t level) {
  if (level > table.depth()) throw ConfigError("level exceeds cascade depth", "k");
  MeasureWeights w;
  w.level = level;
  w.node_count = table.run().frame(level).node_count();
  w.log_mu.reserve(w.node_count * table.grid().size());
  for (std::size_t qi = 0; qi < table.grid().size(); ++qi) {
    const auto col = level_log_mu(table, level, qi);
    w.log_mu.insert(w.log_mu.end(), col.begin(), col.end());
  }
  return w;
}

CascadeIdentityReport verify_cascade(const CascadeTable& table) {
  CascadeIdentityReport rep;
  const TreeRun& run = table.run();
  const std::size_t n = table.depth();
  const std::size_t d = run.spec.dim;
  for (std::size_t qi = 0; qi < table.grid().size(); ++qi) {
    const Vec& q = table.grid()[qi];
    const double p = table.log_mgf_at(qi);
    const double log_root = table.log_total_mass(qi);
    for (std::size_t k = 0; k <= n; ++k) {
      const LevelFrame& f = run.frames[k];
      const auto ly = table.log_y(k, qi);
      CompensatedSum mass;
      for (std::size_t u = 0; u < f.node_count(); ++u) {
        if (!(std::isfinite(ly[u]))) rep.all_positive = false;
        double qs = 0.0;
        for (std::size_t j = 0; j < d; ++j) qs += q[j] * f.path_sum[j * f.node_count() + u];
        mass.add(std::exp(qs - static_cast<double>(k) * p + ly[u] - log_root));
      }
      rep.max_total_mass_error = std::max(rep.max_total_mass_error, std::fabs(mass.value() - 1.0));
      if (k == n) continue;

      const LevelFrame& ch = run.frames[k + 1];
      const auto lyc = table.log_y(k + 1, qi);
      const auto off = table.child_offsets(k);
      const std::size_t np = f.node_count();
      const std::size_t nc = ch.node_count();
      for (std::size_t u = 0; u < np; ++u) {
        double qs_parent = 0.0;
        for (std::size_t j = 0; j < d; ++j) qs_parent += q[j] * f.path_sum[j * np + u];
        const double log_mu_parent = qs_parent - static_cast<double>(k) * p + ly[u];
        double rec = 0.0;
        double add = 0.0;
        for (std::size_t c = off[u]; c < off[u + 1]; ++c) {
          double qx = 0.0;
          double qs = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            qx += q[j] * ch.displacement[j * nc + c];
            qs += q[j] * ch.path_sum[j * nc + c];
          }
          rec += std::exp(qx - p + lyc[c] - ly[u]);
          add += std::exp(qs - static_cast<double>(k + 1) * p + lyc[c] - log_mu_parent);
        }
        rep.max_recursion_error = std::max(rep.max_recursion_error, std::fabs(rec - 1.0));
        rep.max_additivity_error = std::max(rep.max_additivity_error, std::fabs(add - 1.0));
        ++rep.internal_nodes_checked;
      }
    }
  }
  return rep;
}

SampledPath sample_path(const CascadeTable& table, std::size_t qi, RngStream& rng) {
  const TreeRun& run = table.run();
  const std::size_t n = table.depth();
  const std::size_t d = run.spec.dim;
  const Vec& q = table.grid()[qi];
  const double p = table.log_mgf_at(qi);

  SampledPath path;
  path.dim = d;
  path.nodes.reserve(n + 1);
  path.path_sum.reserve((n + 1) * d);
  std::size_t u = 0;
  auto record = [&](std::size_t k) {
    const LevelFrame& f = run.frames[k];
    const std::size_t count = f.node_count();
    double qs = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      path.path_sum.push_back(f.path_sum[j * count + u]);
      qs += q[j] * f.path_sum[j * count + u];
    }
    const double ly = table.log_y(k, qi)[u];
    path.nodes.push_back(static_cast<std::uint32_t>(u));
    path.log_y.push_back(ly);
    path.log_mu.push_back(qs - static_cast<double>(k) * p + ly);
  };
  record(0);
  for (std::size_t k = 0; k < n; ++k) {
    const LevelFrame& ch = run.frames[k + 1];
    const std::size_t nc = ch.node_count();
    const auto off = table.child_offsets(k);
    const auto lyc = table.log_y(k + 1, qi);
    const double ly = table.log_y(k, qi)[u];
    const double draw = rng.uniform();
    double cdf = 0.0;
    std::size_t pick = off[u + 1] - 1;
    for (std::size_t c = off[u]; c < off[u + 1]; ++c) {
      double qx = 0.0;
      for (std::size_t j = 0; j < d; ++j) qx += q[j] * ch.displacement[j * nc + c];
      cdf += std::exp(qx - p + lyc[c] - ly);
      if (draw < cdf) {
        pick = c;
        break;
      }
    }
    u = pick;
    record(k + 1);
  }
  return path;
}

double L_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda) {
  const std::size_t n = table.depth();
  if (n == 0) throw UsageError("L_n needs a cascade of depth >= 1");
  const LevelFrame& leaves = table.run().frame(n);
  if (lambda.size() != leaves.dim) throw ConfigError("lambda dimension does not match the model", "lambda");
  const auto& k = kernels::active();
  std::vector<double> terms(leaves.node_count());
  k.affine(leaves.path_sum, lambda, 0.0, terms);
  const auto mu = level_log_mu(table, n, qi);
  k.add_inplace(terms, mu);
  return kernels::log_sum_exp(terms, k) / static_cast<double>(n);
}

double L_n(const ModelSpec& spec, const LevelFrame& frame, std::span<const double> q, std::span<const double> lambda) {
  if (frame.depth == 0) throw UsageError("L_n needs a level of depth >= 1");
  const Vec shifted = add(q, lambda);
  return log_partition(frame, shifted) / static_cast<double>(frame.depth) - log_mgf(spec, q);
}

double log_Z_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda) {
  const std::size_t n = table.depth();
  const LevelFrame& leaves = table.run().frame(n);
  if (lambda.size() != leaves.dim) throw ConfigError("lambda dimension does not match the model", "lambda");
  const Vec shifted = add(table.grid()[qi], lambda);
  const auto& k = kernels::active();
  std::vector<double> terms(leaves.node_count());
  k.affine(leaves.path_sum, shifted, -static_cast<double>(n) * log_mgf(table.run().spec, shifted), terms);
  k.add_inplace(terms, table.log_y(n, qi));
  return kernels::log_sum_exp(terms, k);
}

double Z_n(const CascadeTable& table, std::size_t qi, std::span<const double> lambda) {
  return std::exp(log_Z_n(table, qi, lambda));
}

std::vector<ConcentrationRow> concentration_mass(const CascadeTable& table, std::size_t qi, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive", "epsilon");
  const Vec center = grad_log_mgf(table.run().spec, table.grid()[qi]);
  const std::size_t d = center.size();
  std::vector<ConcentrationRow> rows;
  std::vector<double> outside;
  for (std::size_t k = 1; k <= table.depth(); ++k) {
    const LevelFrame& f = table.run().frame(k);
    const std::size_t count = f.node_count();
    const auto mu = level_log_mu(table, k, qi);
    outside.clear();
    for (std::size_t u = 0; u < count; ++u) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = f.path_sum[j * count + u] / static_cast<double>(k) - center[j];
        dist2 += t * t;
      }
      if (std::sqrt(dist2) >= epsilon) outside.push_back(mu[u]);
    }
    ConcentrationRow row;
    row.level = k;
    row.log_mass = kernels::log_sum_exp(outside) - kernels::log_sum_exp(mu);
    row.mass = std::exp(row.log_mass);
    rows.push_back(row);
  }
  return rows;
}

void write_paths_csv(std::ostream& os, std::span<const SampledPath> paths, std::size_t dim, bool header) {
  CsvWriter csv(os);
  if (header) {
    std::vector<std::string> cols{"path", "k"};
    for (std::size_t j = 0; j < dim; ++j) cols.push_back("s_" + std::to_string(j));
    cols.emplace_back("log_mu");
    cols.emplace_back("log_y");
    csv.header(cols);
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const SampledPath& p = paths[i];
    for (std::size_t k = 1; k <= p.depth(); ++k) {
      csv.field(i).field(k);
      for (double v : p.path_sum_at(k)) csv.field(v / static_cast<double>(k));
      csv.field(p.log_mu[k]).field(p.log_y[k]).end_row();
    }
  }
}

}  // namespace brwmf
