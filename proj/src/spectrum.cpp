#include "brwmf/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"
#include "brwmf/pressure.hpp"

namespace brwmf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

HistogramGrid HistogramGrid::for_epsilon(Vec lo, Vec hi, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive", "epsilon");
  if (lo.size() != hi.size() || lo.empty()) throw ConfigError("histogram box is malformed", "alpha_grid");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(hi[j] > lo[j])) throw ConfigError("histogram box upper bound must exceed lower bound", "alpha_grid");
  }
  return HistogramGrid{std::move(lo), std::move(hi), 0.5 * epsilon};
}

std::vector<std::size_t> HistogramGrid::bins_per_axis() const {
  std::vector<std::size_t> b(lo.size());
  for (std::size_t j = 0; j < lo.size(); ++j) {
    b[j] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi[j] - lo[j]) / width)));
  }
  return b;
}

LevelHistogram accumulate_histogram(const LevelFrame& frame, const HistogramGrid& grid) {
  if (frame.depth == 0) throw UsageError("histograms need a level of depth >= 1");
  if (grid.lo.size() != frame.dim) throw ConfigError("histogram box dimension does not match the tree", "alpha_grid");
  LevelHistogram h;
  h.level = frame.depth;
  h.dim = frame.dim;
  h.grid = grid;
  h.bins_per_axis = grid.bins_per_axis();
  std::size_t nbins = 1;
  for (std::size_t b : h.bins_per_axis) nbins *= b;
  h.counts.assign(nbins, 0);

  const std::size_t count = frame.node_count();
  const double inv_n = 1.0 / static_cast<double>(frame.depth);
  std::vector<std::size_t> bin_of(count);
  for (std::size_t u = 0; u < count; ++u) {
    std::size_t index = 0;
    std::size_t stride = 1;
    bool inside = true;
    for (std::size_t j = 0; j < frame.dim; ++j) {
      const double a = frame.path_sum[j * count + u] * inv_n;
      double pos = std::floor((a - grid.lo[j]) / grid.width);
      // The box is closed: a value on the upper face belongs to the last bin.
      if (pos >= static_cast<double>(h.bins_per_axis[j]) && a <= grid.hi[j]) pos -= 1.0;
      if (!(pos >= 0.0) || pos >= static_cast<double>(h.bins_per_axis[j])) {
        inside = false;
        break;
      }
      index += static_cast<std::size_t>(pos) * stride;
      stride *= h.bins_per_axis[j];
    }
    bin_of[u] = inside ? index : nbins;
    if (inside) {
      ++h.counts[index];
    } else {
      ++h.overflow;
    }
  }
  h.total = count;

  h.member_offsets.assign(nbins + 2, 0);
  for (std::size_t u = 0; u < count; ++u) ++h.member_offsets[bin_of[u] + 1];
  for (std::size_t b = 0; b <= nbins; ++b) h.member_offsets[b + 1] += h.member_offsets[b];
  h.members.resize(count);
  std::vector<std::size_t> cursor(h.member_offsets.begin(), h.member_offsets.end() - 1);
  for (std::size_t u = 0; u < count; ++u) h.members[cursor[bin_of[u]]++] = static_cast<std::uint32_t>(u);
  return h;
}

std::uint64_t ball_count(const LevelHistogram& hist, const LevelFrame& frame, std::span<const double> alpha,
                         double epsilon) {
  if (frame.depth != hist.level || frame.node_count() != hist.total) {
    throw UsageError("histogram and frame do not describe the same level");
  }
  if (alpha.size() != hist.dim) throw ConfigError("alpha dimension does not match the histogram", "alpha");
  const std::size_t d = hist.dim;
  const std::size_t count = frame.node_count();
  const double inv_n = 1.0 / static_cast<double>(frame.depth);
  // Guard band: bin assignment is floating-point, so only bins clearly inside
  // (or outside) the ball are decided without looking at their nodes.
  const double margin = 1e-9 * (1.0 + epsilon);

  auto node_inside = [&](std::uint32_t u) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = frame.path_sum[j * count + u] * inv_n - alpha[j];
      s += t * t;
    }
    return std::sqrt(s) <= epsilon;
  };
  auto retest = [&](std::size_t block) {
    std::uint64_t c = 0;
    for (std::size_t i = hist.member_offsets[block]; i < hist.member_offsets[block + 1]; ++i) {
      c += node_inside(hist.members[i]) ? 1 : 0;
    }
    return c;
  };

  std::uint64_t total = 0;
  const std::size_t nbins = hist.counts.size();
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t b = 0; b < nbins; ++b) {
    if (hist.counts[b] != 0) {
      double near2 = 0.0, far2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double a = hist.grid.lo[j] + hist.grid.width * static_cast<double>(idx[j]);
        const double c = a + hist.grid.width;
        const double near = std::max({a - alpha[j], 0.0, alpha[j] - c});
        const double far = std::max(std::fabs(alpha[j] - a), std::fabs(alpha[j] - c));
        near2 += near * near;
        far2 += far * far;
      }
      if (std::sqrt(far2) <= epsilon - margin) {
        total += hist.counts[b];
      } else if (std::sqrt(near2) <= epsilon + margin) {
        total += retest(b);
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < hist.bins_per_axis[j]) break;
      idx[j] = 0;
    }
  }
  return total + retest(nbins);
}

BallCounter::BallCounter(HistogramGrid grid, std::vector<BallQuery> queries)
    : grid_(std::move(grid)), queries_(std::move(queries)), series_(queries_.size()) {}

void BallCounter::operator()(const LevelFrame& frame) {
  if (frame.depth == 0) return;
  const LevelHistogram h = accumulate_histogram(frame, grid_);
  for (std::size_t i = 0; i < queries_.size(); ++i) {
    series_[i].push_back({frame.depth, ball_count(h, frame, queries_[i].alpha, queries_[i].epsilon)});
  }
}

SlopeFit ldp_slope(std::span<const LevelBallCount> counts, std::size_t n_lo, std::size_t n_hi) {
  if (n_lo > n_hi) throw ConfigError("n_range must satisfy n_lo <= n_hi", "n_range");
  SlopeFit fit;
  fit.n_lo = n_lo;
  fit.n_hi = n_hi;
  std::vector<double> xs, ys;
  for (const auto& c : counts) {
    if (c.level < n_lo || c.level > n_hi) continue;
    if (c.count == 0) {
      fit.trimmed.push_back(c.level);
      continue;
    }
    xs.push_back(static_cast<double>(c.level));
    ys.push_back(std::log(static_cast<double>(c.count)));
  }
  fit.points = xs.size();
  if (xs.empty()) {
    fit.empty_phase = true;
    fit.slope = fit.std_error = fit.intercept = kNaN;
    return fit;
  }
  if (xs.size() < 2) {
    fit.slope = fit.std_error = kNaN;
    fit.intercept = ys[0];
    return fit;
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (xs.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - fit.intercept - fit.slope * xs[i];
      sse += r * r;
    }
    fit.std_error = std::sqrt(sse / (m - 2.0) / sxx);
  } else {
    fit.std_error = kNaN;
  }
  return fit;
}

LocalDimension local_dimension(std::span<const SampledPath> paths, std::span<const double> q, const ModelSpec& spec) {
  LocalDimension ld;
  ld.paths = paths.size();
  ld.target = log_mgf(spec, q) - dot(q, grad_log_mgf(spec, q));
  if (paths.empty()) {
    ld.mean = ld.spread = kNaN;
    return ld;
  }
  std::vector<double> r;
  r.reserve(paths.size());
  for (const auto& p : paths) {
    const std::size_t n = p.depth();
    if (n == 0) throw UsageError("local dimension needs paths of depth >= 1");
    r.push_back(-p.log_mu[n] / static_cast<double>(n));
  }
  double s = 0.0;
  for (double v : r) s += v;
  ld.mean = s / static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - ld.mean) * (v - ld.mean);
  ld.spread = r.size() > 1 ? std::sqrt(ss / static_cast<double>(r.size() - 1)) : 0.0;
  return ld;
}

SpectrumEstimate assemble_spectrum(const ModelSpec& spec, const QGrid& grid, const SpectrumConfig& config,
                                   RngStream& rng) {
  if (config.epsilons.empty()) throw ConfigError("at least one epsilon is required", "epsilon");
  if (config.depth < 1) throw ConfigError("depth must be >= 1", "depth");
  SpectrumEstimate est;
  est.log_mean_offspring = std::log(spec.mean_offspring());

  const DomainScan scan = domain_scan(spec, grid, std::array{1.5, 2.0});
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (scan.in_calJ[i]) {
      usable.push_back(i);
    } else {
      est.flags.push_back("q point " + std::to_string(i) + " lies outside the domain; skipped");
    }
  }

  const double eps_max = *std::max_element(config.epsilons.begin(), config.epsilons.end());
  const double eps_min = *std::min_element(config.epsilons.begin(), config.epsilons.end());
  HistogramGrid box;
  if (config.box) {
    box = *config.box;
  } else {
    Vec lo(spec.dim, std::numeric_limits<double>::infinity());
    Vec hi(spec.dim, -std::numeric_limits<double>::infinity());
    for (std::size_t i : usable) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        lo[j] = std::min(lo[j], scan.alpha_image[i][j]);
        hi[j] = std::max(hi[j], scan.alpha_image[i][j]);
      }
    }
    if (usable.empty()) {
      lo.assign(spec.dim, -1.0);
      hi.assign(spec.dim, 1.0);
    }
    for (std::size_t j = 0; j < spec.dim; ++j) {
      lo[j] -= 2.0 * eps_max;
      hi[j] += 2.0 * eps_max;
    }
    box = HistogramGrid::for_epsilon(std::move(lo), std::move(hi), eps_min);
  }

  std::vector<BallQuery> queries;
  for (std::size_t i : usable) {
    for (double eps : config.epsilons) queries.push_back({scan.alpha_image[i], eps});
  }
  BallCounter counter(box, queries);
  const LevelSink sinks[] = {[&counter](const LevelFrame& f) { counter(f); }};
  const TreeRun run = run_to_depth(spec, config.depth, GrowthMode::Materialize, config.budget, rng, sinks);
  if (!run.complete) {
    est.complete = false;
    est.flags.push_back(run.failure);
  }

  std::size_t query = 0;
  for (std::size_t i : usable) {
    const Vec& q = grid[i];
    LocalDimension local;
    if (run.complete) {
      const CascadeTable table = build_cascade(run, QGrid::from_points({q}), spec, config.threads);
      std::vector<SampledPath> paths;
      RngStream path_rng = rng.substream(1 + i);
      for (std::size_t p = 0; p < config.paths; ++p) paths.push_back(sample_path(table, 0, path_rng));
      local = local_dimension(paths, q, spec);
    } else {
      local.mean = local.spread = kNaN;
      local.target = log_mgf(spec, q) - dot(q, grad_log_mgf(spec, q));
    }
    for (double eps : config.epsilons) {
      SpectrumPoint pt;
      pt.q = q;
      pt.alpha = scan.alpha_image[i];
      pt.epsilon = eps;
      pt.fit = ldp_slope(counter.series(query++), config.n_lo, config.n_hi);
      pt.local = local;
      pt.analytic = log_mgf(spec, q) - dot(q, pt.alpha);
      if (pt.fit.empty_phase) {
        pt.flag = "empty_phase";
      } else if (std::isnan(pt.fit.slope)) {
        pt.flag = "insufficient_levels";
      } else {
        pt.flag = "ok";
      }
      if (!pt.fit.trimmed.empty()) {
        est.flags.push_back("alpha from q point " + std::to_string(i) + ", eps " + std::to_string(eps) + ": " +
                            std::to_string(pt.fit.trimmed.size()) + " empty level(s) trimmed from the fit");
      }
      est.points.push_back(std::move(pt));
    }
  }
  return est;
}

void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& est, std::size_t dim) {
  CsvWriter csv(os);
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < dim; ++j) cols.push_back("alpha_" + std::to_string(j));
  for (const char* c : {"epsilon", "slope", "stderr", "local_dim", "local_spread", "P_tilde_star", "n_lo", "n_hi",
                        "status"}) {
    cols.emplace_back(c);
  }
  csv.header(cols);
  for (const auto& p : est.points) {
    for (double v : p.alpha) csv.field(v);
    csv.field(p.epsilon).field(p.fit.slope).field(p.fit.std_error).field(p.local.mean).field(p.local.spread);
    csv.field(p.analytic).field(p.fit.n_lo).field(p.fit.n_hi).field(std::string_view(p.flag)).end_row();
  }
}

}  // namespace brwmf
