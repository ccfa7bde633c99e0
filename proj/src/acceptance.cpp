#include "brwmf/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "brwmf/cascade.hpp"
#include "brwmf/config.hpp"
#include "brwmf/experiment.hpp"
#include "brwmf/legendre.hpp"
#include "brwmf/pressure.hpp"
#include "brwmf/spectrum.hpp"

namespace brwmf {

namespace {

namespace fs = std::filesystem;

// Closed forms written out independently of the model module.
double rad_P(double q) { return std::log(2.0) + std::log(std::cosh(q)); }
double rad_grad(double q) { return std::tanh(q); }
double rad_conj(double a) {
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return std::log(2.0) - (xlogx(1.0 + a) + xlogx(1.0 - a)) / 2.0;
}
double spg_P(const ModelSpec& s, std::span<const double> q) {
  double qm = 0.0, qq = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    qm += q[j] * s.mean[j];
    qq += q[j] * q[j];
  }
  return std::log(1.0 + s.lambda) + qm + 0.5 * s.sigma * s.sigma * qq;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<Vec> line_points(Vec dir, double lo, double hi, std::size_t count) {
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    pts.push_back(scaled(dir, t));
  }
  return pts;
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

// --- 1: cascade identities ------------------------------------------------

Outcome identities(const AcceptanceOptions& o) {
  struct Case {
    const char* label;
    ModelSpec spec;
    std::vector<Vec> qs;
  };
  const Case cases[] = {
      {"rademacher", ModelSpec::binary_rademacher(1), line_points({1.0}, -1.0, 1.0, 11)},
      {"poisson_gaussian", ModelSpec::shifted_poisson_gaussian(1.0, {0.5, -0.25}, 1.5),
       line_points({1.0, -0.5}, -1.0, 1.0, 11)},
  };
  Outcome out{true, {}};
  for (std::size_t c = 0; c < std::size(cases); ++c) {
    const auto& cs = cases[c];
    RngStream rng(o.master_seed, 100 + c);
    const TreeRun run = run_to_depth(cs.spec, 12, GrowthMode::Materialize, kDefaultNodeBudget, rng);
    const QGrid grid = QGrid::from_points(cs.qs);
    const CascadeTable table = build_cascade(run, grid, cs.spec, o.threads);
    const CascadeIdentityReport rep = verify_cascade(table);

    // Forward definition at the root: Y_n = sum over leaves of exp(<q,S_n> - n P~).
    double forward = 0.0;
    const LevelFrame& leaves = run.frame(12);
    for (std::size_t qi = 0; qi < grid.size(); ++qi) {
      long double acc = 0.0L;
      const double pt = cs.spec.family == Family::BinaryRademacher ? rad_P(grid[qi][0]) : spg_P(cs.spec, grid[qi]);
      for (std::size_t u = 0; u < leaves.node_count(); ++u) {
        const Vec s = leaves.path_sum_at(u);
        acc += std::exp(static_cast<long double>(dot(grid[qi], s) - 12.0 * pt));
      }
      const double y = std::exp(table.log_total_mass(qi));
      forward = std::max(forward, std::fabs(y / static_cast<double>(acc) - 1.0));
    }
    const bool ok = rep.max_recursion_error <= 1e-12 && rep.max_additivity_error <= 1e-12 && rep.all_positive &&
                    forward <= 1e-12;
    out.passed = out.passed && ok;
    out.detail += std::string(cs.label) + ": recursion " + fmt(rep.max_recursion_error) + ", additivity " +
                  fmt(rep.max_additivity_error) + ", root vs forward sum " + fmt(forward) + ", nodes " +
                  std::to_string(rep.internal_nodes_checked) + "; ";
  }
  return out;
}

// --- 2: martingale mean ---------------------------------------------------

Outcome martingale_mean(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  const std::size_t replicas = 2000, n = 10;
  const Vec q{1.0};
  std::vector<double> y(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(o.master_seed, 200'000 + r);
    const LevelSink sinks[] = {[&](const LevelFrame& f) {
      if (f.depth == n) y[r] = std::exp(log_partition(f, q) - static_cast<double>(n) * rad_P(1.0));
    }};
    run_to_depth(spec, n, GrowthMode::Stream, kDefaultNodeBudget, rng, sinks);
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(replicas - 1);
  const double se = std::sqrt(var / static_cast<double>(replicas));
  const double z = std::fabs(mean - 1.0) / se;
  return {z <= 3.0, "mean " + fmt(mean) + ", standard error " + fmt(se) + ", |z| " + fmt(z)};
}

// --- 3: pressure convergence ---------------------------------------------

Outcome pressure_convergence(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  const QGrid grid = QGrid::box({-1.0}, {1.0}, {21});
  double gap20 = 0.0, upper = -INFINITY;
  RngStream rng(o.master_seed, 300);
  const LevelSink sinks[] = {[&](const LevelFrame& f) {
    if (f.depth < 15) return;
    for (const Vec& q : grid.points()) {
      const double d = empirical_pressure(f, q) - rad_P(q[0]);
      upper = std::max(upper, d);
      if (f.depth == 20) gap20 = std::max(gap20, std::fabs(d));
    }
  }};
  run_to_depth(spec, 20, GrowthMode::Stream, kDefaultNodeBudget, rng, sinks);
  return {gap20 <= 0.05 && upper <= 0.1, "max |P_20 - P~| " + fmt(gap20) + ", max (P_n - P~) over n >= 15 " + fmt(upper)};
}

// --- 4: conjugate duality -------------------------------------------------

Outcome duality(const AcceptanceOptions&) {
  double eq = 0.0, rt = 0.0;
  {
    const ModelSpec spec = ModelSpec::binary_rademacher(1);
    for (const Vec& q : line_points({1.0}, -2.0, 2.0, 21)) {
      const double a = rad_grad(q[0]);
      const ConjugatePoint cp = conjugate(spec, Vec{a});
      eq = std::max(eq, std::fabs(cp.value + q[0] * a - rad_P(q[0])));
      eq = std::max(eq, std::fabs(cp.value - rad_conj(a)));
      rt = std::max(rt, std::fabs(cp.q_star[0] - q[0]));
      if (!cp.converged) rt = INFINITY;
    }
  }
  {
    const ModelSpec spec = ModelSpec::shifted_poisson_gaussian(1.0, {0.5, -0.25}, 1.5);
    const double s2 = spec.sigma * spec.sigma;
    for (const Vec& q : line_points({1.0, -0.5}, -2.0, 2.0, 21)) {
      const Vec a{spec.mean[0] + s2 * q[0], spec.mean[1] + s2 * q[1]};
      const ConjugatePoint cp = conjugate(spec, a);
      eq = std::max(eq, std::fabs(cp.value + dot(q, a) - spg_P(spec, q)));
      rt = std::max(rt, distance(cp.q_star, q));
      if (!cp.converged) rt = INFINITY;
    }
  }
  return {eq <= 1e-8 && rt <= 1e-6, "max duality residual " + fmt(eq) + ", max round-trip error " + fmt(rt)};
}

// --- 5: cascade surrogate L_n ---------------------------------------------

Outcome surrogate(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  RngStream rng(o.master_seed, 500);
  const TreeRun run = run_to_depth(spec, 20, GrowthMode::Materialize, kDefaultNodeBudget, rng);
  const QGrid grid = QGrid::box({0.0}, {0.4}, {5});
  const CascadeTable table = build_cascade(run, grid, spec, o.threads);
  double max20 = 0.0, max10 = 0.0;
  for (std::size_t qi = 0; qi < grid.size(); ++qi) {
    const double q = grid[qi][0];
    for (std::size_t li = 0; li < 5; ++li) {
      const double l = -0.2 + 0.1 * static_cast<double>(li);
      const double target = rad_P(q + l) - rad_P(q);
      max20 = std::max(max20, std::fabs(L_n(table, qi, Vec{l}) - target));
      max10 = std::max(max10, std::fabs(L_n(spec, run.frame(10), grid[qi], Vec{l}) - target));
    }
  }
  return {max20 <= 0.05 && max20 < max10, "max gap n=20 " + fmt(max20) + ", n=10 " + fmt(max10)};
}

// --- 6: level-set slope ---------------------------------------------------

Outcome ldp(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  const double eps = 0.05;
  const std::vector<double> alphas{0.0, 0.5};
  std::vector<BallQuery> queries;
  for (double a : alphas) queries.push_back({Vec{a}, eps});
  BallCounter counter(HistogramGrid::for_epsilon({-1.0}, {1.0}, eps), queries);
  RngStream rng(o.master_seed, 600);
  const LevelSink sinks[] = {std::ref(counter)};
  run_to_depth(spec, 20, GrowthMode::Stream, kDefaultNodeBudget, rng, sinks);
  Outcome out{true, {}};
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const SlopeFit fit = ldp_slope(counter.series(i), 12, 20);
    const ConjugatePoint cp = conjugate(spec, Vec{alphas[i]});
    const bool ok = std::isfinite(fit.slope) && std::fabs(fit.slope - cp.value) <= 0.1 &&
                    std::fabs(cp.value - rad_conj(alphas[i])) <= 1e-8;
    out.passed = out.passed && ok;
    out.detail += "alpha " + fmt(alphas[i]) + ": slope " + fmt(fit.slope) + " target " + fmt(cp.value) + " (" +
                  std::to_string(fit.points) + " levels); ";
  }
  return out;
}

// --- 7: local dimension ---------------------------------------------------

Outcome local_dim(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  const std::size_t n = 18, k = 9;
  RngStream rng(o.master_seed, 700);
  const TreeRun run = run_to_depth(spec, n, GrowthMode::Materialize, kDefaultNodeBudget, rng);
  const QGrid grid = QGrid::from_points({Vec{0.5}});
  const CascadeTable table = build_cascade(run, grid, spec, o.threads);
  RngStream path_rng = rng.substream(1);
  std::vector<SampledPath> paths;
  double y_term = 0.0;
  for (int p = 0; p < 100; ++p) {
    paths.push_back(sample_path(table, 0, path_rng));
    y_term += std::fabs(paths.back().log_y[k]) / static_cast<double>(k);
  }
  y_term /= 100.0;
  const LocalDimension ld = local_dimension(paths, Vec{0.5}, spec);
  const double target = rad_conj(rad_grad(0.5));
  return {std::fabs(ld.mean - target) <= 0.1 && y_term <= 0.1,
          "local dimension " + fmt(ld.mean) + " target " + fmt(target) + ", mean |log Y|/k at k=9 " + fmt(y_term)};
}

// --- 8: concentration ----------------------------------------------------

Outcome concentration(const AcceptanceOptions& o) {
  const ModelSpec spec = ModelSpec::binary_rademacher(1);
  const std::size_t n = 20;
  const double q = 0.5, eps = 0.2;
  RngStream rng(o.master_seed, 800);
  const TreeRun run = run_to_depth(spec, n, GrowthMode::Materialize, kDefaultNodeBudget, rng);
  const CascadeTable table = build_cascade(run, QGrid::from_points({Vec{q}}), spec, o.threads);
  const auto rows = concentration_mass(table, 0, eps);
  const double rate = rows.back().log_mass / static_cast<double>(n);
  const RateGap gap = rate_gap(spec, Vec{q}, Vec{rad_grad(q)}, eps);
  // Oracle: sup of the shifted rate over the two sphere points.
  double oracle = -INFINITY;
  for (double a : {rad_grad(q) - eps, rad_grad(q) + eps}) oracle = std::max(oracle, rad_conj(a) - rad_P(q) + q * a);
  const bool ok = rate < 0.0 && rate <= gap.value / 2.0 + 0.1 && std::fabs(gap.value - oracle) <= 1e-8;
  return {ok, "(1/n) log mass outside " + fmt(rate) + ", rate gap " + fmt(gap.value) + " (closed form " + fmt(oracle) +
                  ")"};
}

// --- 9: domain geometry ---------------------------------------------------

Outcome domain_geometry(const AcceptanceOptions&) {
  const ModelSpec spec = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0);
  const QGrid grid = QGrid::box({-2.0, -2.0}, {2.0, 2.0}, {41, 41});
  const std::vector<double> gammas{1.5, 2.0};
  const DomainScan scan = domain_scan(spec, grid, gammas);
  const double radius = std::sqrt(2.0 * std::log(2.0));
  const double cell = 0.1 * std::sqrt(2.0);
  std::size_t mismatches = 0, far_mismatches = 0, inside = 0, bad_phi = 0, bad_slope = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = norm(grid[i]);
    if (scan.in_J[i] != (r < radius)) {
      ++mismatches;
      if (std::fabs(r - radius) > cell) ++far_mismatches;
    }
    if (!scan.in_calJ[i]) continue;
    ++inside;
    if (phi(spec, 1.0, grid[i]) != 1.0) ++bad_phi;
    const double h = 1e-4;
    if (!((phi(spec, 1.0 + h, grid[i]) - 1.0) / h < 0.0)) ++bad_slope;
  }
  return {far_mismatches == 0 && bad_phi == 0 && bad_slope == 0 && inside > 0,
          "boundary mismatches " + std::to_string(mismatches) + " (beyond one cell " + std::to_string(far_mismatches) +
              "), interior points " + std::to_string(inside) + ", phi(1,q) != 1 at " + std::to_string(bad_phi) +
              ", non-negative slope at " + std::to_string(bad_slope)};
}

// --- 10: determinism across thread counts ---------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const AcceptanceOptions& o) {
  const ExperimentKind kinds[] = {ExperimentKind::Domains, ExperimentKind::Pressure, ExperimentKind::Cascade,
                                  ExperimentKind::Spectrum};
  std::size_t compared = 0, differing = 0;
  for (auto kind : kinds) {
    ExperimentConfig c;
    c.kind = kind;
    c.model = ModelSpec::binary_rademacher(1);
    c.depth = 12;
    c.replicas = 3;
    c.master_seed = o.master_seed;
    c.q_grid = GridBlock{{-1.0}, {1.0}, {5}};
    c.lambda_grid = GridBlock{{-0.2}, {0.2}, {3}};
    c.epsilons = {0.05, 0.1};
    c.check_epsilon = 0.05;
    c.n_lo = 6;
    c.n_hi = 12;
    c.paths = 20;
    std::vector<fs::path> dirs;
    for (std::size_t threads : {std::size_t{1}, std::size_t{8}}) {
      c.threads = threads;
      c.output_dir = o.scratch_dir / (std::string(kind_name(kind)) + "_t" + std::to_string(threads));
      fs::remove_all(c.output_dir);
      run_experiment(c);
      dirs.push_back(c.output_dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(entry.path()) != slurp(dirs[1] / entry.path().filename())) ++differing;
    }
  }
  fs::remove_all(o.scratch_dir);
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

struct Criterion {
  const char* name;
  double limit;
  Outcome (*run)(const AcceptanceOptions&);
};

constexpr Criterion kCriteria[kCriterionCount] = {
    {"cascade identities", 10.0, identities},
    {"martingale mean", 30.0, martingale_mean},
    {"pressure convergence", 60.0, pressure_convergence},
    {"legendre duality", 5.0, duality},
    {"L_n surrogate", 60.0, surrogate},
    {"level-set slope", 120.0, ldp},
    {"local dimension", 60.0, local_dim},
    {"concentration", 60.0, concentration},
    {"domain geometry", 10.0, domain_geometry},
    {"determinism", 0.0, determinism},
};

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  if (id < 1 || id > kCriterionCount) throw std::out_of_range("criterion id " + std::to_string(id));
  const Criterion& c = kCriteria[id - 1];
  CriterionResult r;
  r.id = id;
  r.name = c.name;
  r.runtime_limit_seconds = c.limit;
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = c.run(options);
  } catch (const std::exception& e) {
    out = {false, std::string("error: ") + e.what()};
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.passed = out.passed && (c.limit == 0.0 || r.runtime_seconds < c.limit);
  r.detail = out.detail;
  if (c.limit > 0.0 && r.runtime_seconds >= c.limit) r.detail += " [runtime limit exceeded]";
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  std::vector<CriterionResult> results;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    results.push_back(run_criterion(id, options));
  }
  return results;
}

}  // namespace brwmf
