#include "brwmf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "brwmf/acceptance.hpp"
#include "brwmf/cascade.hpp"
#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"
#include "brwmf/legendre.hpp"
#include "brwmf/parallel.hpp"
#include "brwmf/pressure.hpp"
#include "brwmf/spectrum.hpp"

#ifndef BRWMF_VERSION
#define BRWMF_VERSION "0.0.0"
#endif

namespace brwmf {

namespace fs = std::filesystem;
using nlohmann::json;

bool RunManifest::passed() const {
  return complete && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string toolkit_version() { return BRWMF_VERSION; }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Results of one replica, merged into the manifest in replica order.
struct ReplicaOutcome {
  std::vector<std::string> outputs;
  std::vector<std::string> flagged;
  bool complete = true;
};

std::string numbered(const std::string& stem, std::size_t r, const char* ext = ".csv") {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_r%03zu", r);
  return stem + buf + ext;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

void add_check(RunManifest& m, std::string name, double value, double threshold, bool passed,
               std::string detail = {}) {
  m.checks.push_back({std::move(name), passed, value, threshold, std::move(detail)});
}

void merge(RunManifest& m, std::vector<ReplicaOutcome>& outcomes) {
  for (auto& o : outcomes) {
    m.outputs.insert(m.outputs.end(), o.outputs.begin(), o.outputs.end());
    m.flagged.insert(m.flagged.end(), o.flagged.begin(), o.flagged.end());
    m.complete = m.complete && o.complete;
  }
}

std::vector<Vec> lambda_points(const ExperimentConfig& c) {
  if (c.lambda_grid) return c.lambda_grid->to_grid().points();
  return {Vec(c.model.dim, 0.0)};
}

void run_domains(const ExperimentConfig& c, RunManifest& m) {
  const ModelSpec& spec = c.model;
  const QGrid grid = c.q_grid.to_grid();
  const DomainScan scan = domain_scan(spec, grid, c.gamma_probe);
  {
    std::ostringstream os;
    write_domain_csv(os, scan);
    write_text(c.output_dir / "domains.csv", os.str());
    m.outputs.push_back("domains.csv");
  }

  double phi_one_err = 0.0;
  double worst_slope = -kInf;
  std::vector<Vec> inside;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    phi_one_err = std::max(phi_one_err, std::fabs(phi(spec, 1.0, grid[i]) - 1.0));
    if (!scan.in_calJ[i]) continue;
    inside.push_back(grid[i]);
    const double h = 1e-4;
    worst_slope = std::max(worst_slope, (phi(spec, 1.0 + h, grid[i]) - phi(spec, 1.0, grid[i])) / h);
  }
  add_check(m, "domains.phi_at_one", phi_one_err, 0.0, phi_one_err == 0.0);
  if (!inside.empty()) {
    add_check(m, "domains.phi_slope_negative", worst_slope, 0.0, worst_slope < 0.0);
    try {
      const double pk = find_pK(spec, QGrid::from_points(inside));
      add_check(m, "domains.p_K_feasible", pk, 1.0, pk > 1.0 && pk <= 2.0);
    } catch (const InfeasibleGrid& e) {
      m.flagged.push_back(std::string("p_K: ") + e.what());
    }
  } else {
    m.flagged.push_back("no q grid point lies in the domain");
  }

  // Conjugate curve over the alpha grid (default: gradient image of the q grid).
  std::vector<Vec> alphas;
  if (c.alpha_grid) {
    alphas = c.alpha_grid->to_grid().points();
  } else {
    for (const Vec& q : grid.points()) alphas.push_back(grad_log_mgf(spec, q));
  }
  const auto curve = spectrum_curve(spec, alphas);
  {
    std::ostringstream os;
    write_conjugate_csv(os, curve, spec.dim);
    write_text(c.output_dir / "legendre.csv", os.str());
    m.outputs.push_back("legendre.csv");
  }
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!curve[i].converged) m.flagged.push_back("legendre: alpha point " + std::to_string(i) + " did not converge");
  }

  // Fenchel equality and gradient inversion at the gradient image of the grid.
  double duality = 0.0, roundtrip = 0.0;
  for (const Vec& q : grid.points()) {
    const Vec a = grad_log_mgf(spec, q);
    const ConjugatePoint cp = conjugate(spec, a);
    if (!cp.converged) {
      duality = kInf;
      continue;
    }
    duality = std::max(duality, std::fabs(cp.value + dot(q, a) - log_mgf(spec, q)));
    roundtrip = std::max(roundtrip, distance(cp.q_star, q));
  }
  add_check(m, "legendre.fenchel_equality", duality, c.tolerances.duality, duality <= c.tolerances.duality);
  add_check(m, "legendre.gradient_roundtrip", roundtrip, 1e-6, roundtrip <= 1e-6);
}

void run_pressure(const ExperimentConfig& c, RunManifest& m) {
  const ModelSpec& spec = c.model;
  const QGrid grid = c.q_grid.to_grid();
  const DomainScan scan = domain_scan(spec, grid, c.gamma_probe);
  const std::size_t upper_from = std::min<std::size_t>(15, c.depth);

  std::vector<ReplicaOutcome> outcomes(c.replicas);
  std::vector<double> final_gap(c.replicas, 0.0), upper(c.replicas, -kInf);
  parallel_for(c.replicas, c.threads, [&](std::size_t r) {
    RngStream rng(c.master_seed, r);
    std::vector<PressureRow> rows;
    const LevelSink sinks[] = {[&](const LevelFrame& f) {
      if (f.depth == 0) return;
      auto level_rows = pressure_rows(spec, f, grid);
      rows.insert(rows.end(), level_rows.begin(), level_rows.end());
    }};
    const TreeRun run = run_to_depth(spec, c.depth, GrowthMode::Stream, c.node_budget, rng, sinks);
    std::ostringstream os;
    write_pressure_csv(os, rows, spec.dim);
    const std::string name = numbered("pressure", r);
    write_text(c.output_dir / name, os.str());
    outcomes[r].outputs.push_back(name);
    if (!run.complete) {
      outcomes[r].complete = false;
      outcomes[r].flagged.push_back("pressure replica " + std::to_string(r) + ": " + run.failure);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      const std::size_t qi = i % grid.size();
      if (row.level >= upper_from) upper[r] = std::max(upper[r], row.gap());
      if (row.level == c.depth && scan.in_calJ[qi]) final_gap[r] = std::max(final_gap[r], std::fabs(row.gap()));
    }
  });
  merge(m, outcomes);
  const double gap = *std::max_element(final_gap.begin(), final_gap.end());
  const double up = *std::max_element(upper.begin(), upper.end());
  add_check(m, "pressure.final_gap", gap, c.tolerances.pressure_gap, gap <= c.tolerances.pressure_gap,
            "max |P_n - P~| at n = depth over grid points in the domain");
  add_check(m, "pressure.upper_bound", up, c.tolerances.pressure_upper, up <= c.tolerances.pressure_upper,
            "max (P_n - P~) over n >= " + std::to_string(upper_from));
}

void run_cascade(const ExperimentConfig& c, RunManifest& m) {
  const ModelSpec& spec = c.model;
  const QGrid grid = c.q_grid.to_grid();
  const DomainScan scan = domain_scan(spec, grid, c.gamma_probe);
  const std::vector<Vec> lambdas = lambda_points(c);
  const std::size_t inner_threads = c.replicas > 1 ? 1 : c.threads;

  std::vector<ReplicaOutcome> outcomes(c.replicas);
  std::vector<CascadeIdentityReport> reports(c.replicas);
  std::vector<double> l_gap(c.replicas, 0.0), l_routes(c.replicas, 0.0);
  parallel_for(c.replicas, c.threads, [&](std::size_t r) {
    RngStream rng(c.master_seed, r);
    const TreeRun run = run_to_depth(spec, c.depth, GrowthMode::Materialize, c.node_budget, rng);
    if (!run.complete) {
      outcomes[r].complete = false;
      outcomes[r].flagged.push_back("cascade replica " + std::to_string(r) + ": " + run.failure);
      return;
    }
    const CascadeTable table = build_cascade(run, grid, spec, inner_threads);
    reports[r] = verify_cascade(table);

    std::ostringstream levels;
    {
      CsvWriter csv(levels);
      std::vector<std::string> cols{"n"};
      for (std::size_t j = 0; j < spec.dim; ++j) cols.push_back("q_" + std::to_string(j));
      for (std::size_t j = 0; j < spec.dim; ++j) cols.push_back("lambda_" + std::to_string(j));
      for (const char* s : {"L_n", "target", "gap", "log_Z_n"}) cols.emplace_back(s);
      csv.header(cols);
      for (std::size_t k = 1; k <= c.depth; ++k) {
        const LevelFrame& f = run.frame(k);
        for (std::size_t qi = 0; qi < grid.size(); ++qi) {
          const Vec& q = grid[qi];
          for (const Vec& lam : lambdas) {
            const Vec shifted = add(q, lam);
            const double ln = L_n(spec, f, q, lam);
            const double target = log_mgf(spec, shifted) - log_mgf(spec, q);
            const double gap = ln - target;
            csv.field(k);
            for (double v : q) csv.field(v);
            for (double v : lam) csv.field(v);
            csv.field(ln).field(target).field(gap).field(static_cast<double>(k) * gap).end_row();
            const Vec sg = grad_log_mgf(spec, shifted);
            const bool shifted_in_J = log_mgf(spec, shifted) - dot(shifted, sg) > 0.0;
            if (k == c.depth && scan.in_calJ[qi] && shifted_in_J) l_gap[r] = std::max(l_gap[r], std::fabs(gap));
            if (k == c.depth) l_routes[r] = std::max(l_routes[r], std::fabs(L_n(table, qi, lam) - ln));
          }
        }
      }
    }
    const std::string lname = numbered("cascade_levels", r);
    write_text(c.output_dir / lname, levels.str());
    outcomes[r].outputs.push_back(lname);

    std::ostringstream conc;
    CsvWriter ccsv(conc);
    ccsv.header(std::vector<std::string>{"q_index", "epsilon", "level", "mass", "log_mass", "rate_gap"});
    for (std::size_t qi = 0; qi < grid.size(); ++qi) {
      if (!scan.in_calJ[qi]) continue;
      RngStream path_rng = rng.substream(1000 + qi);
      std::vector<SampledPath> paths;
      for (std::size_t p = 0; p < c.paths; ++p) paths.push_back(sample_path(table, qi, path_rng));
      std::ostringstream pos;
      write_paths_csv(pos, paths, spec.dim);
      char suffix[24];
      std::snprintf(suffix, sizeof suffix, "_q%03zu.csv", qi);
      const std::string pname = numbered("paths", r, suffix);
      write_text(c.output_dir / pname, pos.str());
      outcomes[r].outputs.push_back(pname);

      const Vec center = grad_log_mgf(spec, grid[qi]);
      for (double eps : c.epsilons) {
        const RateGap rg = rate_gap(spec, grid[qi], center, eps);
        if (rg.excluded > 0) {
          outcomes[r].flagged.push_back("rate_gap q point " + std::to_string(qi) + ": " +
                                        std::to_string(rg.excluded) + " direction(s) excluded");
        }
        for (const auto& row : concentration_mass(table, qi, eps)) {
          ccsv.field(qi).field(eps).field(row.level).field(row.mass).field(row.log_mass).field(rg.value).end_row();
        }
      }
    }
    const std::string cname = numbered("concentration", r);
    write_text(c.output_dir / cname, conc.str());
    outcomes[r].outputs.push_back(cname);
  });
  merge(m, outcomes);

  double rec = 0.0, addv = 0.0;
  bool positive = true;
  for (const auto& rep : reports) {
    rec = std::max(rec, rep.max_recursion_error);
    addv = std::max(addv, rep.max_additivity_error);
    positive = positive && rep.all_positive;
  }
  add_check(m, "cascade.branching_recursion", rec, c.tolerances.identity, rec <= c.tolerances.identity);
  add_check(m, "cascade.measure_additivity", addv, c.tolerances.identity, addv <= c.tolerances.identity);
  add_check(m, "cascade.positivity", positive ? 1.0 : 0.0, 1.0, positive);
  const double lg = *std::max_element(l_gap.begin(), l_gap.end());
  add_check(m, "cascade.L_n_gap", lg, c.tolerances.L_gap, lg <= c.tolerances.L_gap,
            "max |L_n - (P~(q+l) - P~(q))| at n = depth");
  const double routes = *std::max_element(l_routes.begin(), l_routes.end());
  add_check(m, "cascade.L_n_routes_agree", routes, 1e-10, routes <= 1e-10);
}

void run_spectrum(const ExperimentConfig& c, RunManifest& m) {
  const ModelSpec& spec = c.model;
  const QGrid grid = c.q_grid.to_grid();
  SpectrumConfig sc;
  sc.depth = c.depth;
  sc.n_lo = c.n_lo;
  sc.n_hi = c.n_hi;
  sc.epsilons = c.epsilons;
  sc.paths = c.paths;
  sc.budget = c.node_budget;
  sc.threads = c.replicas > 1 ? 1 : c.threads;
  if (c.alpha_grid) {
    sc.box = HistogramGrid::for_epsilon(c.alpha_grid->lo, c.alpha_grid->hi,
                                        *std::min_element(c.epsilons.begin(), c.epsilons.end()));
  }

  std::vector<ReplicaOutcome> outcomes(c.replicas);
  std::vector<SpectrumEstimate> estimates(c.replicas);
  parallel_for(c.replicas, c.threads, [&](std::size_t r) {
    RngStream rng(c.master_seed, r);
    estimates[r] = assemble_spectrum(spec, grid, sc, rng);
    std::ostringstream os;
    write_spectrum_csv(os, estimates[r], spec.dim);
    const std::string name = numbered("spectrum", r);
    write_text(c.output_dir / name, os.str());
    outcomes[r].outputs.push_back(name);
    outcomes[r].complete = estimates[r].complete;
    for (const auto& f : estimates[r].flags) outcomes[r].flagged.push_back("spectrum replica " + std::to_string(r) + ": " + f);
  });
  merge(m, outcomes);

  const Tolerances& t = c.tolerances;
  double slope_err = 0.0, local_err = 0.0, upper = -kInf, cross = 0.0, growth = -kInf;
  json summary = json::array();
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    for (const auto& p : estimates[r].points) {
      const bool has_slope = std::isfinite(p.fit.slope);
      const bool has_local = std::isfinite(p.local.mean);
      json entry = {{"replica", r}, {"alpha", p.alpha}, {"epsilon", p.epsilon}, {"status", p.flag},
                    {"analytic", p.analytic}};
      if (has_slope) {
        entry["slope"] = p.fit.slope;
        entry["slope_pass"] = std::fabs(p.fit.slope - p.analytic) <= t.spectrum;
        entry["upper_bound_pass"] = p.fit.slope <= p.analytic + t.spectrum;
        entry["growth_pass"] = p.fit.slope <= estimates[r].log_mean_offspring + 0.05;
      }
      if (has_local) {
        entry["local_dim"] = p.local.mean;
        entry["local_pass"] = std::fabs(p.local.mean - p.analytic) <= t.local_dim;
      }
      if (has_slope && has_local) entry["cross_pass"] = std::fabs(p.fit.slope - p.local.mean) <= t.cross;
      summary.push_back(entry);

      if (p.epsilon != c.check_epsilon) continue;
      if (has_slope) {
        slope_err = std::max(slope_err, std::fabs(p.fit.slope - p.analytic));
        upper = std::max(upper, p.fit.slope - p.analytic);
        growth = std::max(growth, p.fit.slope - estimates[r].log_mean_offspring);
      }
      if (has_local) local_err = std::max(local_err, std::fabs(p.local.mean - p.analytic));
      if (has_slope && has_local) cross = std::max(cross, std::fabs(p.fit.slope - p.local.mean));
    }
  }
  write_text(c.output_dir / "spectrum.json", summary.dump(2) + "\n");
  m.outputs.push_back("spectrum.json");
  add_check(m, "spectrum.ldp_slope", slope_err, t.spectrum, slope_err <= t.spectrum);
  add_check(m, "spectrum.local_dimension", local_err, t.local_dim, local_err <= t.local_dim);
  add_check(m, "spectrum.upper_bound", upper, t.spectrum, upper <= t.spectrum);
  add_check(m, "spectrum.estimators_agree", cross, t.cross, cross <= t.cross);
  add_check(m, "spectrum.total_growth", growth, 0.05, growth <= 0.05, "slope - log E N");
}

void run_full_acceptance(const ExperimentConfig& c, RunManifest& m) {
  AcceptanceOptions opts;
  opts.master_seed = c.master_seed;
  opts.threads = c.threads;
  opts.scratch_dir = c.output_dir / "acceptance_scratch";
  const auto results = run_acceptance(opts);
  json out = json::array();
  for (const auto& r : results) {
    out.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"runtime_seconds", r.runtime_seconds},
                   {"runtime_limit_seconds", r.runtime_limit_seconds}, {"detail", r.detail}});
    add_check(m, "acceptance." + std::to_string(r.id) + " " + r.name, r.runtime_seconds, r.runtime_limit_seconds,
              r.passed, r.detail);
  }
  fs::remove_all(opts.scratch_dir);
  write_text(c.output_dir / "acceptance.json", out.dump(2) + "\n");
  m.outputs.push_back("acceptance.json");
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.config_hash = config_hash(config);
  m.version = toolkit_version();
  m.kind = std::string(kind_name(config.kind));
  for (std::size_t r = 0; r < config.replicas; ++r) m.replica_seeds.push_back(RngStream(config.master_seed, r).key());
  fs::create_directories(config.output_dir);

  const auto k = config.kind;
  const bool full = k == ExperimentKind::Full;
  if (full || k == ExperimentKind::Domains) run_domains(config, m);
  if (full || k == ExperimentKind::Pressure) run_pressure(config, m);
  if (full || k == ExperimentKind::Cascade) run_cascade(config, m);
  if (full || k == ExperimentKind::Spectrum) run_spectrum(config, m);
  if (full) run_full_acceptance(config, m);

  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outputs.push_back("manifest.json");
  write_manifest(m, config.output_dir / "manifest.json");
  return m;
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  json checks = json::array();
  for (const auto& c : m.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold},
                      {"detail", c.detail}});
  }
  const json j = {{"config_hash", m.config_hash},
                  {"toolkit_version", m.version},
                  {"kind", m.kind},
                  {"replica_seeds", m.replica_seeds},
                  {"wall_clock_seconds", m.wall_clock_seconds},
                  {"outputs", m.outputs},
                  {"checks", checks},
                  {"flagged", m.flagged},
                  {"complete", m.complete},
                  {"passed", m.passed()}};
  write_text(path, j.dump(2) + "\n");
}

}  // namespace brwmf
