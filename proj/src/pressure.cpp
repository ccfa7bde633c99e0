#include "brwmf/pressure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"

namespace brwmf {

double log_partition(const LevelFrame& frame, std::span<const double> q, const kernels::KernelSet& k) {
  if (q.size() != frame.dim) throw ConfigError("q dimension does not match the tree", "q");
  std::vector<double> exponent(frame.node_count());
  k.affine(frame.path_sum, q, 0.0, exponent);
  return kernels::log_sum_exp(exponent, k);
}

double empirical_pressure(const LevelFrame& frame, std::span<const double> q, const kernels::KernelSet& k) {
  if (frame.depth == 0) throw UsageError("empirical pressure needs a level of depth >= 1");
  return log_partition(frame, q, k) / static_cast<double>(frame.depth);
}

double phi(const ModelSpec& spec, double p, std::span<const double> q) {
  if (!(p >= 1.0)) throw ConfigError("phi requires p >= 1", "p");
  const Vec pq = scaled(q, p);
  return std::exp(log_mgf(spec, pq) - p * log_mgf(spec, q));
}

double find_pK(const ModelSpec& spec, const QGrid& grid) {
  const DomainScan scan = domain_scan(spec, grid, std::array{1.5, 2.0});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!scan.in_calJ[i]) throw ConfigError("grid point " + std::to_string(i) + " lies outside the domain", "q_grid");
  }
  auto feasible = [&](int k) {
    const double p = 1.0 + 1e-3 * k;
    double worst = 0.0;
    for (const Vec& q : grid.points()) worst = std::max(worst, phi(spec, p, q));
    return worst < 1.0;
  };
  if (!feasible(1)) throw InfeasibleGrid("no p in (1, 1.001] keeps phi below 1; grid touches the domain boundary");
  // {p : phi(p, q) < 1} is an interval (1, p_q) by log-convexity, so the
  // feasible lattice indices form a prefix.
  if (feasible(1000)) return 2.0;
  int good = 1;
  int bad = 1000;
  while (bad - good > 1) {
    const int mid = good + (bad - good) / 2;
    (feasible(mid) ? good : bad) = mid;
  }
  return 1.0 + 1e-3 * good;
}

std::size_t DomainScan::count_calJ() const {
  return static_cast<std::size_t>(std::count(in_calJ.begin(), in_calJ.end(), true));
}

DomainScan domain_scan(const ModelSpec& spec, const QGrid& grid, std::span<const double> gamma_probe) {
  if (grid.dim() != spec.dim) throw ConfigError("grid dimension does not match the model", "q_grid");
  if (gamma_probe.empty()) throw ConfigError("at least one gamma must be probed", "gamma");
  const std::size_t n = grid.size();
  DomainScan scan;
  scan.grid = grid;
  scan.in_J.resize(n);
  scan.in_Omega1.resize(n);
  scan.in_calJ.resize(n);
  scan.entropy.resize(n);
  scan.alpha_image.resize(n);

  std::vector<bool> moment_ok(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& q = grid[i];
    const Vec g = grad_log_mgf(spec, q);
    scan.entropy[i] = log_mgf(spec, q) - dot(q, g);
    scan.in_J[i] = scan.entropy[i] > 0.0;
    bool ok = false;
    for (double gamma : gamma_probe) ok = ok || moment_gamma_finite(spec, q, gamma);
    moment_ok[i] = ok;
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool interior = moment_ok[i];
    for (std::size_t axis = 0; interior && axis < grid.dim(); ++axis) {
      for (int step : {-1, 1}) {
        if (auto nb = grid.neighbor(i, axis, step); nb && !moment_ok[*nb]) interior = false;
      }
    }
    scan.in_Omega1[i] = interior;
    scan.in_calJ[i] = scan.in_J[i] && interior;
    if (scan.in_calJ[i]) scan.alpha_image[i] = grad_log_mgf(spec, grid[i]);
  }
  return scan;
}

std::vector<PressureRow> pressure_rows(const ModelSpec& spec, const LevelFrame& frame, const QGrid& grid) {
  std::vector<PressureRow> rows;
  rows.reserve(grid.size());
  for (const Vec& q : grid.points()) {
    rows.push_back({frame.depth, q, empirical_pressure(frame, q), log_mgf(spec, q)});
  }
  return rows;
}

void write_pressure_csv(std::ostream& os, std::span<const PressureRow> rows, std::size_t dim) {
  CsvWriter csv(os);
  std::vector<std::string> cols{"n"};
  for (std::size_t j = 0; j < dim; ++j) cols.push_back("q_" + std::to_string(j));
  for (const char* c : {"P_n", "P_tilde", "gap"}) cols.emplace_back(c);
  csv.header(cols);
  for (const auto& r : rows) {
    csv.field(r.level);
    for (double v : r.q) csv.field(v);
    csv.field(r.empirical).field(r.analytic).field(r.gap()).end_row();
  }
}

void write_domain_csv(std::ostream& os, const DomainScan& scan) {
  CsvWriter csv(os);
  const std::size_t d = scan.grid.dim();
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < d; ++j) cols.push_back("q_" + std::to_string(j));
  for (const char* c : {"in_J", "in_Omega1", "in_calJ", "entropy"}) cols.emplace_back(c);
  for (std::size_t j = 0; j < d; ++j) cols.push_back("alpha_" + std::to_string(j));
  csv.header(cols);
  for (std::size_t i = 0; i < scan.grid.size(); ++i) {
    for (double v : scan.grid[i]) csv.field(v);
    csv.field(static_cast<bool>(scan.in_J[i])).field(static_cast<bool>(scan.in_Omega1[i]));
    csv.field(static_cast<bool>(scan.in_calJ[i])).field(scan.entropy[i]);
    for (std::size_t j = 0; j < d; ++j) {
      if (scan.in_calJ[i]) {
        csv.field(scan.alpha_image[i][j]);
      } else {
        csv.field(std::string_view{});
      }
    }
    csv.end_row();
  }
}

}  // namespace brwmf
