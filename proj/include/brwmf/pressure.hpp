#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "brwmf/grid.hpp"
#include "brwmf/kernels.hpp"
#include "brwmf/model.hpp"
#include "brwmf/tree.hpp"

namespace brwmf {

/// log sum_{u in T_n} exp<q, S_n(u)>, max-shifted.
double log_partition(const LevelFrame& frame, std::span<const double> q,
                     const kernels::KernelSet& k = kernels::active());

/// P_n(q) = (1/n) log sum_{u in T_n} exp<q, S_n(u)>. Requires depth >= 1.
double empirical_pressure(const LevelFrame& frame, std::span<const double> q,
                          const kernels::KernelSet& k = kernels::active());

/// phi(p, q) = exp(P~(pq) - p P~(q)).
double phi(const ModelSpec& spec, double p, std::span<const double> q);

/// Largest p on the lattice 1 + k/1000 (k = 1..1000) with
/// max_{q in grid} phi(p, q) < 1. Every grid point must lie in the domain
/// (ConfigError otherwise); throws InfeasibleGrid when even p = 1.001 fails.
double find_pK(const ModelSpec& spec, const QGrid& grid);

struct DomainScan {
  QGrid grid;
  std::vector<bool> in_J;
  std::vector<bool> in_Omega1;
  std::vector<bool> in_calJ;
  std::vector<double> entropy;  // P~(q) - <q, grad P~(q)>
  std::vector<Vec> alpha_image; // grad P~(q) where in_calJ, empty otherwise

  std::size_t count_calJ() const;
};

/// Closed-form membership of each grid point in J (positive entropy), in
/// Omega^1 (the gamma-moment is finite for some probed gamma, at the point
/// and at each of its existing lattice neighbours) and in their intersection.
DomainScan domain_scan(const ModelSpec& spec, const QGrid& grid, std::span<const double> gamma_probe);

struct PressureRow {
  std::size_t level = 0;
  Vec q;
  double empirical = 0.0;
  double analytic = 0.0;
  double gap() const { return empirical - analytic; }
};

/// P_n(q) for every grid point of one frame.
std::vector<PressureRow> pressure_rows(const ModelSpec& spec, const LevelFrame& frame, const QGrid& grid);

/// Columns: n, q_0..q_{d-1}, P_n, P_tilde, gap
void write_pressure_csv(std::ostream& os, std::span<const PressureRow> rows, std::size_t dim);
/// Columns: q_0.., in_J, in_Omega1, in_calJ, entropy, alpha_0..
void write_domain_csv(std::ostream& os, const DomainScan& scan);

}  // namespace brwmf
