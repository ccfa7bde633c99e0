#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "brwmf/rng.hpp"
#include "brwmf/vec.hpp"

namespace brwmf {

enum class Family { BinaryRademacher, FixedFanDiscrete, ShiftedPoissonGaussian };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Law of the reproduction-displacement vector (N, X_1, X_2, ...).
///
/// BinaryRademacher: N = 2, each child displaced by i.i.d. uniform signs in
/// every coordinate. FixedFanDiscrete: N = fan_out, i.i.d. displacements from
/// a finite support. ShiftedPoissonGaussian: N = 1 + Poisson(lambda),
/// i.i.d. Gaussian displacements N(mean, sigma^2 I). All three have a closed
/// form log moment generating function, finite on the whole space.
struct ModelSpec {
  Family family = Family::BinaryRademacher;
  std::size_t dim = 1;

  unsigned fan_out = 2;
  std::vector<Vec> support;
  Vec probabilities;

  double lambda = 1.0;
  Vec mean;
  double sigma = 1.0;

  static ModelSpec binary_rademacher(std::size_t dim = 1);
  static ModelSpec fixed_fan_discrete(unsigned fan_out, std::vector<Vec> support, Vec probabilities);
  static ModelSpec shifted_poisson_gaussian(double lambda, Vec mean, double sigma);

  /// Throws ConfigError naming the offending parameter.
  void validate() const;

  double mean_offspring() const;
};

/// One realization (N_u, X_u1, ..., X_uN).
struct OffspringDraw {
  std::size_t n_children = 0;
  std::vector<double> displacements;  // row-major, n_children x dim

  std::span<const double> displacement(std::size_t i, std::size_t dim) const {
    return {displacements.data() + i * dim, dim};
  }
};

OffspringDraw sample_offspring(const ModelSpec& spec, RngStream& rng);

/// Hot-path variant: appends the children's displacements (row-major) to
/// `out` and returns the number of children. Consumes the stream exactly as
/// sample_offspring does.
std::size_t append_offspring(const ModelSpec& spec, RngStream& rng, std::vector<double>& out);

/// log E sum_i exp<q, X_i>.
double log_mgf(const ModelSpec& spec, std::span<const double> q);
Vec grad_log_mgf(const ModelSpec& spec, std::span<const double> q);

/// Whether E|sum_i exp<q, X_i>|^gamma is finite; gamma must lie in (1, 2].
bool moment_gamma_finite(const ModelSpec& spec, std::span<const double> q, double gamma);

}  // namespace brwmf
