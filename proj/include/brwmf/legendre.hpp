#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "brwmf/model.hpp"
#include "brwmf/vec.hpp"

namespace brwmf {

/// P~*(alpha) = inf_q (P~(q) - <q, alpha>) together with its minimizer.
struct ConjugatePoint {
  Vec alpha;
  Vec q_star;
  double value = 0.0;
  double residual = 0.0;  // |grad P~(q_star) - alpha|
  bool converged = false;
  /// Iterates left the ball |q| <= divergence_radius: alpha is not in the
  /// interior of the gradient range. value is the best objective seen, an
  /// upper bound on the infimum.
  bool diverged = false;
  /// The line search could not decrease the objective before convergence.
  bool stalled = false;
  std::size_t iterations = 0;
};

struct ConjugateOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 200;
  double hessian_step = 1e-5;
  double divergence_radius = 1e3;
};

/// Solves grad P~(q) = alpha by damped Newton (finite-difference Hessian of
/// the analytic gradient), falling back to backtracking gradient descent
/// when the Newton direction does not decrease P~(q) - <q, alpha>.
ConjugatePoint conjugate(const ModelSpec& spec, std::span<const double> alpha, const ConjugateOptions& opts = {});
ConjugatePoint conjugate(const ModelSpec& spec, std::span<const double> alpha, double tol);

/// conjugate() at every alpha; unconverged points are kept and flagged.
std::vector<ConjugatePoint> spectrum_curve(const ModelSpec& spec, std::span<const Vec> alphas,
                                           const ConjugateOptions& opts = {});

/// L_q*(alpha) = inf_l (P~(q + l) - P~(q) - <l, alpha>) = P~*(alpha) - P~(q) + <q, alpha>.
struct ShiftedRate {
  double value = 0.0;
  ConjugatePoint point;
};
ShiftedRate shifted_rate(const ModelSpec& spec, std::span<const double> q, std::span<const double> alpha,
                         const ConjugateOptions& opts = {});

struct RateGap {
  double value = 0.0;  // NaN when every direction was excluded
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::vector<std::string> warnings;
};

/// Unit directions used to probe a sphere: +-1 in one dimension, 64 evenly
/// spaced angles in two, a 64-point Fibonacci lattice in three.
std::vector<Vec> sphere_directions(std::size_t dim);

/// sup of L_q* over |alpha - center| >= radius, taken on the sphere
/// |alpha - center| = radius (L_q* is concave with its maximum 0 at the
/// center). Directions whose conjugate solve fails are excluded with a warning.
RateGap rate_gap(const ModelSpec& spec, std::span<const double> q, std::span<const double> center, double radius,
                 const ConjugateOptions& opts = {});

/// Columns: alpha_0.., q_star_0.., P_tilde_star, residual, converged
void write_conjugate_csv(std::ostream& os, std::span<const ConjugatePoint> points, std::size_t dim);

}  // namespace brwmf
