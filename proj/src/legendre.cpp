#include "brwmf/legendre.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "brwmf/csv.hpp"
#include "brwmf/errors.hpp"

namespace brwmf {

namespace {

// Gaussian elimination with partial pivoting on a small dense system.
bool solve_dense(std::vector<double> a, Vec b, std::size_t n, Vec& x) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r * n + c]) > std::fabs(a[piv * n + c])) piv = r;
    }
    if (!(std::fabs(a[piv * n + c]) > 1e-300)) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> fd_hessian(const ModelSpec& spec, const Vec& q, double h) {
  const std::size_t d = q.size();
  std::vector<double> hess(d * d);
  Vec qp = q, qm = q;
  for (std::size_t j = 0; j < d; ++j) {
    qp[j] = q[j] + h;
    qm[j] = q[j] - h;
    const Vec gp = grad_log_mgf(spec, qp);
    const Vec gm = grad_log_mgf(spec, qm);
    for (std::size_t i = 0; i < d; ++i) hess[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
    qp[j] = qm[j] = q[j];
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double s = 0.5 * (hess[i * d + j] + hess[j * d + i]);
      hess[i * d + j] = hess[j * d + i] = s;
    }
  }
  return hess;
}

}  // namespace

ConjugatePoint conjugate(const ModelSpec& spec, std::span<const double> alpha, double tol) {
  ConjugateOptions opts;
  opts.tol = tol;
  return conjugate(spec, alpha, opts);
}

ConjugatePoint conjugate(const ModelSpec& spec, std::span<const double> alpha, const ConjugateOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigError("conjugate tolerance must be positive", "tol");
  if (alpha.size() != spec.dim) throw ConfigError("alpha dimension does not match the model", "alpha");
  const std::size_t d = spec.dim;

  auto objective = [&](const Vec& q) { return log_mgf(spec, q) - dot(q, alpha); };
  auto gradient = [&](const Vec& q) {
    Vec g = grad_log_mgf(spec, q);
    for (std::size_t j = 0; j < d; ++j) g[j] -= alpha[j];
    return g;
  };

  ConjugatePoint out;
  out.alpha.assign(alpha.begin(), alpha.end());
  Vec q(d, 0.0);
  double f = objective(q);
  Vec g = gradient(q);
  Vec best_q = q;
  double best_f = f;

  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    if (norm(g) <= opts.tol) break;

    const double gnorm = norm(g);
    Vec step;
    Vec neg_g = scaled(g, -1.0);
    const bool newton_ok = solve_dense(fd_hessian(spec, q, opts.hessian_step), neg_g, d, step) && dot(step, g) < 0.0;

    // Accept a trial point on sufficient decrease, or when the objective is
    // flat to rounding but the gradient shrinks (close to the minimizer).
    auto try_direction = [&](const Vec& dir, Vec& q_new, double& f_new, Vec& g_new) {
      const double slope = dot(dir, g);
      for (double t = 1.0; t > 1e-12; t *= 0.5) {
        q_new = q;
        for (std::size_t j = 0; j < d; ++j) q_new[j] += t * dir[j];
        f_new = objective(q_new);
        if (!std::isfinite(f_new)) continue;
        g_new = gradient(q_new);
        if (f_new <= f + 1e-4 * t * slope) return true;
        if (f_new <= f + 1e-14 * (1.0 + std::fabs(f)) && norm(g_new) < gnorm) return true;
      }
      return false;
    };

    Vec q_new, g_new;
    double f_new = f;
    bool moved = newton_ok && try_direction(step, q_new, f_new, g_new);
    if (!moved) moved = try_direction(neg_g, q_new, f_new, g_new);
    if (!moved) {
      out.stalled = true;
      break;
    }
    q = std::move(q_new);
    f = f_new;
    g = std::move(g_new);
    if (f < best_f) {
      best_f = f;
      best_q = q;
    }
    if (norm(q) > opts.divergence_radius) {
      out.diverged = true;
      break;
    }
    out.iterations = it + 1;
  }

  out.residual = norm(g);
  out.converged = !out.diverged && out.residual <= opts.tol;
  if (out.converged) {
    out.q_star = q;
    out.value = log_mgf(spec, q) - dot(q, alpha);
  } else {
    out.q_star = best_q;
    out.value = best_f;
    out.residual = norm(gradient(best_q));
  }
  return out;
}

std::vector<ConjugatePoint> spectrum_curve(const ModelSpec& spec, std::span<const Vec> alphas,
                                           const ConjugateOptions& opts) {
  std::vector<ConjugatePoint> out;
  out.reserve(alphas.size());
  for (const Vec& a : alphas) out.push_back(conjugate(spec, a, opts));
  return out;
}

ShiftedRate shifted_rate(const ModelSpec& spec, std::span<const double> q, std::span<const double> alpha,
                         const ConjugateOptions& opts) {
  ShiftedRate r;
  r.point = conjugate(spec, alpha, opts);
  r.value = r.point.value - log_mgf(spec, q) + dot(q, alpha);
  return r;
}

std::vector<Vec> sphere_directions(std::size_t dim) {
  std::vector<Vec> dirs;
  switch (dim) {
    case 1:
      dirs = {{1.0}, {-1.0}};
      break;
    case 2:
      for (int k = 0; k < 64; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 64.0;
        dirs.push_back({std::cos(t), std::sin(t)});
      }
      break;
    case 3: {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < 64; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / 64.0;
        const double r = std::sqrt(1.0 - z * z);
        dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
      }
      break;
    }
    default:
      throw ConfigError("rate_gap supports dimensions 1 to 3", "d");
  }
  return dirs;
}

RateGap rate_gap(const ModelSpec& spec, std::span<const double> q, std::span<const double> center, double radius,
                 const ConjugateOptions& opts) {
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive", "radius");
  RateGap out;
  out.value = -std::numeric_limits<double>::infinity();
  for (const Vec& dir : sphere_directions(spec.dim)) {
    Vec alpha(center.begin(), center.end());
    for (std::size_t j = 0; j < alpha.size(); ++j) alpha[j] += radius * dir[j];
    const ShiftedRate r = shifted_rate(spec, q, alpha, opts);
    if (!r.point.converged) {
      ++out.excluded;
      out.warnings.push_back("conjugate solve did not converge at alpha offset direction " +
                             std::to_string(out.evaluated + out.excluded - 1));
      continue;
    }
    ++out.evaluated;
    out.value = std::max(out.value, r.value);
  }
  if (out.evaluated == 0) out.value = std::numeric_limits<double>::quiet_NaN();
  return out;
}

void write_conjugate_csv(std::ostream& os, std::span<const ConjugatePoint> points, std::size_t dim) {
  CsvWriter csv(os);
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < dim; ++j) cols.push_back("alpha_" + std::to_string(j));
  for (std::size_t j = 0; j < dim; ++j) cols.push_back("q_star_" + std::to_string(j));
  for (const char* c : {"P_tilde_star", "residual", "converged"}) cols.emplace_back(c);
  csv.header(cols);
  for (const auto& p : points) {
    for (double v : p.alpha) csv.field(v);
    for (double v : p.q_star) csv.field(v);
    csv.field(p.value).field(p.residual).field(p.converged).end_row();
  }
}

}  // namespace brwmf
