#include "brwmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brwmf/errors.hpp"

namespace brwmf {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::BinaryRademacher: return "binary_rademacher";
    case Family::FixedFanDiscrete: return "fixed_fan_discrete";
    case Family::ShiftedPoissonGaussian: return "shifted_poisson_gaussian";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::BinaryRademacher, Family::FixedFanDiscrete, Family::ShiftedPoissonGaussian}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown model family '" + std::string(name) + "'", "family");
}

ModelSpec ModelSpec::binary_rademacher(std::size_t dim) {
  ModelSpec s;
  s.family = Family::BinaryRademacher;
  s.dim = dim;
  s.fan_out = 2;
  s.validate();
  return s;
}

ModelSpec ModelSpec::fixed_fan_discrete(unsigned fan_out, std::vector<Vec> support, Vec probabilities) {
  ModelSpec s;
  s.family = Family::FixedFanDiscrete;
  s.dim = support.empty() ? 0 : support.front().size();
  s.fan_out = fan_out;
  s.support = std::move(support);
  s.probabilities = std::move(probabilities);
  s.validate();
  return s;
}

ModelSpec ModelSpec::shifted_poisson_gaussian(double lambda, Vec mean, double sigma) {
  ModelSpec s;
  s.family = Family::ShiftedPoissonGaussian;
  s.dim = mean.size();
  s.lambda = lambda;
  s.mean = std::move(mean);
  s.sigma = sigma;
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (dim == 0) throw ConfigError("model dimension must be a positive integer", "d");
  switch (family) {
    case Family::BinaryRademacher:
      break;
    case Family::FixedFanDiscrete: {
      if (fan_out < 2) throw ConfigError("fan_out must be >= 2 for a supercritical tree", "fan_out");
      if (support.empty()) throw ConfigError("support must be non-empty", "support");
      if (support.size() != probabilities.size()) {
        throw ConfigError("support and probabilities differ in length", "probabilities");
      }
      for (const Vec& x : support) {
        if (x.size() != dim) throw ConfigError("support point has wrong dimension", "support");
        for (double v : x) {
          if (!std::isfinite(v)) throw ConfigError("support point is not finite", "support");
        }
      }
      double total = 0.0;
      for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("probabilities must be non-negative", "probabilities");
        total += p;
      }
      if (std::fabs(total - 1.0) > 1e-12) throw ConfigError("probabilities must sum to 1", "probabilities");
      break;
    }
    case Family::ShiftedPoissonGaussian:
      if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0", "lambda");
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be > 0", "sigma");
      if (mean.size() != dim) throw ConfigError("mean has wrong dimension", "mean");
      for (double v : mean) {
        if (!std::isfinite(v)) throw ConfigError("mean is not finite", "mean");
      }
      break;
  }
}

double ModelSpec::mean_offspring() const {
  switch (family) {
    case Family::BinaryRademacher: return 2.0;
    case Family::FixedFanDiscrete: return static_cast<double>(fan_out);
    case Family::ShiftedPoissonGaussian: return 1.0 + lambda;
  }
  return 0.0;
}

std::size_t append_offspring(const ModelSpec& spec, RngStream& rng, std::vector<double>& out) {
  const std::size_t d = spec.dim;
  switch (spec.family) {
    case Family::BinaryRademacher: {
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          out.push_back((rng.next_u64() >> 63) ? 1.0 : -1.0);
        }
      }
      return 2;
    }
    case Family::FixedFanDiscrete: {
      for (unsigned i = 0; i < spec.fan_out; ++i) {
        const double u = rng.uniform();
        double cdf = 0.0;
        std::size_t pick = spec.support.size() - 1;
        for (std::size_t k = 0; k < spec.probabilities.size(); ++k) {
          cdf += spec.probabilities[k];
          if (u < cdf) {
            pick = k;
            break;
          }
        }
        out.insert(out.end(), spec.support[pick].begin(), spec.support[pick].end());
      }
      return spec.fan_out;
    }
    case Family::ShiftedPoissonGaussian: {
      const std::size_t n = 1 + static_cast<std::size_t>(rng.poisson(spec.lambda));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.push_back(spec.mean[j] + spec.sigma * rng.normal());
      }
      return n;
    }
  }
  return 0;
}

OffspringDraw sample_offspring(const ModelSpec& spec, RngStream& rng) {
  OffspringDraw draw;
  draw.n_children = append_offspring(spec, rng, draw.displacements);
  return draw;
}

namespace {

void check_dim(const ModelSpec& spec, std::span<const double> q) {
  if (q.size() != spec.dim) throw ConfigError("q has dimension " + std::to_string(q.size()) +
                                              ", model has " + std::to_string(spec.dim), "q");
}

// log(2 cosh x) without overflow.
double log_two_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

}  // namespace

double log_mgf(const ModelSpec& spec, std::span<const double> q) {
  check_dim(spec, q);
  switch (spec.family) {
    case Family::BinaryRademacher: {
      // log 2 + sum_j log cosh q_j
      double s = std::log(2.0);
      for (double v : q) s += log_two_cosh(v) - std::log(2.0);
      return s;
    }
    case Family::FixedFanDiscrete: {
      double m = -INFINITY;
      std::vector<double> e(spec.support.size());
      for (std::size_t k = 0; k < e.size(); ++k) {
        e[k] = spec.probabilities[k] > 0.0 ? dot(q, spec.support[k]) : -INFINITY;
        m = std::max(m, e[k]);
      }
      double s = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (spec.probabilities[k] > 0.0) s += spec.probabilities[k] * std::exp(e[k] - m);
      }
      return std::log(static_cast<double>(spec.fan_out)) + m + std::log(s);
    }
    case Family::ShiftedPoissonGaussian:
      return std::log1p(spec.lambda) + dot(q, spec.mean) + 0.5 * spec.sigma * spec.sigma * dot(q, q);
  }
  return 0.0;
}

Vec grad_log_mgf(const ModelSpec& spec, std::span<const double> q) {
  check_dim(spec, q);
  Vec g(spec.dim, 0.0);
  switch (spec.family) {
    case Family::BinaryRademacher:
      for (std::size_t j = 0; j < spec.dim; ++j) g[j] = std::tanh(q[j]);
      break;
    case Family::FixedFanDiscrete: {
      double m = -INFINITY;
      std::vector<double> e(spec.support.size());
      for (std::size_t k = 0; k < e.size(); ++k) {
        e[k] = spec.probabilities[k] > 0.0 ? dot(q, spec.support[k]) : -INFINITY;
        m = std::max(m, e[k]);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (spec.probabilities[k] <= 0.0) continue;
        const double w = spec.probabilities[k] * std::exp(e[k] - m);
        z += w;
        for (std::size_t j = 0; j < spec.dim; ++j) g[j] += w * spec.support[k][j];
      }
      for (double& v : g) v /= z;
      break;
    }
    case Family::ShiftedPoissonGaussian:
      for (std::size_t j = 0; j < spec.dim; ++j) g[j] = spec.mean[j] + spec.sigma * spec.sigma * q[j];
      break;
  }
  return g;
}

bool moment_gamma_finite(const ModelSpec& spec, std::span<const double> q, double gamma) {
  if (!(gamma > 1.0 && gamma <= 2.0)) throw ConfigError("gamma must lie in (1, 2]", "gamma");
  check_dim(spec, q);
  for (double v : q) {
    if (!std::isfinite(v)) return false;
  }
  switch (spec.family) {
    // Bounded N and bounded displacements: finitely many bounded terms.
    case Family::BinaryRademacher:
    case Family::FixedFanDiscrete:
      return true;
    // (sum_{i<=N} W_i)^gamma <= N^(gamma-1) sum_i W_i^gamma, so the moment is
    // at most E[N^gamma] E[e^{gamma<q,X>}]; both factors are finite
    // (Poisson moments, Gaussian mgf).
    case Family::ShiftedPoissonGaussian:
      return true;
  }
  throw ConfigError("unsupported model family", "family");
}

}  // namespace brwmf
