#include <doctest.h>

#include <cmath>

#include "brwmf/errors.hpp"
#include "brwmf/model.hpp"

using namespace brwmf;

namespace {

double fd(const ModelSpec& s, Vec q, std::size_t j, double h = 1e-5) {
  Vec a = q, b = q;
  a[j] += h;
  b[j] -= h;
  return (log_mgf(s, a) - log_mgf(s, b)) / (2 * h);
}

// Monte-Carlo estimate of E sum_i exp<q, X_i>.
double mc_mgf(const ModelSpec& s, const Vec& q, int draws, std::uint64_t seed) {
  RngStream r(seed, 0);
  double acc = 0;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_offspring(s, r);
    for (std::size_t c = 0; c < d.n_children; ++c) acc += std::exp(dot(q, d.displacement(c, s.dim)));
  }
  return acc / draws;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("binary rademacher offspring") {
    const auto s = ModelSpec::binary_rademacher(1);
    RngStream r(1, 0);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n / 2; ++i) {
      const auto d = sample_offspring(s, r);
      REQUIRE(d.n_children == 2);
      for (double x : d.displacements) {
        REQUIRE((x == 1.0 || x == -1.0));
        plus += x > 0;
      }
    }
    CHECK(std::fabs(double(plus) / n - 0.5) < 3 * std::sqrt(0.25 / n));
  }

  TEST_CASE("shifted poisson offspring count has mean 1 + lambda") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0);
    RngStream r(2, 0);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const auto d = sample_offspring(s, r);
      REQUIRE(d.n_children >= 1);
      sum += double(d.n_children);
    }
    CHECK(std::fabs(sum / n - 2.0) < 3 * std::sqrt(1.0 / n));
  }

  TEST_CASE("fixed fan discrete frequencies") {
    const auto s = ModelSpec::fixed_fan_discrete(3, {{-1.0}, {0.0}, {2.0}}, {0.5, 0.3, 0.2});
    RngStream r(3, 0);
    int counts[3] = {0, 0, 0};
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
      const auto d = sample_offspring(s, r);
      REQUIRE(d.n_children == 3);
      for (double x : d.displacements) counts[x < -0.5 ? 0 : (x < 1 ? 1 : 2)]++;
    }
    const double p[3] = {0.5, 0.3, 0.2};
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(counts[k] / (3.0 * n) - p[k]) < 4 * std::sqrt(p[k] * (1 - p[k]) / (3.0 * n)));
  }

  TEST_CASE("append_offspring agrees with sample_offspring") {
    const auto s = ModelSpec::shifted_poisson_gaussian(2.0, {0.1, 0.2}, 0.5);
    RngStream a(4, 4), b(4, 4);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> out;
      const auto n = append_offspring(s, a, out);
      const auto d = sample_offspring(s, b);
      REQUIRE(n == d.n_children);
      CHECK(out == d.displacements);
    }
  }

  TEST_CASE("log_mgf at zero is log of the mean offspring") {
    const ModelSpec specs[] = {ModelSpec::binary_rademacher(2),
                               ModelSpec::fixed_fan_discrete(3, {{-1.0}, {0.0}, {2.0}}, {0.5, 0.3, 0.2}),
                               ModelSpec::shifted_poisson_gaussian(1.5, {0.3, 0.0, -1.0}, 2.0)};
    for (const auto& s : specs) {
      CHECK(log_mgf(s, Vec(s.dim, 0.0)) == doctest::Approx(std::log(s.mean_offspring())).epsilon(1e-14));
    }
  }

  TEST_CASE("closed-form values") {
    CHECK(log_mgf(ModelSpec::binary_rademacher(1), Vec{1.0}) ==
          doctest::Approx(std::log(2.0) + std::log(std::cosh(1.0))).epsilon(1e-14));
    CHECK(log_mgf(ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0), Vec{1.0, 0.0}) ==
          doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-14));
    // Large arguments stay finite.
    CHECK(log_mgf(ModelSpec::binary_rademacher(1), Vec{800.0}) == doctest::Approx(800.0).epsilon(1e-14));
    CHECK(grad_log_mgf(ModelSpec::binary_rademacher(1), Vec{0.5})[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
    const auto g = grad_log_mgf(ModelSpec::shifted_poisson_gaussian(1.0, {1.0, 1.0}, 2.0), Vec{0.5, 0.0});
    CHECK(g[0] == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(1.0));
  }

  TEST_CASE("gradient matches central differences") {
    const ModelSpec specs[] = {ModelSpec::binary_rademacher(2),
                               ModelSpec::fixed_fan_discrete(2, {{-1.0, 0.5}, {0.3, -2.0}}, {0.4, 0.6}),
                               ModelSpec::shifted_poisson_gaussian(1.0, {1.0, 1.0}, 2.0)};
    const Vec qs[] = {{0.5, -0.2}, {0.0, 0.0}, {-1.3, 0.7}};
    for (const auto& s : specs) {
      for (const auto& q : qs) {
        const Vec g = grad_log_mgf(s, q);
        for (std::size_t j = 0; j < 2; ++j) CHECK(g[j] == doctest::Approx(fd(s, q, j)).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("log_mgf matches Monte-Carlo mean") {
    const auto r = ModelSpec::binary_rademacher(1);
    CHECK(std::log(mc_mgf(r, {1.0}, 100000, 8)) == doctest::Approx(log_mgf(r, Vec{1.0})).epsilon(0.01));
    const auto g = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0);
    CHECK(std::log(mc_mgf(g, {1.0, 0.0}, 200000, 9)) == doctest::Approx(log_mgf(g, Vec{1.0, 0.0})).epsilon(0.02));
  }

  TEST_CASE("moment finiteness") {
    CHECK(moment_gamma_finite(ModelSpec::binary_rademacher(1), Vec{5.0}, 2.0));
    CHECK(moment_gamma_finite(ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0), Vec{3.0, 3.0}, 1.5));
    CHECK(moment_gamma_finite(ModelSpec::fixed_fan_discrete(2, {{1.0}, {-1.0}}, {0.5, 0.5}), Vec{9.0}, 2.0));
    CHECK_THROWS(moment_gamma_finite(ModelSpec::binary_rademacher(1), Vec{0.0}, 1.0));
    CHECK_THROWS(moment_gamma_finite(ModelSpec::binary_rademacher(1), Vec{0.0}, 2.5));
  }

  TEST_CASE("validation names the offending parameter") {
    auto key_of = [](const ModelSpec& s) {
      try {
        s.validate();
      } catch (const ConfigError& e) {
        return e.key();
      }
      return std::string("none");
    };
    ModelSpec bad = ModelSpec::binary_rademacher(1);
    bad.dim = 0;
    CHECK(key_of(bad) == "d");
    ModelSpec p;
    p.family = Family::ShiftedPoissonGaussian;
    p.dim = 1;
    p.mean = {0.0};
    p.lambda = -1.0;
    CHECK(key_of(p) == "lambda");
    p.lambda = 1.0;
    p.sigma = 0.0;
    CHECK(key_of(p) == "sigma");
    ModelSpec f;
    f.family = Family::FixedFanDiscrete;
    f.fan_out = 2;
    f.support = {{1.0}, {-1.0}};
    f.probabilities = {0.5, 0.6};
    CHECK(key_of(f) == "probabilities");
    CHECK(parse_family(family_name(Family::FixedFanDiscrete)) == Family::FixedFanDiscrete);
    CHECK_THROWS_AS(parse_family("gaussian"), ConfigError);
  }
}
