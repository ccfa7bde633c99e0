#include <doctest.h>

#include <cmath>
#include <sstream>

#include "brwmf/cascade.hpp"
#include "brwmf/errors.hpp"
#include "brwmf/pressure.hpp"

using namespace brwmf;

namespace {

TreeRun grow(const ModelSpec& s, std::size_t n, std::uint64_t seed) {
  RngStream r(seed, 0);
  return run_to_depth(s, n, GrowthMode::Materialize, kDefaultNodeBudget, r);
}

}  // namespace

TEST_SUITE("cascade") {
  TEST_CASE("q = 0 on a binary tree: unit mass, uniform weights") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 8, 1);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.0}}), s);
    CHECK(t.log_total_mass(0) == doctest::Approx(0.0).epsilon(1e-15));
    for (std::size_t k = 0; k <= 8; ++k) {
      const auto w = measure_weights(t, k);
      for (double lm : w.for_q(0)) CHECK(lm == doctest::Approx(-double(k) * std::log(2.0)).epsilon(1e-13));
    }
  }

  TEST_CASE("level-0 weight is the total mass") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.2}, 0.8);
    const auto run = grow(s, 7, 2);
    const auto t = build_cascade(run, QGrid::box({-1.0}, {1.0}, {5}), s);
    const auto w = measure_weights(t, 0);
    for (std::size_t qi = 0; qi < 5; ++qi) CHECK(w.for_q(qi)[0] == doctest::Approx(t.log_total_mass(qi)).epsilon(1e-15));
  }

  TEST_CASE("forward Y_2 from the definition equals the backward sweep") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.5, {0.1, -0.3}, 1.2);
    const auto run = grow(s, 2, 3);
    RngStream r(3, 9);
    std::vector<Vec> qs;
    for (int i = 0; i < 5; ++i) qs.push_back({2 * r.uniform() - 1, 2 * r.uniform() - 1});
    const auto t = build_cascade(run, QGrid::from_points(qs), s);
    const auto& leaves = run.frame(2);
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      long double sum = 0;
      for (std::size_t u = 0; u < leaves.node_count(); ++u) {
        sum += std::exp(static_cast<long double>(dot(qs[qi], leaves.path_sum_at(u)) - 2 * log_mgf(s, qs[qi])));
      }
      CHECK(std::exp(t.log_total_mass(qi)) == doctest::Approx(double(sum)).epsilon(1e-12));
    }
  }

  TEST_CASE("identities hold to machine precision") {
    const ModelSpec specs[] = {ModelSpec::binary_rademacher(1), ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0)};
    for (const auto& s : specs) {
      const auto run = grow(s, 12, 4);
      const auto t = build_cascade(run, QGrid::box({-1.0}, {1.0}, {11}), s);
      const auto rep = verify_cascade(t);
      CHECK(rep.max_recursion_error <= 1e-12);
      CHECK(rep.max_additivity_error <= 1e-12);
      CHECK(rep.max_total_mass_error <= 1e-12);
      CHECK(rep.all_positive);
      CHECK(rep.internal_nodes_checked > 0);
    }
  }

  TEST_CASE("threads do not change the table") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0);
    const auto run = grow(s, 9, 5);
    const QGrid g = QGrid::box({-1.0, -1.0}, {1.0, 1.0}, {4, 3});
    const auto a = build_cascade(run, g, s, 1);
    const auto b = build_cascade(run, g, s, 4);
    for (std::size_t k = 0; k <= 9; ++k) {
      for (std::size_t qi = 0; qi < g.size(); ++qi) {
        const auto x = a.log_y(k, qi), y = b.log_y(k, qi);
        CHECK(std::equal(x.begin(), x.end(), y.begin()));
      }
    }
  }

  TEST_CASE("usage errors") {
    const auto s = ModelSpec::binary_rademacher(1);
    RngStream r(6, 0);
    const auto streamed = run_to_depth(s, 4, GrowthMode::Stream, kDefaultNodeBudget, r);
    CHECK_THROWS_AS(build_cascade(streamed, QGrid::from_points({Vec{0.0}}), s), UsageError);
    RngStream r2(6, 0);
    const auto partial = run_to_depth(s, 12, GrowthMode::Materialize, 100, r2);
    CHECK_THROWS_AS(build_cascade(partial, QGrid::from_points({Vec{0.0}}), s), UsageError);
  }

  TEST_CASE("sampled paths are consistent prefixes") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0);
    const auto run = grow(s, 8, 7);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.4}}), s);
    RngStream r(7, 1);
    for (int p = 0; p < 20; ++p) {
      const auto path = sample_path(t, 0, r);
      REQUIRE(path.depth() == 8);
      CHECK(path.log_mu[0] == doctest::Approx(t.log_total_mass(0)));
      for (std::size_t k = 1; k <= 8; ++k) {
        const auto& f = run.frame(k);
        CHECK(f.parent_index[path.nodes[k]] == path.nodes[k - 1]);
        CHECK(path.path_sum_at(k)[0] == f.path_sum_at(path.nodes[k])[0]);
        CHECK(path.log_mu[k] == doctest::Approx(measure_weights(t, k).for_q(0)[path.nodes[k]]).epsilon(1e-14));
        CHECK(path.log_mu[k] <= path.log_mu[k - 1] + 1e-12);
      }
      CHECK(path.log_y[8] == 0.0);
    }
  }

  TEST_CASE("q = 0 paths choose children uniformly") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 1, 8);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.0}}), s);
    RngStream r(8, 1);
    const int n = 20000;
    int first = 0;
    for (int i = 0; i < n; ++i) first += sample_path(t, 0, r).nodes[1] == 0;
    CHECK(std::fabs(double(first) / n - 0.5) < 4 * std::sqrt(0.25 / n));
  }

  TEST_CASE("sampled paths reproduce the exact mu-mean of S_n / n") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 14, 9);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.5}}), s);
    const auto w = measure_weights(t, 14);
    const auto& f = run.frame(14);
    double m1 = 0, m2 = 0, tot = 0;
    for (std::size_t u = 0; u < f.node_count(); ++u) {
      const double m = std::exp(w.for_q(0)[u]);
      const double x = f.path_sum_at(u)[0] / 14;
      tot += m;
      m1 += m * x;
      m2 += m * x * x;
    }
    m1 /= tot;
    const double sd = std::sqrt(m2 / tot - m1 * m1);
    RngStream r(9, 1);
    const int paths = 4000;
    double mean = 0;
    for (int p = 0; p < paths; ++p) mean += sample_path(t, 0, r).path_sum_at(14)[0] / 14 / paths;
    CHECK(std::fabs(mean - m1) <= 4 * sd / std::sqrt(double(paths)));
  }

  TEST_CASE("size-biased tree average of the mu-mean is grad P~(q)") {
    // E[Y_n * E_mu(S_n / n)] / E[Y_n] = tanh q exactly; a per-tree mean carries an O(1/n) bias.
    const auto s = ModelSpec::binary_rademacher(1);
    const int trees = 300;
    std::vector<double> num(trees), den(trees);
    for (int i = 0; i < trees; ++i) {
      RngStream r(10, i);
      const auto run = run_to_depth(s, 10, GrowthMode::Materialize, kDefaultNodeBudget, r);
      const auto t = build_cascade(run, QGrid::from_points({Vec{0.5}}), s);
      const auto w = measure_weights(t, 10);
      const auto& f = run.frame(10);
      for (std::size_t u = 0; u < f.node_count(); ++u) {
        const double m = std::exp(w.for_q(0)[u]);
        num[i] += m * f.path_sum_at(u)[0] / 10;
        den[i] += m;
      }
    }
    double sn = 0, sd = 0;
    for (int i = 0; i < trees; ++i) {
      sn += num[i] / trees;
      sd += den[i] / trees;
    }
    const double ratio = sn / sd;
    // Delta-method standard error of the ratio of means.
    double v = 0;
    for (int i = 0; i < trees; ++i) v += std::pow(num[i] - ratio * den[i], 2) / (trees - 1);
    const double se = std::sqrt(v / trees) / sd;
    CHECK(std::fabs(ratio - std::tanh(0.5)) <= 3 * se);
  }

  TEST_CASE("prefix cascade term is small along typical paths") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 18, 9);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.5}}), s);
    RngStream r(9, 1);
    double y_term = 0;
    for (int p = 0; p < 100; ++p) y_term += std::fabs(sample_path(t, 0, r).log_y[9]) / 9 / 100;
    CHECK(y_term <= 0.1);
  }

  TEST_CASE("L_n and Z_n") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 20, 10);
    const QGrid g = QGrid::box({0.0}, {0.4}, {5});
    const auto t = build_cascade(run, g, s);
    for (std::size_t qi = 0; qi < g.size(); ++qi) {
      // lambda = 0 gives the total mass.
      CHECK(L_n(t, qi, Vec{0.0}) == doctest::Approx(t.log_total_mass(qi) / 20).epsilon(1e-12));
      CHECK(Z_n(t, qi, Vec{0.0}) == doctest::Approx(std::exp(t.log_total_mass(qi))).epsilon(1e-12));
      for (double l : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
        const Vec lam{l};
        // Both routes and the log Z identity.
        const double a = L_n(t, qi, lam);
        CHECK(a == doctest::Approx(L_n(s, run.frame(20), g[qi], lam)).epsilon(1e-10));
        const double target = log_mgf(s, add(g[qi], lam)) - log_mgf(s, g[qi]);
        CHECK(log_Z_n(t, qi, lam) == doctest::Approx(20 * (a - target)).epsilon(1e-10));
      }
    }
    const std::size_t q3 = 3;  // q = 0.3
    REQUIRE(g[q3][0] == doctest::Approx(0.3));
    CHECK(std::fabs(L_n(t, q3, Vec{0.2}) - (log_mgf(s, Vec{0.5}) - log_mgf(s, Vec{0.3}))) <= 0.05);
    CHECK(std::fabs(log_Z_n(t, q3, Vec{0.2})) / 20 <= 0.1);
  }

  TEST_CASE("concentration mass") {
    const auto s = ModelSpec::binary_rademacher(1);
    const auto run = grow(s, 12, 11);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.5}}), s);
    const auto big = concentration_mass(t, 0, 2.5);
    REQUIRE(big.size() == 12);
    for (const auto& row : big) {
      CHECK(row.mass == 0.0);
      CHECK(std::isinf(row.log_mass));
    }
    // Brute force at level 12.
    const auto w = measure_weights(t, 12);
    const auto& f = run.frame(12);
    double outside = 0, total = 0;
    for (std::size_t u = 0; u < f.node_count(); ++u) {
      const double m = std::exp(w.for_q(0)[u]);
      total += m;
      if (std::fabs(f.path_sum_at(u)[0] / 12 - std::tanh(0.5)) >= 0.2) outside += m;
    }
    CHECK(concentration_mass(t, 0, 0.2).back().mass == doctest::Approx(outside / total).epsilon(1e-12));
  }

  TEST_CASE("paths csv layout") {
    const auto s = ModelSpec::binary_rademacher(2);
    const auto run = grow(s, 2, 12);
    const auto t = build_cascade(run, QGrid::from_points({Vec{0.1, 0.2}}), s);
    RngStream r(12, 1);
    const std::vector<SampledPath> paths{sample_path(t, 0, r)};
    std::ostringstream os;
    write_paths_csv(os, paths, 2);
    CHECK(os.str().rfind("path,k,s_0,s_1,log_mu,log_y\n", 0) == 0);
  }
}
