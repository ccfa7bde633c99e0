#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "brwmf/errors.hpp"
#include "brwmf/pressure.hpp"

using namespace brwmf;

namespace {

LevelFrame binary_level(std::size_t n, std::uint64_t seed) {
  RngStream r(seed, 0);
  auto run = run_to_depth(ModelSpec::binary_rademacher(1), n, GrowthMode::Materialize, kDefaultNodeBudget, r);
  return run.frames.back();
}

double brute_log_partition(const LevelFrame& f, const Vec& q) {
  long double s = 0;
  for (std::size_t u = 0; u < f.node_count(); ++u) s += std::exp(static_cast<long double>(dot(q, f.path_sum_at(u))));
  return static_cast<double>(std::log(s));
}

}  // namespace

TEST_SUITE("pressure") {
  TEST_CASE("log partition against brute force, every kernel") {
    const auto f = binary_level(12, 1);
    for (double q : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
      CHECK(log_partition(f, Vec{q}, kernels::scalar_kernels()) == doctest::Approx(brute_log_partition(f, {q})).epsilon(1e-13));
      CHECK(log_partition(f, Vec{q}) == doctest::Approx(brute_log_partition(f, {q})).epsilon(1e-13));
    }
  }

  TEST_CASE("q = 0 counts nodes") {
    RngStream r(2, 0);
    const auto run = run_to_depth(ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0), 9, GrowthMode::Materialize,
                                  kDefaultNodeBudget, r);
    const auto& f = run.last();
    CHECK(empirical_pressure(f, Vec{0.0}) == doctest::Approx(std::log(double(f.node_count())) / 9).epsilon(1e-14));
    CHECK_THROWS(empirical_pressure(run.frame(0), Vec{0.0}));
  }

  TEST_CASE("depth-20 pressure at q = 1 is near the log-mgf") {
    const auto f = binary_level(20, 3);
    const double target = std::log(2.0) + std::log(std::cosh(1.0));
    CHECK(std::fabs(empirical_pressure(f, Vec{1.0}) - target) <= 0.05);
  }

  TEST_CASE("permuting node order changes nothing beyond rounding") {
    auto f = binary_level(10, 4);
    const double before = log_partition(f, Vec{0.8});
    std::vector<std::size_t> perm(f.node_count());
    std::iota(perm.begin(), perm.end(), 0);
    RngStream r(4, 1);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[r.next_u64() % i]);
    LevelFrame g = f;
    for (std::size_t u = 0; u < perm.size(); ++u) g.path_sum[u] = f.path_sum[perm[u]];
    CHECK(std::fabs(log_partition(g, Vec{0.8}) - before) <= 1e-12 * std::fabs(before));
  }

  TEST_CASE("phi closed form") {
    const auto s = ModelSpec::binary_rademacher(1);
    for (double q : {-1.0, 0.0, 0.5, 2.0}) CHECK(phi(s, 1.0, Vec{q}) == 1.0);
    CHECK(phi(s, 2.0, Vec{0.5}) ==
          doctest::Approx(std::cosh(1.0) / (2 * std::cosh(0.5) * std::cosh(0.5))).epsilon(1e-13));
    for (double p : {1.1, 1.5, 2.0}) CHECK(phi(s, p, Vec{0.0}) == doctest::Approx(std::pow(2.0, 1 - p)).epsilon(1e-13));
    CHECK_THROWS(phi(s, 0.5, Vec{0.0}));
  }

  TEST_CASE("find_pK") {
    const auto s = ModelSpec::binary_rademacher(1);
    CHECK(find_pK(s, QGrid::from_points({Vec{0.0}})) == 2.0);
    const QGrid grid = QGrid::box({-1.0}, {1.0}, {21});
    const double p = find_pK(s, grid);
    CHECK(p > 1.0);
    CHECK(p <= 2.0);
    double worst = 0;
    for (const auto& q : grid.points()) worst = std::max(worst, phi(s, p, q));
    CHECK(worst < 1.0);
    // Lattice maximality: one step further breaks the bound (unless capped).
    if (p < 2.0) {
      double next = 0;
      for (const auto& q : grid.points()) next = std::max(next, phi(s, p + 1e-3, q));
      CHECK(next >= 1.0);
    }
    // Gaussian model outside J is rejected.
    const auto g = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0);
    CHECK_THROWS_AS(find_pK(g, QGrid::from_points({Vec{1.5, 0.0}})), ConfigError);
  }

  TEST_CASE("find_pK reports infeasible grids near the boundary") {
    const auto g = ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0);
    const double edge = std::sqrt(2 * std::log(2.0));
    CHECK_THROWS_AS(find_pK(g, QGrid::from_points({Vec{edge * (1 - 1e-6)}})), InfeasibleGrid);
  }

  TEST_CASE("domain scan: gaussian circle and rademacher everywhere") {
    const auto g = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0);
    const QGrid grid = QGrid::box({-2.0, -2.0}, {2.0, 2.0}, {41, 41});
    const std::vector<double> gam{1.5, 2.0};
    const auto scan = domain_scan(g, grid, gam);
    const double radius = std::sqrt(2 * std::log(2.0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = norm(grid[i]);
      if (std::fabs(r - radius) > 0.1 * std::sqrt(2.0)) CHECK(bool(scan.in_J[i]) == (r < radius));
      CHECK(bool(scan.in_calJ[i]) == (scan.in_J[i] && scan.in_Omega1[i]));
    }
    const auto r = ModelSpec::binary_rademacher(1);
    const QGrid wide = QGrid::box({-10.0}, {10.0}, {201});
    const auto rs = domain_scan(r, wide, gam);
    CHECK(rs.count_calJ() == wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i) {
      CHECK(rs.entropy[i] > 0.0);
      CHECK(rs.alpha_image[i][0] == doctest::Approx(std::tanh(wide[i][0])));
    }
  }

  TEST_CASE("pressure and domain csv layout") {
    const auto f = binary_level(3, 5);
    const QGrid grid = QGrid::box({-1.0}, {1.0}, {3});
    const auto rows = pressure_rows(ModelSpec::binary_rademacher(1), f, grid);
    REQUIRE(rows.size() == 3);
    std::ostringstream os;
    write_pressure_csv(os, rows, 1);
    CHECK(os.str().rfind("n,q_0,P_n,P_tilde,gap\n", 0) == 0);
    const std::vector<double> gam{2.0};
    std::ostringstream ds;
    write_domain_csv(ds, domain_scan(ModelSpec::binary_rademacher(1), grid, gam));
    CHECK(ds.str().rfind("q_0,in_J,in_Omega1,in_calJ,entropy,alpha_0\n", 0) == 0);
  }
}
