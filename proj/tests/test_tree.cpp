#include <doctest.h>

#include <cmath>
#include <sstream>

#include "brwmf/errors.hpp"
#include "brwmf/tree.hpp"

using namespace brwmf;

TEST_SUITE("tree") {
  TEST_CASE("first level of a binary tree") {
    const auto s = ModelSpec::binary_rademacher(1);
    RngStream r(1, 0);
    const auto f = grow_level(s, LevelFrame::root(1), r);
    REQUIRE(f.node_count() == 2);
    CHECK(f.depth == 1);
    for (std::size_t u = 0; u < 2; ++u) {
      CHECK(std::fabs(f.path_sum_at(u)[0]) == 1.0);
      CHECK(f.parent_index[u] == 0);
    }
  }

  TEST_CASE("children are parent-major and path sums add up") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.5, {0.2, -0.1}, 0.7);
    RngStream r(2, 0);
    const TreeRun run = run_to_depth(s, 6, GrowthMode::Materialize, kDefaultNodeBudget, r);
    REQUIRE(run.complete);
    for (std::size_t k = 1; k <= 6; ++k) {
      const auto& parents = run.frame(k - 1);
      const auto& kids = run.frame(k);
      const auto off = child_offsets(kids, parents.node_count());
      REQUIRE(off.size() == parents.node_count() + 1);
      CHECK(off.back() == kids.node_count());
      for (std::size_t u = 0; u < kids.node_count(); ++u) {
        if (u > 0) CHECK(kids.parent_index[u - 1] <= kids.parent_index[u]);
        const Vec sp = parents.path_sum_at(kids.parent_index[u]);
        const Vec x = kids.displacement_at(u);
        const Vec sk = kids.path_sum_at(u);
        for (std::size_t j = 0; j < 2; ++j) CHECK(sk[j] == sp[j] + x[j]);
      }
      // Every parent has at least one child under 1 + Poisson.
      for (std::size_t u = 0; u < parents.node_count(); ++u) CHECK(off[u + 1] > off[u]);
    }
  }

  TEST_CASE("depth 20 binary tree has 2^20 leaves") {
    RngStream r(3, 0);
    std::size_t leaves = 0;
    const LevelSink sinks[] = {[&](const LevelFrame& f) {
      if (f.depth == 20) leaves = f.node_count();
    }};
    const auto run = run_to_depth(ModelSpec::binary_rademacher(1), 20, GrowthMode::Stream, kDefaultNodeBudget, r, sinks);
    CHECK(leaves == 1048576);
    CHECK(run.complete);
    CHECK_THROWS_AS(run.frame(3), UsageError);
  }

  TEST_CASE("depth zero is the root only") {
    RngStream r(4, 0);
    const auto run = run_to_depth(ModelSpec::binary_rademacher(2), 0, GrowthMode::Materialize, kDefaultNodeBudget, r);
    REQUIRE(run.frames.size() == 1);
    CHECK(run.frame(0).node_count() == 1);
    CHECK(run.frame(0).path_sum == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("mean population grows like (E N)^n") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.0}, 1.0);
    const int reps = 200;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < reps; ++i) {
      RngStream r(5, i);
      std::size_t count = 0;
      const LevelSink sinks[] = {[&](const LevelFrame& f) { count = f.node_count(); }};
      run_to_depth(s, 12, GrowthMode::Stream, kDefaultNodeBudget, r, sinks);
      sum += double(count);
      sum2 += double(count) * double(count);
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
    CHECK(std::fabs(mean - 4096.0) < 3 * se);
  }

  TEST_CASE("same seed gives identical frames; stream and materialize agree") {
    const auto s = ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.5}, 1.0);
    RngStream a(6, 1), b(6, 1), c(6, 1);
    const auto ra = run_to_depth(s, 8, GrowthMode::Materialize, kDefaultNodeBudget, a);
    const auto rb = run_to_depth(s, 8, GrowthMode::Materialize, kDefaultNodeBudget, b);
    std::vector<LevelFrame> streamed;
    const LevelSink sinks[] = {[&](const LevelFrame& f) { streamed.push_back(f); }};
    run_to_depth(s, 8, GrowthMode::Stream, kDefaultNodeBudget, c, sinks);
    REQUIRE(streamed.size() == 9);
    for (std::size_t k = 0; k <= 8; ++k) {
      CHECK(ra.frame(k).path_sum == rb.frame(k).path_sum);
      CHECK(ra.frame(k).parent_index == rb.frame(k).parent_index);
      CHECK(ra.frame(k).path_sum == streamed[k].path_sum);
    }
  }

  TEST_CASE("budget overrun yields a partial run naming the level") {
    RngStream r(7, 0);
    const auto run = run_to_depth(ModelSpec::binary_rademacher(1), 12, GrowthMode::Materialize, 1000, r);
    CHECK_FALSE(run.complete);
    CHECK(run.deepest_level == 9);  // level 10 would hold 1024 > 1000 nodes
    CHECK(run.frames.size() == 10);
    CHECK(run.failure.find("level") != std::string::npos);
    RngStream r2(7, 0);
    CHECK_THROWS_AS(grow_level(ModelSpec::binary_rademacher(1), run.last(), r2, 256), BudgetExceeded);
  }

  TEST_CASE("frame csv layout") {
    RngStream r(8, 0);
    const auto f = grow_level(ModelSpec::binary_rademacher(2), LevelFrame::root(2), r);
    std::ostringstream os;
    write_frame_csv(os, f);
    std::string line;
    std::istringstream in(os.str());
    std::getline(in, line);
    CHECK(line == "level,node_index,parent_index,S_0,S_1");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
  }
}
