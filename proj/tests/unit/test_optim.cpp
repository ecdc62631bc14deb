#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sar/common.hpp"
#include "sar/optim.hpp"
#include "sar/rng.hpp"

using namespace sar;
using namespace sar::optim;

namespace {

struct Point {
  double x, y;
};

// Negative total travel: each robot starts at its origin and visits its route in order.
double tour_score(const Routes& routes, const std::vector<Point>& pts, const std::vector<Point>& origins) {
  double total = 0.0;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    Point at = origins[r];
    for (int c : routes[r]) {
      total += std::hypot(pts[c].x - at.x, pts[c].y - at.y);
      at = pts[c];
    }
  }
  return -total;
}

// Best score over every ordered partition into n_robots non-empty routes.
double exhaustive_best(int n, int robots, const RouteScore& score) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -INFINITY;
  do {
    if (robots == 1) {
      best = std::max(best, score({perm}));
      continue;
    }
    for (int cut = 1; cut < n; ++cut) {
      Routes r{{perm.begin(), perm.begin() + cut}, {perm.begin() + cut, perm.end()}};
      best = std::max(best, score(r));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("particle swarm on a sphere") {
  std::vector<Bounds> box(8, Bounds{0.0, 1.0});
  PsoOptions o;
  o.swarm_size = 50;
  o.iterations = 100;
  o.seed = 3;
  const Objective f = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - 0.5) * (v - 0.5);
    return -s;
  };
  const auto r = particle_swarm_maximize(f, box, o);
  CHECK(r.value >= -1e-3);
  CHECK(r.value == f(r.best));
  const auto again = particle_swarm_maximize(f, box, o);
  CHECK(again.best == r.best);
  CHECK(again.value == r.value);
}

TEST_CASE("particle swarm on a constant objective") {
  std::vector<Bounds> box{{-2.0, 3.0}, {10.0, 11.0}};
  const auto r = particle_swarm_maximize([](std::span<const double>) { return 7.5; }, box, PsoOptions{});
  CHECK(r.value == 7.5);
  CHECK((r.best[0] >= -2.0 && r.best[0] <= 3.0 && r.best[1] >= 10.0 && r.best[1] <= 11.0));
}

TEST_CASE("particle swarm stays in bounds and never loses its incumbent") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Bounds> box;
    for (int d = 0; d < 4; ++d) {
      const double lo = rng.uniform(-5, 5);
      box.push_back({lo, lo + rng.uniform(0.1, 4)});
    }
    bool in_bounds = true;
    const Objective f = [&](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        in_bounds = in_bounds && x[d] >= box[d].lo && x[d] <= box[d].hi;
        s += std::sin(3 * x[d]) * x[d];
      }
      return s;
    };
    double last = -INFINITY;
    bool monotone = true;
    PsoOptions o;
    o.swarm_size = 20;
    o.iterations = 30;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = particle_swarm_maximize(f, box, o, {}, [&](int, double v) {
      monotone = monotone && v >= last;
      last = v;
    });
    CHECK(in_bounds);
    CHECK(monotone);
    CHECK(r.value == last);
    CHECK(r.evaluations == 20u * 31u);
  }
}

TEST_CASE("particle swarm seeds are evaluated") {
  std::vector<Bounds> box{{0.0, 1.0}};
  const Objective spike = [](std::span<const double> x) { return x[0] == 0.123456789 ? 1.0 : 0.0; };
  const std::vector<std::vector<double>> seeds{{0.123456789}};
  PsoOptions o;
  o.iterations = 1;
  CHECK(particle_swarm_maximize(spike, box, o, seeds).value == 1.0);
}

TEST_CASE("option validation") {
  PsoOptions p;
  p.swarm_size = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  GaOptions g;
  g.mutation_rate = 1.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = GaOptions{};
  g.population = 1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("genetic routing on a line") {
  const std::vector<Point> pts{{3, 0}, {1, 0}, {2, 0}};
  const std::vector<Point> origin{{0, 0}};
  const RouteScore score = [&](const Routes& r) { return tour_score(r, pts, origin); };
  GaOptions o;
  o.seed = 5;
  const auto r = ga_route_assign(3, 1, score, o);
  CHECK(r.routes == Routes{{1, 2, 0}});
  CHECK(r.score == doctest::Approx(exhaustive_best(3, 1, score)));
  const auto again = ga_route_assign(3, 1, score, o);
  CHECK(again.routes == r.routes);
}

TEST_CASE("genetic routing with as many robots as clusters") {
  const std::vector<Point> pts{{0, 5}, {5, 0}, {5, 5}};
  const std::vector<Point> origins{{0, 0}, {0, 0}, {0, 0}};
  const RouteScore score = [&](const Routes& r) { return tour_score(r, pts, origins); };
  const auto r = ga_route_assign(3, 3, score, GaOptions{});
  CHECK(is_exact_partition(r.routes, 3, 3));
  for (const auto& route : r.routes) CHECK(route.size() == 1);
  double singles = 0;
  for (int c = 0; c < 3; ++c) singles += tour_score({{c}}, pts, {{0, 0}});
  CHECK(r.score == doctest::Approx(singles));
  CHECK_THROWS_AS(ga_route_assign(2, 3, score, GaOptions{}), ConfigError);
}

TEST_CASE("every genetic population is an exact partition") {
  Rng rng(8);
  std::vector<Point> pts;
  for (int i = 0; i < 9; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
  const std::vector<Point> origins{{0, 0}, {100, 0}, {50, 100}};
  bool ok = true;
  int generations = 0;
  GaOptions o;
  o.generations = 40;
  ga_route_assign(9, 3, [&](const Routes& r) { return tour_score(r, pts, origins); }, o,
                  [&](int, const std::vector<Routes>& pop) {
                    ++generations;
                    for (const auto& r : pop) ok = ok && is_exact_partition(r, 9, 3);
                  });
  CHECK(ok);
  CHECK(generations >= 40);
  CHECK_FALSE(is_exact_partition({{0, 1}, {1, 2}}, 3, 2));
  CHECK_FALSE(is_exact_partition({{0, 1, 2}, {}}, 3, 2));
}

TEST_CASE("genetic routing matches exhaustive search on small instances") {
  int hits = 0;
  for (int run = 0; run < 50; ++run) {
    Rng rng(stream_seed({2024, static_cast<std::uint64_t>(run)}));
    const int n = 5 + static_cast<int>(rng.below(4));  // 5..8 clusters
    const int robots = 1 + static_cast<int>(rng.below(2));
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    const std::vector<Point> origins{{rng.uniform(0, 100), 0}, {rng.uniform(0, 100), 100}};
    const RouteScore score = [&](const Routes& r) { return tour_score(r, pts, origins); };
    GaOptions o;
    o.seed = static_cast<std::uint64_t>(run);
    const auto r = ga_route_assign(n, robots, score, o);
    hits += std::abs(r.score - exhaustive_best(n, robots, score)) < 1e-9;
  }
  MESSAGE("GA matched the exhaustive optimum in " << hits << " of 50 runs");
  CHECK(hits >= 45);
}
