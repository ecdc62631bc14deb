#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "golden.hpp"
#include "oracles.hpp"
#include "sar/parent.hpp"

using namespace sar;
using namespace sar::parent;
using belief::Layer;

namespace {

ParentParams small_params(int side) {
  ParentParams p;
  p.cluster_side = side;
  return p;
}

std::vector<Cell> passable_members(const FuzzyCluster& c, const Grid<double>& pass, double threshold) {
  std::vector<Cell> out;
  for (const auto& m : c.members)
    if (pass[m.cell] >= threshold) out.push_back(m.cell);
  return out;
}

std::vector<Cell> sorted(std::vector<Cell> v) {
  std::sort(v.begin(), v.end(), RowMajorLess{});
  return v;
}

belief::FuzzyMapSet uniform_maps(int w, int h, double human, double expl, double pass) {
  belief::FuzzyMapSet m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      m.layer(Layer::human_detection_reward)[Cell{x, y}] = human;
      m.layer(Layer::exploration_reward)[Cell{x, y}] = expl;
      m.layer(Layer::passability)[Cell{x, y}] = pass;
    }
  return m;
}

}  // namespace

TEST_CASE("cluster initialization") {
  ParentParams p;
  auto clusters = init_clusters(200, 200, p);
  CHECK(clusters.size() == 25);

  CHECK(fringe_membership(0) == 1.0);
  CHECK(fringe_membership(1) == doctest::Approx(golden::kFringe1).epsilon(golden::kTol));
  CHECK(fringe_membership(2) == doctest::Approx(golden::kFringe2).epsilon(golden::kTol));
  CHECK(fringe_membership(3) == doctest::Approx(golden::kFringe3).epsilon(golden::kTol));
  CHECK(fringe_membership(4) == 0.0);

  // interior cluster (1,1): square 40..79 plus a 3-cell fringe
  const auto& c = clusters[6];
  CHECK(c.members.size() == 46u * 46u);
  CHECK(c.mu({40, 40}) == 1.0);
  CHECK(c.mu({39, 50}) == golden::kFringe1);
  CHECK(c.mu({38, 50}) == golden::kFringe2);
  CHECK(c.mu({37, 50}) == golden::kFringe3);
  CHECK(c.mu({36, 50}) == 0.0);
  CHECK(c.mu({37, 38}) == golden::kFringe3);  // depth is the Chebyshev distance to the square
  CHECK(c.center_x == doctest::Approx(59.5));
  CHECK(c.center_y == doctest::Approx(59.5));
  CHECK(c.score == p.initial_score);
  CHECK(c.state == ClusterState::unexplored);

  // every cell is an interior member of exactly one cluster
  for (int y = 0; y < 200; y += 7)
    for (int x = 0; x < 200; x += 3) {
      int full = 0;
      for (const auto& k : clusters) full += k.mu({x, y}) == 1.0;
      CHECK(full == 1);
    }

  CHECK_THROWS_AS(init_clusters(210, 200, p), ConfigError);
  CHECK_THROWS_AS(init_clusters(200, 190, p), ConfigError);
  ParentParams bad = p;
  bad.s_exp = 0.5;
  CHECK_THROWS_AS(init_clusters(200, 200, bad), ConfigError);
}

TEST_CASE("cluster scores") {
  auto p = small_params(10);
  p.overlap_depth = 0;
  auto clusters = init_clusters(20, 20, p);

  SUBCASE("constant field without fringe scores the constant") {
    for (double v : {0.0, 0.3, 0.77, 1.0}) {
      auto maps = uniform_maps(20, 20, v, 0.0, 1.0);
      CHECK(cluster_score(clusters[0], maps, p) == doctest::Approx(v).epsilon(1e-12));
    }
  }

  SUBCASE("score is homogeneous in the cell scores") {
    p.overlap_depth = 3;
    auto fr = init_clusters(20, 20, p);
    const double a = cluster_score(fr[0], uniform_maps(20, 20, 0.4, 0.0, 1.0), p);
    const double b = cluster_score(fr[0], uniform_maps(20, 20, 0.8, 0.0, 1.0), p);
    CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
    CHECK(a < 0.4);  // fringe cells count with reduced membership
  }

  SUBCASE("power mean is pulled above the arithmetic mean") {
    auto maps = uniform_maps(20, 20, 0.2, 0.0, 1.0);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 10; ++x) maps.layer(Layer::human_detection_reward)[Cell{x, y}] = 0.8;
    const double s = cluster_score(clusters[0], maps, p);
    CHECK(s > 0.5);
    CHECK(s < 0.8);
  }

  SUBCASE("passability caps the cell score") {
    auto maps = uniform_maps(20, 20, 0.9, 0.6, 0.3);
    CHECK(cell_score(maps, {3, 3}) == doctest::Approx(0.3));
  }

  SUBCASE("mission-start cell score sits just below one half") {
    belief::ProbabilityMap prob(20, 20, belief::ProbabilityMap::default_prior());
    auto maps = belief::initial_fuzzy_maps(prob, belief::MembershipBank::named("v2"));
    const double s = cell_score(maps, {5, 5});
    CHECK(s < 0.5);
    CHECK(s > 0.45);
    CHECK(cluster_score(clusters[0], maps, p) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("cluster state machine") {
  auto p = small_params(10);
  auto clusters = init_clusters(40, 10, p);  // ids 0..3 in a row
  std::vector<Cell> robots{{5, 5}};
  std::vector<ClusterRoute> routes{{0, {0, 1}, {0.0, 10.0}}};

  SUBCASE("low score becomes explored regardless of routing") {
    clusters[0].score = 0.21;
    update_cluster_states(clusters, routes, robots, p);
    CHECK(clusters[0].state == ClusterState::explored);
  }
  SUBCASE("routed clusters") {
    for (auto& c : clusters) c.score = 0.6;
    update_cluster_states(clusters, routes, robots, p);
    CHECK(clusters[0].state == ClusterState::being_explored);
    CHECK(clusters[1].state == ClusterState::to_be_explored);
    CHECK(clusters[2].state == ClusterState::unexplored);
  }
  SUBCASE("first stop without the robot inside is still pending") {
    for (auto& c : clusters) c.score = 0.6;
    std::vector<Cell> far{{35, 5}};
    update_cluster_states(clusters, routes, far, p);
    CHECK(clusters[0].state == ClusterState::to_be_explored);
  }
  SUBCASE("hysteresis between the two thresholds") {
    for (auto& c : clusters) {
      c.state = ClusterState::explored;
      c.score = 0.3;
    }
    clusters[2].score = 0.41;
    update_cluster_states(clusters, routes, robots, p);
    CHECK(clusters[0].state == ClusterState::explored);  // routed and inside, but no jump back
    CHECK(clusters[1].state == ClusterState::explored);
    CHECK(clusters[2].state == ClusterState::unexplored);
    CHECK(clusters[3].state == ClusterState::explored);
  }
  SUBCASE("explored cluster reopened with a route") {
    clusters[0].state = ClusterState::explored;
    clusters[0].score = 0.45;
    update_cluster_states(clusters, routes, robots, p);
    CHECK(clusters[0].state == ClusterState::being_explored);
  }
}

TEST_CASE("split and merge on a walled cluster") {
  // Three 10x10 clusters in a row. A full-height wall at x=13 cuts cluster 1
  // into a western piece that reaches into cluster 0 and a larger eastern
  // piece. A ring of walls around (17,5) encloses a single-cell pocket.
  auto p = small_params(10);
  auto clusters = init_clusters(30, 10, p);
  Grid<double> pass(30, 10, 1.0);
  for (int y = 0; y < 10; ++y) pass[Cell{13, y}] = 0.0;
  for (int y = 4; y <= 6; ++y)
    for (int x = 16; x <= 18; ++x)
      if (!(x == 17 && y == 5)) pass[Cell{x, y}] = 0.0;
  const std::vector<Cell> robots{{2, 5}};
  const auto before = clusters;

  auto rep = split_merge_clusters(clusters, 1, pass, robots, p);
  REQUIRE(rep.split);

  std::vector<Cell> west, east;
  for (int y = 0; y < 10; ++y)
    for (int x = 7; x <= 22; ++x) {
      if (x < 13) west.push_back({x, y});
      else if (x > 13 && pass[Cell{x, y}] > 0.0 && !(x == 17 && y == 5)) east.push_back({x, y});
    }
  CHECK(rep.kept == sorted(east));
  REQUIRE(rep.merged.size() == 1);
  CHECK(rep.merged[0] == sorted(west));
  CHECK(rep.merged_into == std::vector<int>{0});
  REQUIRE(rep.deleted.size() == 1);
  CHECK(rep.deleted[0] == std::vector<Cell>{{17, 5}});
  CHECK(rep.retained.empty());

  // the source lost both pieces; walls stay with it
  for (Cell c : west) CHECK(clusters[1].mu(c) == 0.0);
  CHECK(clusters[1].mu({17, 5}) == 0.0);
  CHECK(clusters[1].mu({13, 4}) == 1.0);
  CHECK(clusters[1].mu({15, 2}) == 1.0);
  CHECK(clusters[1].center_x > before[1].center_x);

  // the receiver keeps its own memberships and gains the rest
  CHECK(clusters[0].mu({10, 3}) == golden::kFringe1);
  CHECK(clusters[0].mu({12, 3}) == golden::kFringe3);
  CHECK(clusters[0].mu({9, 3}) == 1.0);
  CHECK(clusters[0].center_x == doctest::Approx(before[0].center_x).epsilon(1e-12));
  CHECK(clusters[2].members.size() == before[2].members.size());

  SUBCASE("unsplit cluster is left alone") {
    auto again = split_merge_clusters(clusters, 0, pass, robots, p);
    CHECK_FALSE(again.split);
    CHECK(again.kept.size() == clusters[0].members.size());
  }
}

TEST_CASE("passable components match a flood fill on random masks") {
  Rng rng(4242);
  auto p = small_params(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto clusters = init_clusters(36, 36, p);
    const double wall = rng.uniform(0.15, 0.55);
    Grid<double> pass(36, 36, 1.0);
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 36; ++x)
        if (rng.bernoulli(wall)) pass[Cell{x, y}] = rng.uniform(0.0, 0.099);

    const auto& c = clusters[4];
    const auto comps = passable_components(c.members, pass, p.wall_threshold);
    oracle::CellSet set;
    for (Cell x : passable_members(c, pass, p.wall_threshold)) set.insert(x);
    const auto ref = oracle::flood_fill(set);
    REQUIRE(comps.size() == ref.size());
    for (std::size_t i = 0; i < comps.size(); ++i)
      CHECK(comps[i] == std::vector<Cell>(ref[i].begin(), ref[i].end()));

    // split/merge accounts for every passable support cell exactly once
    std::vector<Cell> robots;
    for (int r = 0; r < 2; ++r) robots.push_back({static_cast<int>(rng.below(36)), static_cast<int>(rng.below(36))});
    const auto original = clusters;
    auto rep = split_merge_clusters(clusters, 4, pass, robots, p);
    std::vector<Cell> all = rep.kept;
    for (const auto* group : {&rep.merged, &rep.deleted, &rep.retained})
      for (const auto& g : *group) all.insert(all.end(), g.begin(), g.end());
    const auto support = passable_members(original[4], pass, p.wall_threshold);
    CHECK(sorted(all) == support);
    CHECK(std::set<Cell, RowMajorLess>(all.begin(), all.end()).size() == all.size());
    if (!ref.empty()) {
      std::size_t largest = 0;
      for (const auto& r : ref) largest = std::max(largest, r.size());
      CHECK(rep.kept.size() == largest);
    }
    CHECK(rep.merged.size() == rep.merged_into.size());
    for (std::size_t i = 0; i < rep.merged.size(); ++i) {
      const auto& recv = clusters[static_cast<std::size_t>(rep.merged_into[i])];
      for (Cell x : rep.merged[i]) {
        CHECK(recv.mu(x) > 0.0);
        CHECK(clusters[4].mu(x) == 0.0);
      }
    }
    for (const auto& d : rep.deleted)
      for (Cell x : d) {
        CHECK(clusters[4].mu(x) == 0.0);
        for (Cell r : robots) CHECK_FALSE(x == r);
      }
    for (const auto& k : clusters)
      CHECK(std::is_sorted(k.members.begin(), k.members.end(),
                           [](const Membership& a, const Membership& b) { return RowMajorLess{}(a.cell, b.cell); }));
  }
}

TEST_CASE("parent weights") {
  CHECK(parent_weight(10.0, 0.98) == doctest::Approx(golden::kParentWeight_10).epsilon(golden::kTol));
  CHECK(parent_weight(0.0, 0.98) == 1.0);
  CHECK(parent_weight(100.0, 0.98, 0.9) == 0.9);
  CHECK(parent_weight(1.0, 1.0) == 1.0);
  double prev = 1.0;
  for (double d = 1.0; d < 500.0; d *= 1.7) {
    const double w = parent_weight(d, 0.98);
    CHECK(w < prev);
    CHECK(w > 0.0);
    prev = w;
  }
}

TEST_CASE("high-level routing") {
  optim::GaOptions ga;
  ga.seed = 11;

  SUBCASE("one robot and equal scores follow the shortest tour") {
    auto p = small_params(40);
    auto clusters = init_clusters(120, 40, p);
    for (auto& c : clusters) c.score = 0.8;
    std::vector<Cell> robots{{5, 20}};
    auto routes = high_level_plan(clusters, robots, p, ga);
    REQUIRE(routes.size() == 1);
    CHECK(routes[0].clusters == std::vector<int>{0, 1, 2});
    REQUIRE(routes[0].planned_distance.size() == 3);
    CHECK(routes[0].planned_distance[2] ==
          doctest::Approx(routes[0].planned_distance[0] + clusters[2].center_x - clusters[0].center_x));

    robots = {{115, 20}};
    routes = high_level_plan(clusters, robots, p, ga);
    CHECK(routes[0].clusters == std::vector<int>{2, 1, 0});
  }

  SUBCASE("routes partition the open clusters") {
    auto p = small_params(40);
    auto clusters = init_clusters(120, 120, p);
    Rng rng(3);
    for (auto& c : clusters) c.score = rng.uniform(0.3, 0.9);
    clusters[4].state = ClusterState::explored;
    std::vector<Cell> robots{{5, 5}, {60, 60}, {110, 100}};
    auto routes = high_level_plan(clusters, robots, p, ga);
    REQUIRE(routes.size() == 3);
    std::vector<int> seen;
    for (std::size_t r = 0; r < routes.size(); ++r) {
      CHECK(routes[r].robot == static_cast<int>(r));
      CHECK(routes[r].clusters.size() == routes[r].planned_distance.size());
      CHECK(std::is_sorted(routes[r].planned_distance.begin(), routes[r].planned_distance.end()));
      seen.insert(seen.end(), routes[r].clusters.begin(), routes[r].clusters.end());
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3, 5, 6, 7, 8});
  }

  SUBCASE("fewer open clusters than robots") {
    auto p = small_params(40);
    auto clusters = init_clusters(120, 40, p);
    clusters[0].state = ClusterState::explored;
    clusters[1].state = ClusterState::explored;
    clusters[2].score = 0.7;
    std::vector<Cell> robots{{5, 5}, {100, 20}, {60, 20}};
    auto routes = high_level_plan(clusters, robots, p, ga);
    CHECK(routes[0].clusters.empty());
    CHECK(routes[1].clusters == std::vector<int>{2});
    CHECK(routes[2].clusters.empty());
  }
}

TEST_CASE("high-level weight transform") {
  ParentParams p;
  p.sigma = 60.0;
  p.eta = 170.0;
  FuzzyCluster c;
  c.members = {{{50, 50}, 1.0}, {{51, 50}, 0.25}};
  c.center_x = 50.0;
  c.center_y = 50.0;

  c.state = ClusterState::being_explored;
  CHECK(child_weight_transform({51, 50}, c, {0, 0}, p) == 0.25);
  CHECK(child_weight_transform({90, 90}, c, {0, 0}, p) == 0.0);

  c.state = ClusterState::to_be_explored;
  const Cell robot{110, 50};  // D = sigma
  CHECK(child_weight_transform({80, 50}, c, robot, p) ==
        doctest::Approx(golden::kGaussianAtSigma).epsilon(golden::kTol));
  CHECK(child_weight_transform({0, 50}, c, robot, p) ==
        doctest::Approx(golden::kGaussianAtSigma).epsilon(golden::kTol));
  CHECK(child_weight_transform({50, 115}, c, robot, p) == 0.0);  // farther from the center than the robot
  CHECK(child_weight_transform({60, 50}, c, {220, 50}, p) == 0.0);  // D >= eta
  CHECK(child_weight_transform({60, 50}, c, {219, 50}, p) > 0.0);

  c.state = ClusterState::unexplored;
  CHECK(child_weight_transform({50, 50}, c, robot, p) == 0.0);
  c.state = ClusterState::explored;
  CHECK_FALSE(child_weight_grid(c, robot, 240, 120, p).has_value());

  c.state = ClusterState::to_be_explored;
  auto g = child_weight_grid(c, robot, 240, 120, p);
  REQUIRE(g.has_value());
  CHECK((*g)[Cell{80, 50}] == doctest::Approx(golden::kGaussianAtSigma));
  CHECK((*g)[Cell{200, 50}] == 0.0);
  CHECK_FALSE(child_weight_grid(c, {230, 50}, 240, 120, p).has_value());

  ParentParams dflt;
  CHECK(dflt.effective_eta() == 80.0);
}
