#include "sar/parent.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "sar/rng.hpp"

namespace sar::parent {

const char* to_string(ClusterState s) {
  switch (s) {
    case ClusterState::unexplored: return "unexplored";
    case ClusterState::to_be_explored: return "to_be_explored";
    case ClusterState::being_explored: return "being_explored";
    case ClusterState::explored: return "explored";
  }
  return "?";
}

void ParentParams::validate() const {
  if (cluster_side < 1) throw ConfigError("cluster_side must be >= 1");
  if (overlap_depth < 0 || overlap_depth > 3) throw ConfigError("overlap_depth must lie in [0, 3]");
  if (!(s_exp < s_unexp)) throw ConfigError("s_exp must be smaller than s_unexp");
  if (!(gamma_parent > 0.0 && gamma_parent <= 1.0)) throw ConfigError("gamma_parent must lie in (0, 1]");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(w_cluster > 0.0 && w_goal_parent > 0.0)) throw ConfigError("parent exponents must be > 0");
  if (!(initial_score >= 0.0 && initial_score <= 1.0)) throw ConfigError("initial_score must lie in [0, 1]");
}

double FuzzyCluster::mu(Cell c) const {
  auto it = std::lower_bound(members.begin(), members.end(), c,
                             [](const Membership& m, Cell key) { return RowMajorLess{}(m.cell, key); });
  return (it != members.end() && it->cell == c) ? it->mu : 0.0;
}

void FuzzyCluster::recompute_center() {
  double sx = 0.0, sy = 0.0, sw = 0.0;
  for (const auto& m : members) {
    sx += m.mu * m.cell.x;
    sy += m.mu * m.cell.y;
    sw += m.mu;
  }
  if (sw > 0.0) {
    center_x = sx / sw;
    center_y = sy / sw;
  }
}

double FuzzyCluster::distance_to_center(Cell c) const { return std::hypot(c.x - center_x, c.y - center_y); }

double fringe_membership(int depth) {
  if (depth <= 0) return 1.0;
  const double v = 1.0 - depth / 4.0;
  return depth >= 4 ? 0.0 : v * v;
}

std::vector<FuzzyCluster> init_clusters(int width, int height, const ParentParams& params) {
  params.validate();
  const int side = params.cluster_side;
  if (width <= 0 || height <= 0 || width % side != 0 || height % side != 0)
    throw ConfigError("grid dimensions must be multiples of cluster_side");
  std::vector<FuzzyCluster> clusters;
  const int depth = params.overlap_depth;
  for (int by = 0; by < height / side; ++by) {
    for (int bx = 0; bx < width / side; ++bx) {
      FuzzyCluster c;
      c.id = static_cast<int>(clusters.size());
      const int x0 = bx * side, y0 = by * side, x1 = x0 + side - 1, y1 = y0 + side - 1;
      for (int y = std::max(0, y0 - depth); y <= std::min(height - 1, y1 + depth); ++y) {
        for (int x = std::max(0, x0 - depth); x <= std::min(width - 1, x1 + depth); ++x) {
          const int dx = x < x0 ? x0 - x : (x > x1 ? x - x1 : 0);
          const int dy = y < y0 ? y0 - y : (y > y1 ? y - y1 : 0);
          c.members.push_back({{x, y}, fringe_membership(std::max(dx, dy))});
        }
      }
      c.recompute_center();
      c.score = params.initial_score;
      clusters.push_back(std::move(c));
    }
  }
  return clusters;
}

double cell_score(const belief::FuzzyMapSet& maps, Cell c) {
  using belief::Layer;
  const double goals[2] = {maps.at(Layer::human_detection_reward, c), maps.at(Layer::exploration_reward, c)};
  const double constraints[1] = {maps.at(Layer::passability, c)};
  return fuzzy::cell_aggregated_score(goals, constraints);
}

double cluster_score(const FuzzyCluster& cluster, const belief::FuzzyMapSet& maps, const ParentParams& params) {
  fuzzy::CompensatedSum num, den;
  for (const auto& m : cluster.members) {
    num.add(std::pow(m.mu * cell_score(maps, m.cell), params.w_cluster));
    den.add(m.mu);
  }
  if (!(den.value() > 0.0)) return 0.0;
  return std::clamp(std::pow(num.value() / den.value(), 1.0 / params.w_cluster), 0.0, 1.0);
}

void update_cluster_states(std::vector<FuzzyCluster>& clusters, std::span<const ClusterRoute> routes,
                           std::span<const Cell> robots, const ParentParams& params) {
  for (auto& c : clusters) {
    if (c.score < params.s_exp) {
      c.state = ClusterState::explored;
      continue;
    }
    if (c.state == ClusterState::explored && c.score <= params.s_unexp) continue;
    ClusterState next = ClusterState::unexplored;
    for (const auto& r : routes) {
      for (std::size_t i = 0; i < r.clusters.size(); ++i) {
        if (r.clusters[i] != c.id) continue;
        const bool inside = i == 0 && static_cast<std::size_t>(r.robot) < robots.size() &&
                            c.contains(robots[static_cast<std::size_t>(r.robot)]);
        next = inside ? ClusterState::being_explored : ClusterState::to_be_explored;
      }
    }
    c.state = next;
  }
}

std::vector<std::vector<Cell>> passable_components(std::span<const Membership> cells, const Grid<double>& passability,
                                                   double threshold) {
  std::vector<std::vector<Cell>> comps;
  if (cells.empty()) return comps;
  int x0 = cells[0].cell.x, x1 = x0, y0 = cells[0].cell.y, y1 = y0;
  for (const auto& m : cells) {
    x0 = std::min(x0, m.cell.x);
    x1 = std::max(x1, m.cell.x);
    y0 = std::min(y0, m.cell.y);
    y1 = std::max(y1, m.cell.y);
  }
  // 0 = not a passable member, 1 = unvisited passable member, 2 = visited.
  Grid<std::uint8_t> mark(x1 - x0 + 1, y1 - y0 + 1, 0);
  for (const auto& m : cells)
    if (passability[m.cell] >= threshold) mark[Cell{m.cell.x - x0, m.cell.y - y0}] = 1;
  constexpr Cell kN4[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const auto& m : cells) {
    const Cell local{m.cell.x - x0, m.cell.y - y0};
    if (mark[local] != 1) continue;
    std::vector<Cell> comp;
    std::deque<Cell> queue{local};
    mark[local] = 2;
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      comp.push_back({c.x + x0, c.y + y0});
      for (Cell d : kN4) {
        const Cell n{c.x + d.x, c.y + d.y};
        if (!mark.contains(n) || mark[n] != 1) continue;
        mark[n] = 2;
        queue.push_back(n);
      }
    }
    std::sort(comp.begin(), comp.end(), RowMajorLess{});
    comps.push_back(std::move(comp));
  }
  return comps;
}

namespace {

Grid<std::uint8_t> reachable(const Grid<double>& passability, std::span<const Cell> robots, double threshold) {
  Grid<std::uint8_t> seen(passability.width(), passability.height(), 0);
  std::deque<Cell> queue;
  for (Cell r : robots)
    if (seen.contains(r) && !seen[r]) {
      seen[r] = 1;
      queue.push_back(r);
    }
  constexpr Cell kN8[] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Cell d : kN8) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (!seen.contains(n) || seen[n] || passability[n] < threshold) continue;
      seen[n] = 1;
      queue.push_back(n);
    }
  }
  return seen;
}

void erase_cells(FuzzyCluster& c, const std::vector<Cell>& cells) {
  std::vector<Membership> kept;
  kept.reserve(c.members.size());
  std::size_t j = 0;  // both lists are row-major
  for (const auto& m : c.members) {
    while (j < cells.size() && RowMajorLess{}(cells[j], m.cell)) ++j;
    if (j < cells.size() && cells[j] == m.cell) continue;
    kept.push_back(m);
  }
  c.members = std::move(kept);
}

void upsert_cells(FuzzyCluster& c, const std::vector<Membership>& cells) {
  std::map<Cell, double, RowMajorLess> all;
  for (const auto& m : c.members) all[m.cell] = m.mu;
  for (const auto& m : cells) all[m.cell] = m.mu;
  c.members.clear();
  for (const auto& [cell, mu] : all) c.members.push_back({cell, mu});
}

}  // namespace

SplitReport split_merge_clusters(std::vector<FuzzyCluster>& clusters, std::size_t index,
                                 const Grid<double>& passability, std::span<const Cell> robots,
                                 const ParentParams& params) {
  SplitReport report;
  auto comps = passable_components(clusters[index].members, passability, params.wall_threshold);
  if (comps.empty()) return report;
  std::size_t largest = 0;
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (comps[i].size() > comps[largest].size()) largest = i;
  report.kept = comps[largest];
  if (comps.size() == 1) return report;
  report.split = true;

  const auto reach = reachable(passability, robots, params.wall_threshold);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (i == largest) continue;
    const auto& comp = comps[i];
    auto& source = clusters[index];
    const bool can_reach = std::any_of(comp.begin(), comp.end(), [&](Cell c) { return reach[c] != 0; });
    if (!can_reach) {
      erase_cells(source, comp);
      report.deleted.push_back(comp);
      continue;
    }
    std::size_t best = clusters.size();
    double best_mean = 0.0;
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j == index) continue;
      double sum = 0.0;
      bool overlaps = false;
      for (Cell c : comp) {
        const double mu = clusters[j].mu(c);
        overlaps = overlaps || mu > 0.0;
        sum += mu;
      }
      const double mean = sum / static_cast<double>(comp.size());
      if (overlaps && (best == clusters.size() || mean > best_mean)) {
        best = j;
        best_mean = mean;
      }
    }
    if (best == clusters.size()) {
      report.retained.push_back(comp);
      continue;
    }
    std::vector<Membership> moved;
    for (Cell c : comp) {
      const double mu_recv = clusters[best].mu(c);
      moved.push_back({c, mu_recv > 0.0 ? mu_recv : source.mu(c)});
    }
    erase_cells(source, comp);
    upsert_cells(clusters[best], moved);
    clusters[best].recompute_center();
    report.merged.push_back(comp);
    report.merged_into.push_back(clusters[best].id);
  }
  clusters[index].recompute_center();
  return report;
}

double parent_weight(double cumulative_distance, double gamma_parent, double previous) {
  const double beta = std::pow(gamma_parent, cumulative_distance);
  if (!(beta > 0.0)) return previous;
  return std::max(1.0 / (-std::log(beta) + 1.0), previous);
}

double route_quality(const optim::Routes& routes, std::span<const FuzzyCluster> candidates,
                     std::span<const Cell> robots, const ParentParams& params) {
  if (candidates.empty()) return 0.0;
  fuzzy::CompensatedSum sum;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    double x = robots[r].x, y = robots[r].y, travelled = 0.0;
    for (int idx : routes[r]) {
      const auto& c = candidates[static_cast<std::size_t>(idx)];
      travelled += std::hypot(c.center_x - x, c.center_y - y);
      x = c.center_x;
      y = c.center_y;
      sum.add(fuzzy::weighted_goal_term(c.score, parent_weight(travelled, params.gamma_parent), params.w_goal_parent));
    }
  }
  return std::pow(sum.value() / static_cast<double>(candidates.size()), 1.0 / params.w_goal_parent);
}

std::vector<ClusterRoute> high_level_plan(std::span<const FuzzyCluster> clusters, std::span<const Cell> robots,
                                          const ParentParams& params, const optim::GaOptions& ga) {
  std::vector<FuzzyCluster> candidates;
  for (const auto& c : clusters)
    if (c.state != ClusterState::explored && !c.members.empty()) candidates.push_back(c);
  const int n_rob = static_cast<int>(robots.size());
  const int n_cl = static_cast<int>(candidates.size());

  optim::Routes routes(static_cast<std::size_t>(n_rob));
  if (n_cl >= n_rob && n_rob > 0) {
    routes = optim::ga_route_assign(
                 n_cl, n_rob, [&](const optim::Routes& r) { return route_quality(r, candidates, robots, params); }, ga)
                 .routes;
  } else {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].score > candidates[b].score; });
    std::vector<char> busy(robots.size(), 0);
    for (std::size_t idx : order) {
      std::size_t best = robots.size();
      for (std::size_t r = 0; r < robots.size(); ++r)
        if (!busy[r] && (best == robots.size() || candidates[idx].distance_to_center(robots[r]) <
                                                       candidates[idx].distance_to_center(robots[best])))
          best = r;
      busy[best] = 1;
      routes[best] = {static_cast<int>(idx)};
    }
  }

  std::vector<ClusterRoute> out;
  for (int r = 0; r < n_rob; ++r) {
    ClusterRoute route;
    route.robot = r;
    double x = robots[static_cast<std::size_t>(r)].x, y = robots[static_cast<std::size_t>(r)].y, travelled = 0.0;
    for (int idx : routes[static_cast<std::size_t>(r)]) {
      const auto& c = candidates[static_cast<std::size_t>(idx)];
      travelled += std::hypot(c.center_x - x, c.center_y - y);
      x = c.center_x;
      y = c.center_y;
      route.clusters.push_back(c.id);
      route.planned_distance.push_back(travelled);
    }
    out.push_back(std::move(route));
  }
  return out;
}

double child_weight_transform(Cell cell, const FuzzyCluster& assigned, Cell robot, const ParentParams& params) {
  switch (assigned.state) {
    case ClusterState::being_explored:
      return assigned.mu(cell);
    case ClusterState::to_be_explored: {
      const double d_robot = assigned.distance_to_center(robot);
      if (d_robot >= params.effective_eta()) return 0.0;
      if (assigned.distance_to_center(cell) > d_robot) return 0.0;
      return std::exp(-d_robot * d_robot / (2.0 * params.sigma * params.sigma));
    }
    default:
      return 0.0;
  }
}

std::optional<Grid<double>> child_weight_grid(const FuzzyCluster& assigned, Cell robot, int width, int height,
                                              const ParentParams& params) {
  Grid<double> g(width, height, 0.0);
  bool any = false;
  if (assigned.state == ClusterState::being_explored) {
    for (const auto& m : assigned.members) {
      g[m.cell] = m.mu;
      any = any || m.mu > 0.0;
    }
  } else {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double w = child_weight_transform({x, y}, assigned, robot, params);
        g[Cell{x, y}] = w;
        any = any || w > 0.0;
      }
  }
  if (!any) return std::nullopt;
  return g;
}

BilevelPlanner::BilevelPlanner(coord::MissionParams mission, ParentParams parent, optim::GaOptions ga)
    : mission_(std::move(mission)), params_(parent), ga_(ga) {
  params_.validate();
  ga_.validate();
}

void BilevelPlanner::replan(const coord::MissionState& state, std::span<const Cell> robots, MissionLog& log) {
  optim::GaOptions ga = ga_;
  ga.seed = stream_seed({state.env.seed, 0x706172656e74ULL, static_cast<std::uint64_t>(replans_++)});
  routes_ = high_level_plan(clusters_, robots, params_, ga);
  update_cluster_states(clusters_, routes_, robots, params_);

  for (const auto& c : clusters_) {
    int x0 = state.env.width(), y0 = state.env.height(), x1 = -1, y1 = -1;
    for (const auto& m : c.members) {
      x0 = std::min(x0, m.cell.x);
      y0 = std::min(y0, m.cell.y);
      x1 = std::max(x1, m.cell.x);
      y1 = std::max(y1, m.cell.y);
    }
    LogEvent e{EventType::cluster, state.k, -1,
               Cell{static_cast<int>(std::lround(c.center_x)), static_cast<int>(std::lround(c.center_y))},
               nlohmann::json::object()};
    e.data["id"] = c.id;
    e.data["score"] = c.score;
    e.data["state"] = to_string(c.state);
    e.data["center"] = {c.center_x, c.center_y};
    e.data["bbox"] = {x0, y0, x1, y1};
    e.data["members"] = c.members.size();
    log.add(std::move(e));
  }
  for (const auto& r : routes_) {
    LogEvent e{EventType::cluster, state.k, r.robot, robots[static_cast<std::size_t>(r.robot)],
               nlohmann::json::object()};
    e.data["route"] = r.clusters;
    log.add(std::move(e));
  }
}

void BilevelPlanner::begin_round(coord::MissionState& state, MissionLog& log) {
  std::vector<Cell> robots;
  for (const auto& r : state.env.robots) robots.push_back(r.position);
  const int w = state.env.width(), h = state.env.height();
  if (!initialized_) {
    clusters_ = init_clusters(w, h, params_);
    initialized_ = true;
  }
  const auto& pass = state.fuzzy.layer(belief::Layer::passability);
  for (std::size_t i = 0; i < clusters_.size(); ++i) split_merge_clusters(clusters_, i, pass, robots, params_);
  for (auto& c : clusters_) c.score = cluster_score(c, state.fuzzy, params_);
  update_cluster_states(clusters_, routes_, robots, params_);

  auto find = [&](int id) -> const FuzzyCluster* {
    for (const auto& c : clusters_)
      if (c.id == id) return &c;
    return nullptr;
  };
  bool need = routes_.empty();
  std::vector<char> routed(clusters_.size(), 0);
  for (const auto& r : routes_) {
    if (!r.clusters.empty()) {
      const auto* head = find(r.clusters.front());
      if (!head || head->state == ClusterState::explored || head->members.empty()) need = true;
    }
    for (int id : r.clusters)
      for (std::size_t i = 0; i < clusters_.size(); ++i)
        if (clusters_[i].id == id) routed[i] = 1;
  }
  for (std::size_t i = 0; i < clusters_.size(); ++i)
    if (!routed[i] && clusters_[i].state != ClusterState::explored && !clusters_[i].members.empty()) need = true;
  if (need) replan(state, robots, log);

  high_level_.assign(robots.size(), std::nullopt);
  for (const auto& r : routes_) {
    if (r.clusters.empty()) continue;
    const auto* head = find(r.clusters.front());
    if (!head) continue;
    high_level_[static_cast<std::size_t>(r.robot)] =
        child_weight_grid(*head, robots[static_cast<std::size_t>(r.robot)], w, h, params_);
  }
}

coord::PlanOutput BilevelPlanner::plan(const coord::PlanRequest& request) {
  optim::PsoOptions pso = mission_.pso;
  pso.seed = request.seed;
  const auto& hl = high_level_.at(static_cast<std::size_t>(request.robot));
  auto r = flmpc::plan(request.position, request.state->fuzzy, request.others, mission_.controller, pso,
                       hl ? &*hl : nullptr);
  return {std::move(r.plan), std::move(r.weights), r.grade, r.evaluations, r.grading_seconds};
}

}  // namespace sar::parent
