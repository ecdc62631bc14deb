#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sar/belief.hpp"
#include "sar/coordination.hpp"
#include "sar/fuzzy_agg.hpp"
#include "sar/grid.hpp"
#include "sar/optim.hpp"

namespace sar::parent {

enum class ClusterState { unexplored, to_be_explored, being_explored, explored };

const char* to_string(ClusterState s);

struct ParentParams {
  int cluster_side = 40;
  int overlap_depth = 3;
  double s_exp = 0.22;
  double s_unexp = 0.4;
  double gamma_parent = 0.98;
  double sigma = 60.0;
  /// Approach radius of the high-level weight; <= 0 means 2 * cluster_side.
  double eta = 0.0;
  double w_cluster = 5.0;
  double w_goal_parent = 1.0;
  double initial_score = 0.49;
  /// Cells below this passability are walls for splitting and reachability.
  double wall_threshold = 0.1;

  void validate() const;
  double effective_eta() const { return eta > 0.0 ? eta : 2.0 * cluster_side; }
};

struct Membership {
  Cell cell;
  double mu = 0.0;
};

struct FuzzyCluster {
  int id = 0;
  std::vector<Membership> members;  ///< row-major, mu > 0
  double center_x = 0.0;
  double center_y = 0.0;
  double score = 0.0;
  ClusterState state = ClusterState::unexplored;

  double mu(Cell c) const;
  bool contains(Cell c) const { return mu(c) > 0.0; }
  /// Membership-weighted centroid of the support.
  void recompute_center();
  double distance_to_center(Cell c) const;
};

struct ClusterRoute {
  int robot = 0;
  std::vector<int> clusters;  ///< cluster ids in visiting order
  std::vector<double> planned_distance;  ///< cumulative center-to-center distance per stop
};

/// (1 - delta/4)^2 for fringe depth delta >= 1 (interior: 1).
double fringe_membership(int depth);

/// One square cluster per cluster_side block plus an overlap fringe.
std::vector<FuzzyCluster> init_clusters(int width, int height, const ParentParams& params);

/// min(max(goals), passability) for one cell.
double cell_score(const belief::FuzzyMapSet& maps, Cell c);

/// Membership-weighted power mean (exponent w_cluster) of the cell scores.
double cluster_score(const FuzzyCluster& cluster, const belief::FuzzyMapSet& maps, const ParentParams& params);

/// Hysteretic state update; `robots` are the current robot cells.
void update_cluster_states(std::vector<FuzzyCluster>& clusters, std::span<const ClusterRoute> routes,
                           std::span<const Cell> robots, const ParentParams& params);

struct SplitReport {
  bool split = false;
  std::vector<Cell> kept;                 ///< largest passable component
  std::vector<std::vector<Cell>> merged;  ///< components handed to other clusters
  std::vector<int> merged_into;           ///< receiving cluster id per merged component
  std::vector<std::vector<Cell>> deleted; ///< components unreachable from every robot
  std::vector<std::vector<Cell>> retained;///< reachable components with no overlapping cluster
};

/// 4-connected components of the cells in `cells` whose passability is at
/// least `threshold`; each component row-major, components ordered by first cell.
std::vector<std::vector<Cell>> passable_components(std::span<const Membership> cells, const Grid<double>& passability,
                                                   double threshold);

/// Splits cluster `index` along walls. The largest component keeps the id;
/// other components merge into the overlapping cluster with the highest mean
/// membership over their cells, or are removed if no robot can reach them.
SplitReport split_merge_clusters(std::vector<FuzzyCluster>& clusters, std::size_t index,
                                 const Grid<double>& passability, std::span<const Cell> robots,
                                 const ParentParams& params);

/// max{1/(-ln(beta) + 1), previous} with beta = gamma^distance.
double parent_weight(double cumulative_distance, double gamma_parent, double previous = 0.0);

/// Generalized-mean route quality over all routed clusters.
double route_quality(const optim::Routes& routes, std::span<const FuzzyCluster> candidates,
                     std::span<const Cell> robots, const ParentParams& params);

/// Routes over every non-explored cluster, one per robot. With fewer such
/// clusters than robots, the nearest free robot takes each cluster and the
/// remaining robots get empty routes.
std::vector<ClusterRoute> high_level_plan(std::span<const FuzzyCluster> clusters, std::span<const Cell> robots,
                                          const ParentParams& params, const optim::GaOptions& ga);

/// High-level weight for one cell given the robot's assigned cluster.
double child_weight_transform(Cell cell, const FuzzyCluster& assigned, Cell robot, const ParentParams& params);

/// Dense version over the grid; nullopt when every weight would be zero.
std::optional<Grid<double>> child_weight_grid(const FuzzyCluster& assigned, Cell robot, int width, int height,
                                              const ParentParams& params);

/// Bi-level controller: the parent layer assigns cluster routes, the child
/// FLMPC plans with the injected high-level weights.
class BilevelPlanner : public coord::Planner {
 public:
  BilevelPlanner(coord::MissionParams mission, ParentParams parent, optim::GaOptions ga);

  std::string name() const override { return "bilevel"; }
  void begin_round(coord::MissionState& state, MissionLog& log) override;
  coord::PlanOutput plan(const coord::PlanRequest& request) override;

  const std::vector<FuzzyCluster>& clusters() const { return clusters_; }
  const std::vector<ClusterRoute>& routes() const { return routes_; }

 private:
  void replan(const coord::MissionState& state, std::span<const Cell> robots, MissionLog& log);

  coord::MissionParams mission_;
  ParentParams params_;
  optim::GaOptions ga_;
  bool initialized_ = false;
  int replans_ = 0;
  std::vector<FuzzyCluster> clusters_;
  std::vector<ClusterRoute> routes_;
  std::vector<std::optional<Grid<double>>> high_level_;
};

}  // namespace sar::parent
