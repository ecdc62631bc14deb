#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sar::optim {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct PsoOptions {
  int swarm_size = 60;
  int iterations = 80;
  double inertia = 0.729;
  double cognitive = 1.49;
  double social = 1.49;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PsoResult {
  std::vector<double> best;
  double value = 0.0;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;
/// Called after initialization (iteration 0) and after every iteration with the incumbent value.
using PsoMonitor = std::function<void(int iteration, double best_value)>;

/// Global-best particle swarm. Positions are clamped to the box, velocities
/// to the box width. Optional `seeds` replace the first random particles.
PsoResult particle_swarm_maximize(const Objective& objective, std::span<const Bounds> bounds,
                                  const PsoOptions& options,
                                  std::span<const std::vector<double>> seeds = {},
                                  const PsoMonitor& monitor = {});

struct GaOptions {
  int population = 60;
  int generations = 150;
  double mutation_rate = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One ordered list of cluster indices (0-based) per robot.
using Routes = std::vector<std::vector<int>>;
using RouteScore = std::function<double(const Routes&)>;
/// Called once per generation with the population (for structural checks).
using GaMonitor = std::function<void(int generation, const std::vector<Routes>& population)>;

struct GaResult {
  Routes routes;
  double score = 0.0;
};

/// Partitions clusters 0..n_clusters-1 into n_robots non-empty ordered routes,
/// maximizing `score`. Returns the best partition seen.
GaResult ga_route_assign(int n_clusters, int n_robots, const RouteScore& score, const GaOptions& options,
                         const GaMonitor& monitor = {});

/// True if `routes` has n_robots non-empty routes covering each cluster exactly once.
bool is_exact_partition(const Routes& routes, int n_clusters, int n_robots);

}  // namespace sar::optim
