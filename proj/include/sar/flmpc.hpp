#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sar/belief.hpp"
#include "sar/fuzzy_agg.hpp"
#include "sar/geometry.hpp"
#include "sar/grid.hpp"
#include "sar/optim.hpp"

namespace sar::flmpc {

struct ControllerParams {
  int n_p = 5;
  int n_travel = 14;
  int n_path = 20;
  double gamma = 0.965;
  /// Radius of the planner's weight disc (distinct from the sensor radius).
  double delta_max_plan = 5.0;
  fuzzy::AggregationParams aggregation;

  void validate() const;
  std::size_t decision_size() const { return static_cast<std::size_t>(2 * n_p); }
};

/// Candidate path: cells[k] is entered at planned step k + 1.
struct TrajectoryPlan {
  std::vector<Cell> cells;
  std::vector<double> decision;

  int step_of(std::size_t i) const { return static_cast<int>(i) + 1; }
  bool empty() const { return cells.empty(); }
};

/// Box of the decision vector: (length in [0, n_travel], heading in [0, 2pi]) per block.
std::vector<optim::Bounds> decision_bounds(const ControllerParams& params);

/// Rasterizes [length, heading] blocks into 8-adjacent moves from `start`,
/// clipped at the grid border and truncated at n_path cells.
TrajectoryPlan decode_motion_plan(std::span<const double> decision, Cell start, int width, int height,
                                  const ControllerParams& params);
/// Appending variant writing into `cells` (cleared first); used in hot loops.
void decode_cells(std::span<const double> decision, Cell start, int width, int height,
                  const ControllerParams& params, std::vector<Cell>& cells);

/// Inverse of decode for paths made of straight 8-direction runs. Throws
/// ContractViolation if the path needs more than n_p blocks or is not 8-adjacent.
std::vector<double> encode_motion_plan(std::span<const Cell> cells, Cell start, const ControllerParams& params);

struct ObservedCell {
  Cell cell;
  int first_step = 0;       ///< earliest planned step at which the cell is within the disc
  double distance = 0.0;    ///< robot distance at that step
  double best_alpha_beta = 0.0;  ///< max over sightings of alpha * beta (* high-level weight)
};

/// Row-major list of observed cells. An empty plan yields the disc around `start` at step 0.
using ObservedCellSet = std::vector<ObservedCell>;

ObservedCellSet observed_set(const TrajectoryPlan& plan, Cell start, int width, int height,
                             const ControllerParams& params, const Grid<double>* high_level = nullptr);

/// max{0, 1 - delta/delta_max}
double alpha(double delta, double delta_max);
/// gamma^kappa
double beta(int kappa, double gamma);
/// max{1/(-ln(x) + 1), previous} for x > 0, else previous.
double tuning_weight(double alpha_beta, double previous);

/// Sparse cell -> weight map, sorted row-major.
class WeightField {
 public:
  struct Entry {
    Cell cell;
    double weight;
  };

  WeightField() = default;
  /// Entries must be row-major sorted and unique.
  explicit WeightField(std::vector<Entry> entries);

  double at(Cell c) const;
  std::span<const Entry> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const WeightField& a, const WeightField& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i)
      if (!(a.entries_[i].cell == b.entries_[i].cell) || a.entries_[i].weight != b.entries_[i].weight) return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
};

WeightField tuning_weights(const ObservedCellSet& observed);

/// max{0, own - others_max}
inline double cooperative_weight(double own, double others_max) { return std::max(0.0, own - others_max); }

/// Pointwise max over fields, as a dense grid (zero where unclaimed).
Grid<double> max_weight_grid(std::span<const WeightField> fields, int width, int height);

/// Closed-form denominator of the weighted goal: disc area times n_path.
double max_observable_count(const ControllerParams& params);

/// Straightforward grading built from the aggregation primitives; the
/// reference for `TrajectoryGrader`.
double grade_trajectory(const TrajectoryPlan& plan, Cell start, const belief::FuzzyMapSet& maps,
                        std::span<const WeightField> others, double max_count, const ControllerParams& params,
                        const Grid<double>* high_level = nullptr);

/// Fast grader for one map snapshot. Not thread-safe (owns scratch buffers).
class TrajectoryGrader {
 public:
  TrajectoryGrader(const belief::FuzzyMapSet& maps, std::span<const WeightField> others,
                   const ControllerParams& params, const Grid<double>* high_level = nullptr);

  double grade(std::span<const Cell> cells);
  double grade_decision(std::span<const double> decision, Cell start);
  double max_count() const { return max_count_; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  ControllerParams params_;
  int width_;
  int height_;
  double max_count_;
  std::vector<DiscOffset> disc_;
  std::vector<double> disc_alpha_;
  std::vector<double> beta_;
  std::vector<double> goal_;        // S-normed goal degree
  std::vector<double> log_goal_;
  std::vector<double> con_term_;    // 1 - passability^w_con
  std::vector<double> others_;      // empty when no other robots
  std::vector<double> high_level_;  // empty in single-level mode
  std::vector<std::uint32_t> stamp_;
  std::vector<double> best_;
  std::vector<std::uint32_t> touched_;
  std::vector<Cell> cells_;
  std::uint32_t epoch_ = 0;
};

struct PlanResult {
  TrajectoryPlan plan;
  WeightField weights;  ///< own tuning weights of the chosen plan (before cooperation)
  double grade = 0.0;
  std::size_t evaluations = 0;
  double grading_seconds = 0.0;  ///< wall time inside the optimizer
};

/// Straight-line seed particles, one per compass direction.
std::vector<std::vector<double>> seed_particles(const ControllerParams& params);

/// Number of decision vectors with compass headings and integer lengths.
std::size_t compass_lattice_size(const ControllerParams& params);
/// Exhaustive search over that lattice (first maximum in enumeration order).
optim::PsoResult enumerate_compass_lattice(const optim::Objective& objective, const ControllerParams& params);

/// Maximizes the trajectory grade with particle swarm over the decision box.
/// When the compass lattice fits in the swarm's evaluation budget it is
/// enumerated instead.
PlanResult plan(Cell start, const belief::FuzzyMapSet& maps, std::span<const WeightField> others,
                const ControllerParams& params, const optim::PsoOptions& pso,
                const Grid<double>* high_level = nullptr);

}  // namespace sar::flmpc
