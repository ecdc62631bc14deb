#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sar/common.hpp"
#include "sar/grid.hpp"
#include "sar/rng.hpp"

namespace sar::sim {

/// Ordered set of cell-state labels. Indices are stable for a scenario.
class CellStateSpace {
 public:
  CellStateSpace();
  explicit CellStateSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(StateIndex i) const { return labels_.at(i); }
  /// Throws std::out_of_range for unknown labels.
  StateIndex index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

// Indices of the default {empty, human, obstacle} space.
inline constexpr StateIndex kEmpty = 0;
inline constexpr StateIndex kHuman = 1;
inline constexpr StateIndex kObstacle = 2;
inline constexpr std::size_t kDefaultStateCount = 3;

struct RobotState {
  int id = 0;
  Cell position;
};

struct Environment {
  Grid<StateIndex> truth;
  std::vector<RobotState> robots;
  std::uint64_t seed = 0;

  int width() const { return truth.width(); }
  int height() const { return truth.height(); }
  int humans_remaining() const;
  bool is_obstacle(Cell c) const { return truth[c] == kObstacle; }
};

struct EnvironmentConfig {
  int width = 40;
  int height = 40;
  int n_humans = 10;
  double obstacle_density = 0.2;
  int n_robots = 3;
};

/// Random world: independent obstacle coin per cell, then humans and robots on
/// distinct empty cells such that every human is 8-connected-reachable from
/// some robot. Deterministic in `seed`.
Environment generate_environment(const EnvironmentConfig& config, std::uint64_t seed);

enum class MoveOutcome { moved, canceled, rescued };

/// Moves one robot to `target` (its own cell or an 8-neighbor).
/// Obstacles cancel the move; entering a human cell rescues the human.
MoveOutcome step_robot(Environment& env, int robot_id, Cell target);

/// max{1 - (delta/delta_max)^2, 0}
double detectability(double delta, double delta_max);

/// Distance-degraded sensor. At distance zero the likelihood row is hit_prob
/// on the true state and miss_prob elsewhere; farther away each entry is
/// blended towards blend_floor by the detectability.
///
/// The blended row does not sum to one for three states. Bayes updates use it
/// unnormalized; `sample` renormalizes before drawing.
struct SensorModel {
  double hit_prob = 0.96;
  double miss_prob = 0.02;
  double blend_floor = 0.25;
  double delta_max = 6.0;
  std::size_t n_states = kDefaultStateCount;

  void validate() const;

  double base_likelihood(StateIndex observed, StateIndex truth) const {
    return observed == truth ? hit_prob : miss_prob;
  }
  double likelihood(StateIndex observed, StateIndex truth, double d) const {
    return base_likelihood(observed, truth) * d + blend_floor * (1.0 - d);
  }
  StateIndex sample(StateIndex truth, double d, Rng& rng) const;
};

struct Observation {
  Cell cell;
  StateIndex observed_state = 0;
  double detectability = 0.0;
};

/// One observation per in-grid cell with positive detectability around `position`.
std::vector<Observation> sense(const Environment& env, Cell position, const SensorModel& model,
                               Rng& rng);
/// Appending form of `sense`.
void sense_into(const Environment& env, Cell position, const SensorModel& model, Rng& rng,
                std::vector<Observation>& out);

/// Plain-text grid: "W H" then H rows of W chars from {. H # R}.
Environment read_grid(std::istream& in);
Environment read_grid_file(const std::string& path);
void write_grid(std::ostream& out, const Environment& env);
void write_grid_file(const std::string& path, const Environment& env);

}  // namespace sar::sim
