#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sar/belief.hpp"
#include "sar/flmpc.hpp"
#include "sar/mission_log.hpp"
#include "sar/optim.hpp"
#include "sar/sim_env.hpp"

namespace sar::coord {

/// Per cell: max{0, own - max over others}. Cells claimed by nobody else keep their weight.
flmpc::WeightField cooperative_weights(const flmpc::WeightField& own, std::span<const flmpc::WeightField> others);

struct MissionParams {
  int replan_period = 5;
  int budget_steps = 166;
  sim::SensorModel sensor;
  std::vector<double> prior = belief::ProbabilityMap::default_prior();
  belief::MembershipBank bank = belief::MembershipBank::defaults();
  belief::FuzzyUpdateParams fuzzy_update;
  double certainty_decay = 0.99;
  flmpc::ControllerParams controller;
  optim::PsoOptions pso;
  /// Rounds between uncertainty snapshots; 0 keeps only the final one.
  int snapshot_every = 0;
  /// Uncertainty below which a cell counts as explored in the summary.
  double explored_threshold = 0.3;

  void validate() const;
};

/// Floor of 500 / n_robots.
int default_budget(int n_robots);

struct MissionState {
  sim::Environment env;
  belief::ProbabilityMap prob;
  belief::CertaintyMap cert;
  belief::FuzzyMapSet fuzzy;
  std::vector<flmpc::TrajectoryPlan> plans;
  std::vector<flmpc::WeightField> weights;
  /// Round in which each robot's weight field was last registered (-1: never).
  std::vector<int> weight_round;
  int k = 0;
  int round = 0;
  int humans_total = 0;

  bool finished(int budget) const { return k >= budget || env.humans_remaining() == 0; }
};

MissionState initial_state(sim::Environment env, const MissionParams& params);

struct PlanRequest {
  int robot = 0;
  Cell position;
  const MissionState* state = nullptr;
  /// Latest registered fields of the other robots.
  std::span<const flmpc::WeightField> others;
  std::uint64_t seed = 0;  ///< solver seed for this robot and round
};

struct PlanOutput {
  flmpc::TrajectoryPlan plan;
  flmpc::WeightField weights;
  double grade = 0.0;
  std::size_t evaluations = 0;
  double grading_seconds = 0.0;
};

/// A per-robot trajectory planner driven by the mission loop.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  /// Called before each round with mutable access to the state (parent layer hook).
  virtual void begin_round(MissionState&, MissionLog&) {}
  virtual PlanOutput plan(const PlanRequest& request) = 0;
};

/// Single-level FLMPC.
class FlmpcPlanner : public Planner {
 public:
  explicit FlmpcPlanner(MissionParams params) : params_(std::move(params)) {}
  std::string name() const override { return "flmpc"; }
  PlanOutput plan(const PlanRequest& request) override;

 private:
  MissionParams params_;
};

/// One round: serial per-robot plan, execute up to replan_period moves with
/// sensing after each, register weights; then a single map update.
void mission_step(MissionState& state, Planner& planner, const MissionParams& params, MissionLog& log);

/// Runs rounds until every human is rescued or the budget is spent.
MissionLog run_mission(sim::Environment env, Planner& planner, const MissionParams& params);

/// Fraction of cells whose uncertainty is below `threshold`.
double explored_fraction(const belief::FuzzyMapSet& maps, double threshold);

}  // namespace sar::coord
