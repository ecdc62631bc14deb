#pragma once

#include <span>
#include <vector>

#include "sar/belief.hpp"
#include "sar/coordination.hpp"
#include "sar/flmpc.hpp"
#include "sar/optim.hpp"
#include "sar/sim_env.hpp"

namespace sar::smpc {

struct StochasticCostParams {
  double w_search = 1.0;       ///< expected non-detection mass
  double w_uncertainty = 0.5;  ///< certainty gain (reward)
  double w_rescue = 2.0;       ///< reaching a near-certain human (reward)
  double w_obstacle = 1.0;     ///< exp(20 * P(obstacle)) - 1
  double obstacle_sharpness = 20.0;
  double rescue_threshold = 0.95;
  /// Discount exp(-discount_rate * kappa / n_path).
  double discount_rate = 2.0;
  double certainty_decay = 0.99;

  void validate() const;
  double discount(int kappa, int n_path) const;
};

/// Maps after each predicted step; index q holds the state after step q + 1.
struct PredictedMaps {
  std::vector<belief::ProbabilityMap> prob;
  std::vector<belief::CertaintyMap> cert;
};

/// Rolls copies of the maps along `cells`, assuming each sensed cell is
/// observed in its currently most likely state.
PredictedMaps predict_maps(const belief::ProbabilityMap& prob, const belief::CertaintyMap& cert,
                           std::span<const Cell> cells, const sim::SensorModel& sensor, double certainty_decay);

struct CostBreakdown {
  double search = 0.0;
  double uncertainty = 0.0;
  double rescue = 0.0;
  double obstacle = 0.0;
  double total = 0.0;
};

/// Cost of a plan (lower is better). The plan is padded to n_path steps by
/// holding the last cell (the start cell for an empty plan).
CostBreakdown grade_trajectory_stochastic(const flmpc::TrajectoryPlan& plan, Cell start,
                                          const belief::ProbabilityMap& prob, const belief::CertaintyMap& cert,
                                          const sim::SensorModel& sensor, const flmpc::ControllerParams& controller,
                                          const StochasticCostParams& params);

struct StochasticPlanResult {
  flmpc::TrajectoryPlan plan;
  double cost = 0.0;
  std::size_t evaluations = 0;
  double grading_seconds = 0.0;
};

/// Same decode and solver as the fuzzy planner, minimizing the stochastic cost.
StochasticPlanResult plan_stochastic(Cell start, const belief::ProbabilityMap& prob,
                                     const belief::CertaintyMap& cert, const sim::SensorModel& sensor,
                                     const flmpc::ControllerParams& controller, const StochasticCostParams& params,
                                     const optim::PsoOptions& pso);

/// Mission-loop adapter. Other robots' latest plans are pre-rolled into the
/// predicted maps before this robot's candidates are graded.
class SmpcPlanner : public coord::Planner {
 public:
  SmpcPlanner(coord::MissionParams mission, StochasticCostParams cost)
      : mission_(std::move(mission)), cost_(cost) {}
  std::string name() const override { return "smpc"; }
  coord::PlanOutput plan(const coord::PlanRequest& request) override;

 private:
  coord::MissionParams mission_;
  StochasticCostParams cost_;
};

}  // namespace sar::smpc
