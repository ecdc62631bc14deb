#include "sar/baseline_smpc.hpp"

#include <chrono>
#include <cmath>

#include "sar/geometry.hpp"

namespace sar::smpc {

void StochasticCostParams::validate() const {
  if (!(w_search >= 0.0 && w_uncertainty >= 0.0 && w_rescue >= 0.0 && w_obstacle >= 0.0))
    throw ConfigError("stochastic cost weights must be >= 0");
  if (!(rescue_threshold > 0.0 && rescue_threshold <= 1.0)) throw ConfigError("rescue threshold must lie in (0, 1]");
  if (!(discount_rate >= 0.0) || !std::isfinite(discount_rate)) throw ConfigError("discount rate must be >= 0");
  if (!(certainty_decay > 0.0 && certainty_decay <= 1.0)) throw ConfigError("certainty decay must lie in (0, 1]");
  if (!(obstacle_sharpness >= 0.0) || !std::isfinite(obstacle_sharpness))
    throw ConfigError("obstacle sharpness must be >= 0");
}

double StochasticCostParams::discount(int kappa, int n_path) const {
  return std::exp(-discount_rate * kappa / n_path);
}

namespace {

const std::vector<DiscOffset>& sensor_disc(double radius) {
  thread_local double cached = -1.0;
  thread_local std::vector<DiscOffset> offsets;
  if (cached != radius) {
    offsets = disc_offsets(radius);
    cached = radius;
  }
  return offsets;
}

// One predicted sensing step at `pos`: most-likely observations, Bayes and
// certainty updates in place.
void predict_step(belief::ProbabilityMap& prob, belief::CertaintyMap& cert, Cell pos,
                  const sim::SensorModel& sensor, double decay, std::vector<sim::Observation>& scratch) {
  scratch.clear();
  for (const auto& off : sensor_disc(sensor.delta_max)) {
    const Cell c{pos.x + off.dx, pos.y + off.dy};
    if (!prob.contains(c)) continue;
    const double d = sim::detectability(off.distance, sensor.delta_max);
    if (d <= 0.0) continue;
    scratch.push_back({c, prob.map_state(c), d});
  }
  belief::bayes_update(prob, scratch, sensor);
  belief::update_certainty_map(cert, scratch, decay);
}

std::vector<Cell> padded(std::span<const Cell> cells, Cell start, int n_path) {
  std::vector<Cell> out(cells.begin(), cells.end());
  const Cell hold = out.empty() ? start : out.back();
  while (static_cast<int>(out.size()) < n_path) out.push_back(hold);
  return out;
}

}  // namespace

PredictedMaps predict_maps(const belief::ProbabilityMap& prob, const belief::CertaintyMap& cert,
                           std::span<const Cell> cells, const sim::SensorModel& sensor, double certainty_decay) {
  PredictedMaps out;
  out.prob.reserve(cells.size());
  out.cert.reserve(cells.size());
  std::vector<sim::Observation> scratch;
  for (std::size_t q = 0; q < cells.size(); ++q) {
    out.prob.push_back(q == 0 ? prob : out.prob.back());
    out.cert.push_back(q == 0 ? cert : out.cert.back());
    predict_step(out.prob.back(), out.cert.back(), cells[q], sensor, certainty_decay, scratch);
  }
  return out;
}

CostBreakdown grade_trajectory_stochastic(const flmpc::TrajectoryPlan& plan, Cell start,
                                          const belief::ProbabilityMap& prob, const belief::CertaintyMap& cert,
                                          const sim::SensorModel& sensor, const flmpc::ControllerParams& controller,
                                          const StochasticCostParams& params) {
  const auto cells = padded(plan.cells, start, controller.n_path);
  const auto predicted = predict_maps(prob, cert, cells, sensor, params.certainty_decay);
  const auto& disc = sensor_disc(sensor.delta_max);
  const double disc_size = static_cast<double>(disc.size());

  CostBreakdown cost;
  std::vector<Cell> rescued;
  for (std::size_t q = 0; q < cells.size(); ++q) {
    const auto& before_p = q == 0 ? prob : predicted.prob[q - 1];
    const auto& before_z = q == 0 ? cert : predicted.cert[q - 1];
    const auto& after_z = predicted.cert[q];
    const double beta = params.discount(static_cast<int>(q) + 1, controller.n_path);
    const Cell pos = cells[q];

    double miss = 1.0, gain = 0.0;
    for (const auto& off : disc) {
      const Cell c{pos.x + off.dx, pos.y + off.dy};
      if (!prob.contains(c)) continue;
      const double d = sim::detectability(off.distance, sensor.delta_max);
      if (d <= 0.0) continue;
      miss *= 1.0 - before_p.prob(c, sim::kHuman) * d;
      gain += after_z.at(c) - before_z.at(c);
    }
    cost.search += beta * miss;
    cost.uncertainty -= beta * gain / disc_size;

    const double p_human = before_p.prob(pos, sim::kHuman);
    if (p_human > params.rescue_threshold && std::find(rescued.begin(), rescued.end(), pos) == rescued.end()) {
      cost.rescue -= beta;
      rescued.push_back(pos);
    }
    cost.obstacle += beta * (std::exp(params.obstacle_sharpness * before_p.prob(pos, sim::kObstacle)) - 1.0);
  }
  cost.total = params.w_search * cost.search + params.w_uncertainty * cost.uncertainty +
               params.w_rescue * cost.rescue + params.w_obstacle * cost.obstacle;
  return cost;
}

StochasticPlanResult plan_stochastic(Cell start, const belief::ProbabilityMap& prob,
                                     const belief::CertaintyMap& cert, const sim::SensorModel& sensor,
                                     const flmpc::ControllerParams& controller, const StochasticCostParams& params,
                                     const optim::PsoOptions& pso) {
  controller.validate();
  params.validate();
  const auto bounds = flmpc::decision_bounds(controller);
  const auto seeds = flmpc::seed_particles(controller);
  flmpc::TrajectoryPlan candidate;
  const auto t0 = std::chrono::steady_clock::now();
  const optim::Objective objective = [&](std::span<const double> d) {
    flmpc::decode_cells(d, start, prob.width(), prob.height(), controller, candidate.cells);
    return -grade_trajectory_stochastic(candidate, start, prob, cert, sensor, controller, params).total;
  };
  const std::size_t budget = static_cast<std::size_t>(pso.swarm_size) * static_cast<std::size_t>(pso.iterations + 1);
  auto best = flmpc::compass_lattice_size(controller) <= budget
                  ? flmpc::enumerate_compass_lattice(objective, controller)
                  : optim::particle_swarm_maximize(objective, bounds, pso, seeds);
  const auto t1 = std::chrono::steady_clock::now();
  StochasticPlanResult result;
  result.plan = flmpc::decode_motion_plan(best.best, start, prob.width(), prob.height(), controller);
  result.cost = -best.value;
  result.evaluations = best.evaluations;
  result.grading_seconds = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

coord::PlanOutput SmpcPlanner::plan(const coord::PlanRequest& request) {
  const auto& state = *request.state;
  belief::ProbabilityMap prob = state.prob;
  belief::CertaintyMap cert = state.cert;
  // Coordination analog of the weight exchange: assume the other robots fly
  // their latest plans first.
  std::vector<sim::Observation> scratch;
  for (std::size_t j = 0; j < state.plans.size(); ++j) {
    if (static_cast<int>(j) == request.robot) continue;
    for (Cell c : state.plans[j].cells) predict_step(prob, cert, c, mission_.sensor, cost_.certainty_decay, scratch);
  }
  optim::PsoOptions pso = mission_.pso;
  pso.seed = request.seed;
  auto r = plan_stochastic(request.position, prob, cert, mission_.sensor, mission_.controller, cost_, pso);
  coord::PlanOutput out;
  out.weights = flmpc::tuning_weights(flmpc::observed_set(r.plan, request.position, state.env.width(),
                                                           state.env.height(), mission_.controller));
  out.plan = std::move(r.plan);
  out.grade = -r.cost;
  out.evaluations = r.evaluations;
  out.grading_seconds = r.grading_seconds;
  return out;
}

}  // namespace sar::smpc
