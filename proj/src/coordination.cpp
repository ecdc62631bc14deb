#include "sar/coordination.hpp"

#include <cmath>

#include "sar/rng.hpp"

namespace sar::coord {

flmpc::WeightField cooperative_weights(const flmpc::WeightField& own, std::span<const flmpc::WeightField> others) {
  std::vector<flmpc::WeightField::Entry> out;
  out.reserve(own.size());
  for (const auto& e : own.entries()) {
    double others_max = 0.0;
    for (const auto& f : others) others_max = std::max(others_max, f.at(e.cell));
    out.push_back({e.cell, flmpc::cooperative_weight(e.weight, others_max)});
  }
  return flmpc::WeightField(std::move(out));
}

void MissionParams::validate() const {
  if (replan_period < 1) throw ConfigError("replan_period must be >= 1");
  if (budget_steps < 0) throw ConfigError("budget_steps must be >= 0");
  if (!(certainty_decay > 0.0 && certainty_decay <= 1.0)) throw ConfigError("certainty_decay must lie in (0, 1]");
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
  if (prior.size() != sensor.n_states) throw ConfigError("prior size must match the state count");
  sensor.validate();
  fuzzy_update.validate();
  controller.validate();
  pso.validate();
}

int default_budget(int n_robots) {
  if (n_robots < 1) throw ConfigError("at least one robot is required");
  return 500 / n_robots;
}

double explored_fraction(const belief::FuzzyMapSet& maps, double threshold) {
  const auto u = maps.layer(belief::Layer::uncertainty).values();
  std::size_t n = 0;
  for (double v : u)
    if (v < threshold) ++n;
  return static_cast<double>(n) / static_cast<double>(u.size());
}

namespace {

void sense_robot(const MissionState& state, int robot, int step, const MissionParams& params,
                 std::vector<sim::Observation>& out) {
  Rng rng(stream_seed({state.env.seed, 0x73656e7365ULL, static_cast<std::uint64_t>(robot),
                       static_cast<std::uint64_t>(step)}));
  sim::sense_into(state.env, state.env.robots[static_cast<std::size_t>(robot)].position, params.sensor, rng, out);
}

void update_maps(MissionState& state, std::span<const sim::Observation> obs, std::span<const Cell> rescued,
                 const MissionParams& params, int elapsed) {
  belief::bayes_update(state.prob, obs, params.sensor);
  // The rescuing robot stands in the cell: it is known to be empty now.
  for (Cell c : rescued) {
    auto b = state.prob.at(c);
    std::fill(b.begin(), b.end(), 0.0);
    b[sim::kEmpty] = 1.0;
  }
  belief::update_certainty_map(state.cert, obs, params.certainty_decay, elapsed);
  belief::update_fuzzy_maps(state.fuzzy, state.prob, obs, params.bank, params.sensor, params.fuzzy_update, elapsed);
}

MapSnapshot snapshot(const MissionState& state) {
  const auto& u = state.fuzzy.layer(belief::Layer::uncertainty);
  return {state.k, u.width(), u.height(), belief::quantize(u)};
}

}  // namespace

MissionState initial_state(sim::Environment env, const MissionParams& params) {
  params.validate();
  MissionState s;
  const int w = env.width(), h = env.height();
  s.humans_total = env.humans_remaining();
  s.prob = belief::ProbabilityMap(w, h, params.prior);
  s.cert = belief::CertaintyMap(w, h);
  s.fuzzy = belief::initial_fuzzy_maps(s.prob, params.bank);
  const std::size_t n = env.robots.size();
  s.plans.resize(n);
  s.weights.resize(n);
  s.weight_round.assign(n, -1);
  s.env = std::move(env);
  // Robots sense where they start before the first plan.
  std::vector<sim::Observation> obs;
  for (std::size_t r = 0; r < n; ++r) sense_robot(s, static_cast<int>(r), 0, params, obs);
  update_maps(s, obs, {}, params, 0);
  return s;
}

PlanOutput FlmpcPlanner::plan(const PlanRequest& request) {
  optim::PsoOptions pso = params_.pso;
  pso.seed = request.seed;
  auto r = flmpc::plan(request.position, request.state->fuzzy, request.others, params_.controller, pso);
  return {std::move(r.plan), std::move(r.weights), r.grade, r.evaluations, r.grading_seconds};
}

void mission_step(MissionState& state, Planner& planner, const MissionParams& params, MissionLog& log) {
  if (state.finished(params.budget_steps)) return;
  planner.begin_round(state, log);
  const int period = std::min(params.replan_period, params.budget_steps - state.k);
  const int n = static_cast<int>(state.env.robots.size());
  std::vector<sim::Observation> obs;
  std::vector<Cell> rescued;

  for (int i = 0; i < n; ++i) {
    auto& robot = state.env.robots[static_cast<std::size_t>(i)];
    std::vector<flmpc::WeightField> others;
    nlohmann::json versions = nlohmann::json::array();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      others.push_back(state.weights[static_cast<std::size_t>(j)]);
      versions.push_back({j, state.weight_round[static_cast<std::size_t>(j)]});
    }
    PlanRequest req{i, robot.position, &state, others,
                    stream_seed({state.env.seed, 0x706c616eULL, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(state.round)})};
    PlanOutput out = planner.plan(req);
    log.timing.evaluations += out.evaluations;
    log.timing.seconds += out.grading_seconds;
    ++log.timing.plans;
    {
      LogEvent e{EventType::replan, state.k, i, robot.position, nlohmann::json::object()};
      e.data["round"] = state.round;
      e.data["grade"] = out.grade;
      e.data["length"] = out.plan.cells.size();
      e.data["others"] = versions;
      log.add(std::move(e));
    }

    bool halted = false;
    for (int t = 0; t < period; ++t) {
      const int step = state.k + t + 1;
      if (!halted && static_cast<std::size_t>(t) < out.plan.cells.size()) {
        const Cell target = out.plan.cells[static_cast<std::size_t>(t)];
        switch (sim::step_robot(state.env, i, target)) {
          case sim::MoveOutcome::moved:
            log.add({EventType::move, step, i, target, nlohmann::json::object()});
            break;
          case sim::MoveOutcome::rescued:
            log.add({EventType::move, step, i, target, nlohmann::json::object()});
            log.add({EventType::rescue, step, i, target, nlohmann::json::object()});
            rescued.push_back(target);
            break;
          case sim::MoveOutcome::canceled:
            // The rest of the plan was built past a wall; wait for the next round.
            log.add({EventType::cancel, step, i, target, nlohmann::json::object()});
            halted = true;
            break;
        }
      } else {
        log.add({EventType::idle, step, i, robot.position, nlohmann::json::object()});
      }
      sense_robot(state, i, step, params, obs);
    }
    state.plans[static_cast<std::size_t>(i)] = std::move(out.plan);
    state.weights[static_cast<std::size_t>(i)] = std::move(out.weights);
    state.weight_round[static_cast<std::size_t>(i)] = state.round;
  }

  state.k += period;
  ++state.round;
  update_maps(state, obs, rescued, params, period);
  if (params.snapshot_every > 0 && state.round % params.snapshot_every == 0) log.snapshots.push_back(snapshot(state));
}

MissionLog run_mission(sim::Environment env, Planner& planner, const MissionParams& params) {
  MissionLog log;
  log.header["controller"] = planner.name();
  log.header["seed"] = env.seed;
  log.header["width"] = env.width();
  log.header["height"] = env.height();
  log.header["robots"] = env.robots.size();
  log.header["budget"] = params.budget_steps;
  log.header["replan_period"] = params.replan_period;
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& r : env.robots) starts.push_back({r.position.x, r.position.y});
  log.header["robot_starts"] = starts;

  MissionState state = initial_state(std::move(env), params);
  log.header["humans"] = state.humans_total;
  while (!state.finished(params.budget_steps)) mission_step(state, planner, params, log);

  if (params.snapshot_every == 0 || log.snapshots.empty() || log.snapshots.back().step != state.k)
    log.snapshots.push_back(snapshot(state));
  const auto steps = log.rescue_steps();
  log.summary.humans_total = state.humans_total;
  log.summary.rescued = static_cast<int>(steps.size());
  log.summary.complete = state.env.humans_remaining() == 0;
  log.summary.final_step = log.summary.complete ? (steps.empty() ? 0 : steps.back()) : state.k;
  log.summary.explored_fraction = explored_fraction(state.fuzzy, params.explored_threshold);
  log.summary.degenerate_updates = state.prob.degenerate_updates();
  return log;
}

}  // namespace sar::coord
