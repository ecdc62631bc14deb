#include "sar/flmpc.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace sar::flmpc {

namespace {

constexpr int kDirs[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

// Nearest compass direction to (rx, ry); ties go to the lower index.
int nearest_direction(double rx, double ry) {
  int best = 0;
  double best_cos = -2.0;
  const double norm = std::hypot(rx, ry);
  if (norm == 0.0) return 0;
  for (int k = 0; k < 8; ++k) {
    const double len = (k % 2 == 0) ? 1.0 : std::numbers::sqrt2;
    const double c = (rx * kDirs[k][0] + ry * kDirs[k][1]) / (len * norm);
    if (c > best_cos + 1e-12) {
      best_cos = c;
      best = k;
    }
  }
  return best;
}

int direction_index(Cell from, Cell to) {
  for (int k = 0; k < 8; ++k)
    if (to.x - from.x == kDirs[k][0] && to.y - from.y == kDirs[k][1]) return k;
  return -1;
}

}  // namespace

void ControllerParams::validate() const {
  if (n_p < 1 || n_travel < 1 || n_path < 1) throw ConfigError("horizons must be positive");
  if (n_path > n_p * n_travel) throw ConfigError("n_path must not exceed n_p * n_travel");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(delta_max_plan > 0.0) || !std::isfinite(delta_max_plan)) throw ConfigError("delta_max_plan must be > 0");
  aggregation.validate();
}

std::vector<optim::Bounds> decision_bounds(const ControllerParams& params) {
  std::vector<optim::Bounds> b;
  for (int i = 0; i < params.n_p; ++i) {
    b.push_back({0.0, static_cast<double>(params.n_travel)});
    b.push_back({0.0, 2.0 * std::numbers::pi});
  }
  return b;
}

void decode_cells(std::span<const double> decision, Cell start, int width, int height,
                  const ControllerParams& params, std::vector<Cell>& cells) {
  if (decision.size() != params.decision_size()) throw ContractViolation("decision vector has wrong size");
  cells.clear();
  Cell current = start;
  const std::size_t limit = static_cast<std::size_t>(params.n_path);
  for (int block = 0; block < params.n_p && cells.size() < limit; ++block) {
    const double len = std::clamp(decision[2 * block], 0.0, static_cast<double>(params.n_travel));
    const int steps = static_cast<int>(std::lround(len));
    if (steps == 0) continue;
    const double heading = decision[2 * block + 1];
    double ux = std::cos(heading), uy = std::sin(heading);
    const double major = std::max(std::abs(ux), std::abs(uy));
    ux /= major;
    uy /= major;
    const double ox = current.x, oy = current.y;
    for (int j = 1; j <= steps && cells.size() < limit; ++j) {
      const int k = nearest_direction(ox + j * ux - current.x, oy + j * uy - current.y);
      Cell next{std::clamp(current.x + kDirs[k][0], 0, width - 1), std::clamp(current.y + kDirs[k][1], 0, height - 1)};
      if (next == current) continue;
      current = next;
      cells.push_back(current);
    }
  }
}

TrajectoryPlan decode_motion_plan(std::span<const double> decision, Cell start, int width, int height,
                                  const ControllerParams& params) {
  TrajectoryPlan plan;
  decode_cells(decision, start, width, height, params, plan.cells);
  plan.decision.assign(decision.begin(), decision.end());
  return plan;
}

std::vector<double> encode_motion_plan(std::span<const Cell> cells, Cell start, const ControllerParams& params) {
  std::vector<double> decision(params.decision_size(), 0.0);
  int block = -1, dir = -1, run = 0;
  Cell prev = start;
  for (Cell c : cells) {
    const int k = direction_index(prev, c);
    if (k < 0) throw ContractViolation("path is not 8-adjacent");
    if (k != dir || run == params.n_travel) {
      if (++block >= params.n_p) throw ContractViolation("path needs more than n_p blocks");
      dir = k;
      run = 0;
      decision[2 * block + 1] = k * std::numbers::pi / 4.0;
    }
    decision[2 * block] = ++run;
    prev = c;
  }
  return decision;
}

double alpha(double delta, double delta_max) { return std::max(0.0, 1.0 - delta / delta_max); }

double beta(int kappa, double gamma) { return std::pow(gamma, kappa); }

double tuning_weight(double alpha_beta, double previous) {
  if (!(alpha_beta > 0.0)) return previous;
  return std::max(1.0 / (-std::log(alpha_beta) + 1.0), previous);
}

ObservedCellSet observed_set(const TrajectoryPlan& plan, Cell start, int width, int height,
                             const ControllerParams& params, const Grid<double>* high_level) {
  std::map<Cell, ObservedCell, RowMajorLess> seen;
  const auto disc = disc_offsets(params.delta_max_plan);
  auto visit = [&](Cell center, int kappa) {
    const double b = beta(kappa, params.gamma);
    for (const auto& off : disc) {
      const Cell q{center.x + off.dx, center.y + off.dy};
      if (q.x < 0 || q.y < 0 || q.x >= width || q.y >= height) continue;
      double ab = alpha(off.distance, params.delta_max_plan) * b;
      if (high_level) ab *= (*high_level)[q];
      auto [it, inserted] = seen.try_emplace(q, ObservedCell{q, kappa, off.distance, ab});
      if (!inserted) it->second.best_alpha_beta = std::max(it->second.best_alpha_beta, ab);
    }
  };
  if (plan.cells.empty()) visit(start, 0);
  for (std::size_t i = 0; i < plan.cells.size(); ++i) visit(plan.cells[i], plan.step_of(i));
  ObservedCellSet out;
  out.reserve(seen.size());
  for (auto& [cell, obs] : seen) out.push_back(obs);
  return out;
}

WeightField::WeightField(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (!RowMajorLess{}(entries_[i - 1].cell, entries_[i].cell))
      throw ContractViolation("weight field entries must be row-major sorted and unique");
  for (const auto& e : entries_)
    if (!(e.weight >= 0.0 && e.weight <= 1.0)) throw ContractViolation("weights must lie in [0, 1]");
}

double WeightField::at(Cell c) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), c,
                             [](const Entry& e, Cell key) { return RowMajorLess{}(e.cell, key); });
  return (it != entries_.end() && it->cell == c) ? it->weight : 0.0;
}

WeightField tuning_weights(const ObservedCellSet& observed) {
  std::vector<WeightField::Entry> entries;
  entries.reserve(observed.size());
  for (const auto& o : observed) {
    const double w = tuning_weight(o.best_alpha_beta, 0.0);
    if (w > 0.0) entries.push_back({o.cell, w});
  }
  return WeightField(std::move(entries));
}

Grid<double> max_weight_grid(std::span<const WeightField> fields, int width, int height) {
  Grid<double> g(width, height, 0.0);
  for (const auto& f : fields)
    for (const auto& e : f.entries())
      if (g.contains(e.cell)) g[e.cell] = std::max(g[e.cell], e.weight);
  return g;
}

double max_observable_count(const ControllerParams& params) {
  return static_cast<double>(disc_offsets(params.delta_max_plan).size()) * params.n_path;
}

double grade_trajectory(const TrajectoryPlan& plan, Cell start, const belief::FuzzyMapSet& maps,
                        std::span<const WeightField> others, double max_count, const ControllerParams& params,
                        const Grid<double>* high_level) {
  if (plan.cells.empty()) return 0.0;
  using belief::Layer;
  const auto observed = observed_set(plan, start, maps.width(), maps.height(), params, high_level);
  std::vector<fuzzy::WeightedGoal> goals;
  goals.reserve(observed.size());
  for (const auto& o : observed) {
    double others_max = 0.0;
    for (const auto& f : others) others_max = std::max(others_max, f.at(o.cell));
    const double own = tuning_weight(o.best_alpha_beta, 0.0);
    goals.push_back({{maps.at(Layer::human_detection_reward, o.cell), maps.at(Layer::exploration_reward, o.cell)},
                     cooperative_weight(own, others_max)});
  }
  const double goal = fuzzy::aggregate_goals_weighted(goals, max_count, params.aggregation);
  std::vector<fuzzy::DegreeTuple> constraints;
  for (Cell c : plan.cells) constraints.push_back({maps.at(Layer::passability, c)});
  const double con = fuzzy::aggregate_constraints(constraints, params.aggregation);
  return fuzzy::aggregate_overall(goal, con, params.aggregation);
}

TrajectoryGrader::TrajectoryGrader(const belief::FuzzyMapSet& maps, std::span<const WeightField> others,
                                   const ControllerParams& params, const Grid<double>* high_level)
    : params_(params), width_(maps.width()), height_(maps.height()), max_count_(max_observable_count(params)),
      disc_(disc_offsets(params.delta_max_plan)) {
  using belief::Layer;
  for (const auto& off : disc_) disc_alpha_.push_back(alpha(off.distance, params.delta_max_plan));
  for (int k = 0; k <= params.n_path; ++k) beta_.push_back(beta(k, params.gamma));
  const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  goal_.resize(n);
  log_goal_.resize(n);
  con_term_.resize(n);
  const auto& hdr = maps.layer(Layer::human_detection_reward);
  const auto& expl = maps.layer(Layer::exploration_reward);
  const auto& pass = maps.layer(Layer::passability);
  for (std::size_t i = 0; i < n; ++i) {
    const double g2[2] = {hdr[i], expl[i]};
    goal_[i] = fuzzy::s_norm(g2, params.aggregation.s_norm);
    log_goal_[i] = goal_[i] > 0.0 ? std::log(goal_[i]) : 0.0;
    con_term_[i] = 1.0 - std::pow(pass[i], params.aggregation.w_con);
  }
  if (!others.empty()) {
    const auto g = max_weight_grid(others, width_, height_);
    others_.assign(g.values().begin(), g.values().end());
  }
  if (high_level) {
    if (high_level->width() != width_ || high_level->height() != height_)
      throw ContractViolation("high-level weight grid has wrong dimensions");
    high_level_.assign(high_level->values().begin(), high_level->values().end());
  }
  stamp_.assign(n, 0);
  best_.assign(n, 0.0);
}

double TrajectoryGrader::grade(std::span<const Cell> cells) {
  if (cells.empty()) return 0.0;
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  touched_.clear();
  const bool hl = !high_level_.empty();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell c = cells[i];
    const double b = beta_[std::min(i + 1, beta_.size() - 1)];
    for (std::size_t o = 0; o < disc_.size(); ++o) {
      const int x = c.x + disc_[o].dx, y = c.y + disc_[o].dy;
      if (x < 0 || y < 0 || x >= width_ || y >= height_) continue;
      const std::uint32_t idx = static_cast<std::uint32_t>(y * width_ + x);
      double ab = disc_alpha_[o] * b;
      if (hl) ab *= high_level_[idx];
      if (stamp_[idx] != epoch_) {
        stamp_[idx] = epoch_;
        best_[idx] = ab;
        touched_.push_back(idx);
      } else if (ab > best_[idx]) {
        best_[idx] = ab;
      }
    }
  }
  std::sort(touched_.begin(), touched_.end());

  const double w_goal = params_.aggregation.w_goal;
  const bool coop = !others_.empty();
  fuzzy::CompensatedSum goal_sum;
  for (std::uint32_t idx : touched_) {
    const double ab = best_[idx];
    if (!(ab > 0.0) || !(goal_[idx] > 0.0)) continue;
    double w = 1.0 / (1.0 - std::log(ab));
    if (coop) w = cooperative_weight(w, others_[idx]);
    if (!(w > 0.0)) continue;
    goal_sum.add(std::exp((w_goal + 1.0 / w) * log_goal_[idx]));
  }
  const double goal = std::clamp(std::pow(goal_sum.value() / max_count_, 1.0 / w_goal), 0.0, 1.0);

  fuzzy::CompensatedSum con_sum;
  for (Cell c : cells) con_sum.add(con_term_[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x)]);
  const double w_con = params_.aggregation.w_con;
  const double con = std::max(0.0, 1.0 - std::pow(std::max(con_sum.value(), 0.0), 1.0 / w_con));
  return fuzzy::aggregate_overall(goal, con, params_.aggregation);
}

double TrajectoryGrader::grade_decision(std::span<const double> decision, Cell start) {
  decode_cells(decision, start, width_, height_, params_, cells_);
  return grade(cells_);
}

std::vector<std::vector<double>> seed_particles(const ControllerParams& params) {
  std::vector<std::vector<double>> seeds;
  const double len = std::min<double>(params.n_travel, 5.0);
  for (int k = 0; k < 8; ++k) {
    std::vector<double> d(params.decision_size(), 0.0);
    d[0] = len;
    d[1] = k * std::numbers::pi / 4.0;
    seeds.push_back(std::move(d));
  }
  return seeds;
}

std::size_t compass_lattice_size(const ControllerParams& params) {
  const std::size_t per_block = 1 + 8 * static_cast<std::size_t>(params.n_travel);
  std::size_t total = 1;
  for (int b = 0; b < params.n_p; ++b) {
    if (total > (std::size_t{1} << 40) / per_block) return std::size_t{1} << 40;
    total *= per_block;
  }
  return total;
}

optim::PsoResult enumerate_compass_lattice(const optim::Objective& objective, const ControllerParams& params) {
  const std::size_t per_block = 1 + 8 * static_cast<std::size_t>(params.n_travel);
  const std::size_t total = compass_lattice_size(params);
  optim::PsoResult best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<double> d(params.decision_size(), 0.0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (int b = 0; b < params.n_p; ++b) {
      const std::size_t digit = rest % per_block;
      rest /= per_block;
      // digit 0: no move; otherwise (length, heading) = (1 + (digit-1)/8, (digit-1)%8)
      d[2 * b] = digit == 0 ? 0.0 : static_cast<double>(1 + (digit - 1) / 8);
      d[2 * b + 1] = digit == 0 ? 0.0 : static_cast<double>((digit - 1) % 8) * std::numbers::pi / 4.0;
    }
    const double v = objective(d);
    ++best.evaluations;
    if (v > best.value) {
      best.value = v;
      best.best = d;
    }
  }
  return best;
}

PlanResult plan(Cell start, const belief::FuzzyMapSet& maps, std::span<const WeightField> others,
                const ControllerParams& params, const optim::PsoOptions& pso, const Grid<double>* high_level) {
  params.validate();
  TrajectoryGrader grader(maps, others, params, high_level);
  const auto bounds = decision_bounds(params);
  const auto seeds = seed_particles(params);
  const auto t0 = std::chrono::steady_clock::now();
  const optim::Objective objective = [&](std::span<const double> d) { return grader.grade_decision(d, start); };
  const std::size_t budget = static_cast<std::size_t>(pso.swarm_size) * static_cast<std::size_t>(pso.iterations + 1);
  auto best = compass_lattice_size(params) <= budget ? enumerate_compass_lattice(objective, params)
                                                     : optim::particle_swarm_maximize(objective, bounds, pso, seeds);
  const auto t1 = std::chrono::steady_clock::now();

  PlanResult result;
  result.plan = decode_motion_plan(best.best, start, maps.width(), maps.height(), params);
  result.grade = best.value;
  result.evaluations = best.evaluations;
  result.grading_seconds = std::chrono::duration<double>(t1 - t0).count();
  result.weights = tuning_weights(observed_set(result.plan, start, maps.width(), maps.height(), params, high_level));
  return result;
}

}  // namespace sar::flmpc
