#include "sar/fuzzy_agg.hpp"

#include <algorithm>
#include <cmath>

#include "sar/common.hpp"

namespace sar::fuzzy {

void AggregationParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(w_goal) || !positive(w_agg) || !positive(w_cluster) || !positive(w_goal_parent))
    throw ConfigError("aggregation exponents must be positive and finite");
  if (!std::isfinite(w_con) || w_con < 1.0) throw ConfigError("w_con must be >= 1");
}

double s_norm(std::span<const double> degrees, SNorm op) {
  double acc = 0.0;
  for (double d : degrees) acc = op == SNorm::max ? std::max(acc, d) : acc + d - acc * d;
  return acc;
}

double t_norm(double a, double b, TNorm op) {
  return op == TNorm::product ? a * b : std::min(a, b);
}

double aggregate_goals(std::span<const DegreeTuple> per_step, const AggregationParams& params) {
  if (per_step.empty()) throw ContractViolation("aggregate_goals needs at least one step");
  CompensatedSum sum;
  for (const DegreeTuple& step : per_step) sum.add(std::pow(s_norm(step, params.s_norm), params.w_goal));
  const double mean = sum.value() / static_cast<double>(per_step.size());
  return std::clamp(std::pow(mean, 1.0 / params.w_goal), 0.0, 1.0);
}

double aggregate_constraints_flat(std::span<const double> degrees, double w_con) {
  CompensatedSum sum;
  for (double mu : degrees) sum.add(1.0 - std::pow(mu, w_con));
  const double s = std::max(sum.value(), 0.0);
  return std::max(0.0, 1.0 - std::pow(s, 1.0 / w_con));
}

double aggregate_constraints(std::span<const DegreeTuple> per_step, const AggregationParams& params) {
  CompensatedSum sum;
  for (const DegreeTuple& step : per_step)
    for (double mu : step) sum.add(1.0 - std::pow(mu, params.w_con));
  const double s = std::max(sum.value(), 0.0);
  return std::max(0.0, 1.0 - std::pow(s, 1.0 / params.w_con));
}

double aggregate_overall(double goal_degree, double constraint_degree, const AggregationParams& params) {
  return t_norm(goal_degree, std::pow(constraint_degree, params.w_agg), params.t_norm);
}

double weighted_goal_term(double degree, double weight, double w_goal) {
  if (weight <= 0.0 || degree <= 0.0) return 0.0;
  return std::pow(degree, w_goal + 1.0 / weight);
}

double aggregate_goals_weighted(std::span<const WeightedGoal> cells, double max_observable_count,
                                const AggregationParams& params) {
  if (static_cast<double>(cells.size()) > max_observable_count)
    throw ContractViolation("max_observable_count smaller than the observed set");
  if (cells.empty()) return 0.0;
  CompensatedSum sum;
  for (const WeightedGoal& c : cells)
    sum.add(weighted_goal_term(s_norm(c.goals, params.s_norm), c.weight, params.w_goal));
  const double mean = sum.value() / max_observable_count;
  return std::clamp(std::pow(mean, 1.0 / params.w_goal), 0.0, 1.0);
}

double cell_aggregated_score(std::span<const double> goal_degrees,
                             std::span<const double> constraint_degrees) {
  double score = 0.0;
  for (double g : goal_degrees) score = std::max(score, g);
  for (double c : constraint_degrees) score = std::min(score, c);
  return score;
}

}  // namespace sar::fuzzy
