#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace sar::fuzzy {

enum class SNorm { max, probabilistic_sum };
enum class TNorm { product, min };

struct AggregationParams {
  double w_goal = 20.0;
  double w_con = 5.0;
  double w_agg = 1.0;
  double w_cluster = 5.0;
  double w_goal_parent = 1.0;
  SNorm s_norm = SNorm::max;
  TNorm t_norm = TNorm::product;

  void validate() const;
};

double s_norm(std::span<const double> degrees, SNorm op);
double t_norm(double a, double b, TNorm op);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      compensation_ += (sum_ - t) + x;
    else
      compensation_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

using DegreeTuple = std::vector<double>;

/// Generalized mean (exponent w_goal) over steps of the S-normed goal tuples.
double aggregate_goals(std::span<const DegreeTuple> per_step, const AggregationParams& params);

/// Yager T-norm over every (step, constraint) degree.
double aggregate_constraints(std::span<const DegreeTuple> per_step, const AggregationParams& params);
/// Same as above over a flat list of degrees.
double aggregate_constraints_flat(std::span<const double> degrees, double w_con);

/// t_norm(goal, constraint^w_agg)
double aggregate_overall(double goal_degree, double constraint_degree, const AggregationParams& params);

struct WeightedGoal {
  DegreeTuple goals;
  double weight = 0.0;
};

/// Goal degree of an observed cell set where each cell's exponent is raised
/// by 1/weight; a zero weight contributes nothing.
double aggregate_goals_weighted(std::span<const WeightedGoal> cells, double max_observable_count,
                                const AggregationParams& params);

/// Single term of the weighted goal sum: degree^(w_goal + 1/weight), 0 for weight 0.
double weighted_goal_term(double degree, double weight, double w_goal);

/// min(max(goals), constraints...)
double cell_aggregated_score(std::span<const double> goal_degrees,
                             std::span<const double> constraint_degrees);

}  // namespace sar::fuzzy
