#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace sar::belief {

/// 1-D piecewise-linear curve; constant beyond the outermost breakpoints.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Bilinear interpolation on a rectilinear table; inputs are clamped to the
/// table domain. values[i * ys.size() + j] is the value at (xs[i], ys[j]).
class BilinearSurface {
 public:
  BilinearSurface(std::vector<double> xs, std::vector<double> ys, std::vector<double> values);

  double operator()(double x, double y) const;
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> values_;
};

using MembershipFunction = std::variant<PiecewiseLinear, BilinearSurface>;

namespace mf {
inline constexpr const char* kPassability = "passability";
inline constexpr const char* kHumanDetectionReward = "human_detection_reward";
inline constexpr const char* kExplorationReward = "exploration_reward";
/// Inputs: (detectability, base likelihood of the observation under the MAP state).
inline constexpr const char* kMeasurementConsistency = "measurement_consistency";
/// Inputs: (previous uncertainty, measurement consistency) at full detectability.
inline constexpr const char* kUncertaintyObserved = "uncertainty_observed";
}  // namespace mf

/// Named membership functions, shipped as breakpoint tables.
class MembershipBank {
 public:
  /// The default tables (version "v1").
  static MembershipBank defaults();
  /// Shipped table sets by version ("v1", "v2").
  static MembershipBank named(const std::string& version);

  void set(const std::string& name, MembershipFunction f);
  bool contains(const std::string& name) const { return functions_.count(name) != 0; }

  /// Evaluates `name` on `inputs` (one for curves, two for surfaces).
  /// Throws std::out_of_range for unknown names, ContractViolation on arity mismatch.
  double eval(const std::string& name, std::span<const double> inputs) const;

  const PiecewiseLinear& curve(const std::string& name) const;
  const BilinearSurface& surface(const std::string& name) const;

  std::string version = "v1";

  nlohmann::json to_json() const;
  static MembershipBank from_json(const nlohmann::json& j);

 private:
  const MembershipFunction& find(const std::string& name) const;
  std::map<std::string, MembershipFunction> functions_;
};

}  // namespace sar::belief
