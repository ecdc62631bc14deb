#include "sar/membership.hpp"

#include <algorithm>
#include <stdexcept>

#include "sar/common.hpp"

namespace sar::belief {

namespace {

void check_breakpoints(const std::vector<double>& xs, const char* what) {
  if (xs.size() < 2) throw ConfigError(std::string(what) + ": need at least two breakpoints");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw ConfigError(std::string(what) + ": breakpoints must increase strictly");
}

void check_degrees(const std::vector<double>& ys, const char* what) {
  for (double y : ys)
    if (!(y >= 0.0 && y <= 1.0)) throw ConfigError(std::string(what) + ": degrees must lie in [0, 1]");
}

// Segment index i with xs[i] <= x <= xs[i+1] and the local fraction, x clamped.
std::pair<std::size_t, double> locate(const std::vector<double>& xs, double x) {
  x = std::clamp(x, xs.front(), xs.back());
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  if (i >= xs.size() - 1) i = xs.size() - 2;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return {i, t};
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  check_breakpoints(xs_, "piecewise-linear membership");
  if (ys_.size() != xs_.size()) throw ConfigError("piecewise-linear membership: xs/ys size mismatch");
  check_degrees(ys_, "piecewise-linear membership");
}

double PiecewiseLinear::operator()(double x) const {
  const auto [i, t] = locate(xs_, x);
  if (t == 0.0) return ys_[i];
  if (t == 1.0) return ys_[i + 1];
  return ys_[i] + t * (ys_[i + 1] - ys_[i]);
}

BilinearSurface::BilinearSurface(std::vector<double> xs, std::vector<double> ys, std::vector<double> values)
    : xs_(std::move(xs)), ys_(std::move(ys)), values_(std::move(values)) {
  check_breakpoints(xs_, "bilinear membership (x)");
  check_breakpoints(ys_, "bilinear membership (y)");
  if (values_.size() != xs_.size() * ys_.size()) throw ConfigError("bilinear membership: table size mismatch");
  check_degrees(values_, "bilinear membership");
}

double BilinearSurface::operator()(double x, double y) const {
  const auto [i, tx] = locate(xs_, x);
  const auto [j, ty] = locate(ys_, y);
  const std::size_t ny = ys_.size();
  const double v00 = values_[i * ny + j];
  const double v01 = values_[i * ny + j + 1];
  const double v10 = values_[(i + 1) * ny + j];
  const double v11 = values_[(i + 1) * ny + j + 1];
  const double a = v00 + ty * (v01 - v00);
  const double b = v10 + ty * (v11 - v10);
  return std::clamp(a + tx * (b - a), 0.0, 1.0);
}

MembershipBank MembershipBank::defaults() {
  MembershipBank bank;
  bank.set(mf::kPassability, PiecewiseLinear({0.0, 0.1, 0.4, 1.0}, {1.0, 1.0, 0.0, 0.0}));
  bank.set(mf::kHumanDetectionReward, PiecewiseLinear({0.0, 0.5, 0.98, 1.0}, {0.0, 0.0, 0.95, 0.95}));
  bank.set(mf::kExplorationReward, PiecewiseLinear({0.0, 1.0}, {0.0, 1.0}));
  // Corners: no detectability -> neutral 0.5; full detectability -> the likelihood itself.
  bank.set(mf::kMeasurementConsistency,
           BilinearSurface({0.0, 1.0}, {0.0, 1.0}, {0.5, 0.5, 0.0, 1.0}));
  // Unchanged up to consistency 0.5, then falling linearly to zero at full consistency.
  bank.set(mf::kUncertaintyObserved,
           BilinearSurface({0.0, 1.0}, {0.0, 0.5, 1.0}, {0.0, 0.0, 0.0, 1.0, 1.0, 0.0}));
  return bank;
}

MembershipBank MembershipBank::named(const std::string& version) {
  if (version == "v1") return defaults();
  if (version == "v2") {
    MembershipBank bank = defaults();
    bank.version = "v2";
    // Both rewards stay below one so the tuning weights keep their effect;
    // an unvisited cell with the prior belief aggregates to just under 0.5.
    bank.set(mf::kPassability, PiecewiseLinear({0.0, 0.1, 0.55, 1.0}, {1.0, 1.0, 0.0, 0.0}));
    bank.set(mf::kExplorationReward, PiecewiseLinear({0.0, 1.0}, {0.0, 0.6}));
    return bank;
  }
  throw ConfigError("unknown membership table version '" + version + "'");
}

void MembershipBank::set(const std::string& name, MembershipFunction f) {
  functions_.insert_or_assign(name, std::move(f));
}

const MembershipFunction& MembershipBank::find(const std::string& name) const {
  auto it = functions_.find(name);
  if (it == functions_.end()) throw std::out_of_range("unknown membership function: " + name);
  return it->second;
}

double MembershipBank::eval(const std::string& name, std::span<const double> inputs) const {
  const MembershipFunction& f = find(name);
  if (const auto* curve = std::get_if<PiecewiseLinear>(&f)) {
    if (inputs.size() != 1) throw ContractViolation(name + " takes one input");
    return (*curve)(inputs[0]);
  }
  if (inputs.size() != 2) throw ContractViolation(name + " takes two inputs");
  return std::get<BilinearSurface>(f)(inputs[0], inputs[1]);
}

const PiecewiseLinear& MembershipBank::curve(const std::string& name) const {
  const auto* c = std::get_if<PiecewiseLinear>(&find(name));
  if (!c) throw ContractViolation(name + " is not a 1-D membership function");
  return *c;
}

const BilinearSurface& MembershipBank::surface(const std::string& name) const {
  const auto* s = std::get_if<BilinearSurface>(&find(name));
  if (!s) throw ContractViolation(name + " is not a 2-D membership function");
  return *s;
}

nlohmann::json MembershipBank::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  auto& fns = j["functions"];
  fns = nlohmann::json::object();
  for (const auto& [name, f] : functions_) {
    if (const auto* c = std::get_if<PiecewiseLinear>(&f)) {
      fns[name] = {{"type", "piecewise_linear"}, {"xs", c->xs()}, {"ys", c->ys()}};
    } else {
      const auto& s = std::get<BilinearSurface>(f);
      fns[name] = {{"type", "bilinear"}, {"xs", s.xs()}, {"ys", s.ys()}, {"values", s.values()}};
    }
  }
  return j;
}

MembershipBank MembershipBank::from_json(const nlohmann::json& j) {
  MembershipBank bank = defaults();
  if (j.contains("version")) bank.version = j.at("version").get<std::string>();
  if (!j.contains("functions")) return bank;
  for (const auto& [name, fn] : j.at("functions").items()) {
    const auto type = fn.at("type").get<std::string>();
    if (type == "piecewise_linear") {
      bank.set(name, PiecewiseLinear(fn.at("xs").get<std::vector<double>>(),
                                     fn.at("ys").get<std::vector<double>>()));
    } else if (type == "bilinear") {
      bank.set(name, BilinearSurface(fn.at("xs").get<std::vector<double>>(),
                                     fn.at("ys").get<std::vector<double>>(),
                                     fn.at("values").get<std::vector<double>>()));
    } else {
      throw ConfigError("membership function " + name + ": unknown type " + type);
    }
  }
  return bank;
}

}  // namespace sar::belief
