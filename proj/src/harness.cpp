#include "sar/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "sar/belief.hpp"

namespace sar::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Semantic config error located by JSON pointer; load_scenario adds the line.
class PathError : public ConfigError {
 public:
  PathError(std::string pointer, const std::string& message)
      : ConfigError(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// Walks one JSON object, type-checking fields and rejecting unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) fail(pointer_.empty() ? "/" : pointer_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string at(const char* key) const { return pointer_ + "/" + key; }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    out = v.get<double>();
  }
  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    out = v.get<int>();
  }
  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    out = v.get<std::string>();
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_array()) fail(at(key), "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
  }
  Reader child(const char* key) { return Reader(raw(key), at(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) fail(pointer_ + "/" + key, "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& pointer, const std::string& message) {
    throw PathError(pointer, message);
  }

 private:
  const json& j_;
  std::string pointer_;
  std::set<std::string> seen_;
};

const char* to_string(fuzzy::SNorm s) { return s == fuzzy::SNorm::max ? "max" : "probabilistic_sum"; }
const char* to_string(fuzzy::TNorm t) { return t == fuzzy::TNorm::product ? "product" : "min"; }

json controller_json(const flmpc::ControllerParams& c) {
  const auto& a = c.aggregation;
  return {{"n_p", c.n_p},
          {"n_travel", c.n_travel},
          {"n_path", c.n_path},
          {"gamma", c.gamma},
          {"delta_max_plan", c.delta_max_plan},
          {"aggregation",
           {{"w_goal", a.w_goal},
            {"w_con", a.w_con},
            {"w_agg", a.w_agg},
            {"w_cluster", a.w_cluster},
            {"w_goal_parent", a.w_goal_parent},
            {"s_norm", to_string(a.s_norm)},
            {"t_norm", to_string(a.t_norm)}}}};
}

void read_controller(Reader r, flmpc::ControllerParams& c) {
  r.integer("n_p", c.n_p);
  r.integer("n_travel", c.n_travel);
  r.integer("n_path", c.n_path);
  r.number("gamma", c.gamma);
  r.number("delta_max_plan", c.delta_max_plan);
  if (r.has("aggregation")) {
    Reader a = r.child("aggregation");
    auto& g = c.aggregation;
    a.number("w_goal", g.w_goal);
    a.number("w_con", g.w_con);
    a.number("w_agg", g.w_agg);
    a.number("w_cluster", g.w_cluster);
    a.number("w_goal_parent", g.w_goal_parent);
    std::string s = to_string(g.s_norm), t = to_string(g.t_norm);
    a.string("s_norm", s);
    a.string("t_norm", t);
    if (s == "max") g.s_norm = fuzzy::SNorm::max;
    else if (s == "probabilistic_sum") g.s_norm = fuzzy::SNorm::probabilistic_sum;
    else Reader::fail(a.at("s_norm"), "expected \"max\" or \"probabilistic_sum\"");
    if (t == "product") g.t_norm = fuzzy::TNorm::product;
    else if (t == "min") g.t_norm = fuzzy::TNorm::min;
    else Reader::fail(a.at("t_norm"), "expected \"product\" or \"min\"");
    a.finish();
  }
  r.finish();
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("bad seed '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Best-effort line of a JSON pointer: follows each object key in order.
int line_of_pointer(const std::string& text, const std::string& pointer) {
  std::size_t pos = 0;
  std::stringstream ss(pointer);
  std::string token;
  while (std::getline(ss, token, '/')) {
    if (token.empty() || std::all_of(token.begin(), token.end(), ::isdigit)) continue;
    const auto found = text.find("\"" + token + "\"", pos);
    if (found == std::string::npos) break;
    pos = found;
  }
  return line_of_offset(text, pos);
}

std::string csv_step(int step) { return step < 0 ? "" : std::to_string(step); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto a = parse_u64(trim(text.substr(0, dots)));
    const auto b = parse_u64(trim(text.substr(dots + 2)));
    if (b < a) throw ConfigError("empty seed range '" + text + "'");
    for (auto s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_u64(trim(item)));
  if (seeds.empty()) throw ConfigError("no seeds in '" + text + "'");
  return seeds;
}

int Scenario::budget_steps() const {
  if (budget == "500/n_rob") return coord::default_budget(environment.n_robots);
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(budget, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != budget.size() || v <= 0)
    throw ConfigError("budget must be a positive step count or \"500/n_rob\", got '" + budget + "'");
  return v;
}

std::vector<int> Scenario::effective_milestones() const {
  if (!milestones.empty()) return milestones;
  std::vector<int> all;
  for (int m = 1; m <= environment.n_humans; ++m) all.push_back(m);
  return all;
}

void Scenario::finalize() {
  if (environment.width <= 0 || environment.height <= 0) throw ConfigError("environment dimensions must be positive");
  if (environment.n_robots <= 0) throw ConfigError("environment.robots must be positive");
  if (environment.n_humans < 0) throw ConfigError("environment.humans must be non-negative");
  if (environment.obstacle_density < 0.0 || environment.obstacle_density >= 1.0)
    throw ConfigError("environment.obstacle_density must be in [0, 1)");
  if (controllers.empty()) throw ConfigError("no controllers selected");
  for (const auto& c : controllers)
    if (c != "flmpc" && c != "smpc" && c != "bilevel") throw ConfigError("unknown controller '" + c + "'");
  if (seeds.empty()) throw ConfigError("no seeds");
  for (int m : milestones)
    if (m <= 0) throw ConfigError("milestones must be positive");
  mission.budget_steps = budget_steps();
  if (mission.bank.version != membership_version) mission.bank = belief::MembershipBank::named(membership_version);
  mission.validate();
  smpc.validate();
  parent.validate();
  ga.validate();
}

json Scenario::to_json() const {
  const auto& m = mission;
  const auto& s = m.sensor;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = name;
  j["environment"] = {{"width", environment.width},
                      {"height", environment.height},
                      {"humans", environment.n_humans},
                      {"obstacle_density", environment.obstacle_density},
                      {"robots", environment.n_robots}};
  j["controllers"] = controllers;
  j["seeds"] = seeds;
  j["budget"] = budget;
  j["budget_steps"] = budget_steps();
  j["milestones"] = effective_milestones();
  j["mission"] = {{"replan_period", m.replan_period},
                  {"prior", m.prior},
                  {"certainty_decay", m.certainty_decay},
                  {"snapshot_every", m.snapshot_every},
                  {"explored_threshold", m.explored_threshold}};
  j["sensor"] = {{"hit_prob", s.hit_prob},
                 {"miss_prob", s.miss_prob},
                 {"blend_floor", s.blend_floor},
                 {"delta_max", s.delta_max}};
  j["fuzzy_update"] = {{"uncertainty_ceiling", m.fuzzy_update.uncertainty_ceiling},
                       {"rise_per_step", m.fuzzy_update.rise_per_step},
                       {"rate_divisor", m.fuzzy_update.rate_divisor}};
  j["membership"] = m.bank.to_json();
  j["controller"] = controller_json(m.controller);
  j["pso"] = {{"swarm_size", m.pso.swarm_size},
              {"iterations", m.pso.iterations},
              {"inertia", m.pso.inertia},
              {"cognitive", m.pso.cognitive},
              {"social", m.pso.social}};
  j["smpc"] = {{"w_search", smpc.w_search},
               {"w_uncertainty", smpc.w_uncertainty},
               {"w_rescue", smpc.w_rescue},
               {"w_obstacle", smpc.w_obstacle},
               {"obstacle_sharpness", smpc.obstacle_sharpness},
               {"rescue_threshold", smpc.rescue_threshold},
               {"discount_rate", smpc.discount_rate},
               {"certainty_decay", smpc.certainty_decay}};
  j["parent"] = {{"cluster_side", parent.cluster_side},
                 {"overlap_depth", parent.overlap_depth},
                 {"s_exp", parent.s_exp},
                 {"s_unexp", parent.s_unexp},
                 {"gamma_parent", parent.gamma_parent},
                 {"sigma", parent.sigma},
                 {"eta", parent.effective_eta()},
                 {"w_cluster", parent.w_cluster},
                 {"w_goal_parent", parent.w_goal_parent},
                 {"initial_score", parent.initial_score},
                 {"wall_threshold", parent.wall_threshold}};
  j["ga"] = {{"population", ga.population}, {"generations", ga.generations}, {"mutation_rate", ga.mutation_rate}};
  return j;
}

Scenario Scenario::from_json(const json& j) {
  Scenario sc;
  Reader r(j, "");
  int version = kSchemaVersion;
  r.integer("schema_version", version);
  if (version != kSchemaVersion)
    Reader::fail("/schema_version", "unsupported schema version " + std::to_string(version));
  r.string("name", sc.name);

  if (r.has("environment")) {
    Reader e = r.child("environment");
    e.integer("width", sc.environment.width);
    e.integer("height", sc.environment.height);
    e.integer("humans", sc.environment.n_humans);
    e.number("obstacle_density", sc.environment.obstacle_density);
    e.integer("robots", sc.environment.n_robots);
    e.finish();
  }
  if (r.has("controllers")) {
    const json& v = r.raw("controllers");
    if (!v.is_array()) Reader::fail("/controllers", "expected an array of names");
    sc.controllers.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) Reader::fail("/controllers/" + std::to_string(i), "expected a string");
      sc.controllers.push_back(v[i].get<std::string>());
    }
  }
  if (r.has("seeds")) {
    const json& v = r.raw("seeds");
    if (v.is_string()) {
      try {
        sc.seeds = parse_seed_range(v.get<std::string>());
      } catch (const ConfigError& e) {
        Reader::fail("/seeds", e.what());
      }
    } else if (v.is_array()) {
      sc.seeds.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_unsigned()) Reader::fail("/seeds/" + std::to_string(i), "expected a non-negative integer");
        sc.seeds.push_back(v[i].get<std::uint64_t>());
      }
    } else {
      Reader::fail("/seeds", "expected \"a..b\" or an array");
    }
  }
  if (r.has("budget")) {
    const json& v = r.raw("budget");
    if (v.is_number_integer()) sc.budget = std::to_string(v.get<long long>());
    else if (v.is_string()) sc.budget = v.get<std::string>();
    else Reader::fail("/budget", "expected a step count or \"500/n_rob\"");
  }
  if (r.has("budget_steps")) r.raw("budget_steps");  // echoed value, recomputed
  if (r.has("milestones")) {
    const json& v = r.raw("milestones");
    if (!v.is_array()) Reader::fail("/milestones", "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) Reader::fail("/milestones/" + std::to_string(i), "expected an integer");
      sc.milestones.push_back(v[i].get<int>());
    }
  }

  auto& m = sc.mission;
  if (r.has("mission")) {
    Reader mr = r.child("mission");
    mr.integer("replan_period", m.replan_period);
    mr.numbers("prior", m.prior);
    mr.number("certainty_decay", m.certainty_decay);
    mr.integer("snapshot_every", m.snapshot_every);
    mr.number("explored_threshold", m.explored_threshold);
    mr.finish();
  }
  if (r.has("sensor")) {
    Reader s = r.child("sensor");
    s.number("hit_prob", m.sensor.hit_prob);
    s.number("miss_prob", m.sensor.miss_prob);
    s.number("blend_floor", m.sensor.blend_floor);
    s.number("delta_max", m.sensor.delta_max);
    s.finish();
  }
  if (r.has("fuzzy_update")) {
    Reader f = r.child("fuzzy_update");
    f.number("uncertainty_ceiling", m.fuzzy_update.uncertainty_ceiling);
    f.number("rise_per_step", m.fuzzy_update.rise_per_step);
    f.number("rate_divisor", m.fuzzy_update.rate_divisor);
    f.finish();
  }
  if (r.has("membership")) {
    const json& v = r.raw("membership");
    try {
      if (v.is_string()) m.bank = belief::MembershipBank::named(v.get<std::string>());
      else if (v.is_object()) m.bank = belief::MembershipBank::from_json(v);
      else Reader::fail("/membership", "expected a version name or a table object");
    } catch (const PathError&) {
      throw;
    } catch (const std::exception& e) {
      Reader::fail("/membership", e.what());
    }
  }
  sc.membership_version = m.bank.version;
  if (r.has("controller")) read_controller(r.child("controller"), m.controller);
  if (r.has("pso")) {
    Reader p = r.child("pso");
    p.integer("swarm_size", m.pso.swarm_size);
    p.integer("iterations", m.pso.iterations);
    p.number("inertia", m.pso.inertia);
    p.number("cognitive", m.pso.cognitive);
    p.number("social", m.pso.social);
    p.finish();
  }
  if (r.has("smpc")) {
    Reader s = r.child("smpc");
    auto& c = sc.smpc;
    s.number("w_search", c.w_search);
    s.number("w_uncertainty", c.w_uncertainty);
    s.number("w_rescue", c.w_rescue);
    s.number("w_obstacle", c.w_obstacle);
    s.number("obstacle_sharpness", c.obstacle_sharpness);
    s.number("rescue_threshold", c.rescue_threshold);
    s.number("discount_rate", c.discount_rate);
    s.number("certainty_decay", c.certainty_decay);
    s.finish();
  }
  if (r.has("parent")) {
    Reader p = r.child("parent");
    auto& c = sc.parent;
    p.integer("cluster_side", c.cluster_side);
    p.integer("overlap_depth", c.overlap_depth);
    p.number("s_exp", c.s_exp);
    p.number("s_unexp", c.s_unexp);
    p.number("gamma_parent", c.gamma_parent);
    p.number("sigma", c.sigma);
    p.number("eta", c.eta);
    p.number("w_cluster", c.w_cluster);
    p.number("w_goal_parent", c.w_goal_parent);
    p.number("initial_score", c.initial_score);
    p.number("wall_threshold", c.wall_threshold);
    p.finish();
  }
  if (r.has("ga")) {
    Reader g = r.child("ga");
    g.integer("population", sc.ga.population);
    g.integer("generations", sc.ga.generations);
    g.number("mutation_rate", sc.ga.mutation_rate);
    g.finish();
  }
  r.finish();
  try {
    sc.finalize();
  } catch (const PathError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(path + ":" + std::to_string(line_of_offset(text, offset)) + ": " + e.what());
  }
  try {
    return Scenario::from_json(j);
  } catch (const PathError& e) {
    throw ConfigError(path + ":" + std::to_string(line_of_pointer(text, e.pointer())) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::unique_ptr<coord::Planner> make_planner(const Scenario& scenario, const std::string& controller) {
  if (controller == "flmpc") return std::make_unique<coord::FlmpcPlanner>(scenario.mission);
  if (controller == "smpc") return std::make_unique<smpc::SmpcPlanner>(scenario.mission, scenario.smpc);
  if (controller == "bilevel")
    return std::make_unique<parent::BilevelPlanner>(scenario.mission, scenario.parent, scenario.ga);
  throw ConfigError("unknown controller '" + controller + "'");
}

MissionLog run_one(const Scenario& scenario, const std::string& controller, std::uint64_t seed) {
  auto planner = make_planner(scenario, controller);
  auto env = sim::generate_environment(scenario.environment, seed);
  return coord::run_mission(std::move(env), *planner, scenario.mission);
}

std::vector<MissionLog> run_batch(const Scenario& scenario, int threads) {
  struct Job {
    std::string controller;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& c : scenario.controllers)
    for (auto s : scenario.seeds) jobs.push_back({c, s});

  std::vector<MissionLog> logs(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        logs[i] = run_one(scenario, jobs[i].controller, jobs[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1))));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return logs;
}

json WinAdvantageReport::to_json() const {
  json j;
  j["controller_a"] = controller_a;
  j["controller_b"] = controller_b;
  json bins = json::array();
  const auto& edges = advantage_bin_edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    bins.push_back(i + 1 < edges.size() ? "[" + std::to_string(static_cast<int>(edges[i])) + "," +
                                              std::to_string(static_cast<int>(edges[i + 1])) + ")"
                                        : "[" + std::to_string(static_cast<int>(edges[i])) + ",inf)");
  bins.push_back("infinite");
  j["histogram_bins"] = bins;
  json sums = json::array();
  for (const auto& s : summaries) {
    sums.push_back({{"milestone", s.milestone},
                    {"wins_a", s.wins_a},
                    {"wins_b", s.wins_b},
                    {"ties", s.ties},
                    {"undecided", s.undecided},
                    {"histogram_a", s.histogram_a},
                    {"histogram_b", s.histogram_b}});
  }
  j["milestones"] = sums;
  json outs = json::array();
  for (const auto& o : outcomes) {
    json adv;
    if (!o.decided()) adv = nullptr;
    else if (std::isinf(o.advantage)) adv = "infinite";
    else adv = static_cast<long long>(o.advantage);
    outs.push_back({{"milestone", o.milestone},
                    {"seed", o.seed},
                    {"step_a", o.step_a},
                    {"step_b", o.step_b},
                    {"winner", o.winner.empty() ? json(nullptr) : json(o.winner)},
                    {"advantage", adv}});
  }
  j["outcomes"] = outs;
  return j;
}

WinAdvantageReport compare_controllers(std::span<const MissionLog> logs_a, std::span<const MissionLog> logs_b,
                                       std::span<const int> milestones) {
  WinAdvantageReport report;
  std::map<std::uint64_t, const MissionLog*> a, b;
  for (const auto& l : logs_a)
    if (!a.emplace(l.seed(), &l).second) throw ContractViolation("duplicate seed " + std::to_string(l.seed()));
  for (const auto& l : logs_b)
    if (!b.emplace(l.seed(), &l).second) throw ContractViolation("duplicate seed " + std::to_string(l.seed()));
  for (const auto& [seed, log] : a) {
    (void)log;
    if (!b.count(seed)) throw ContractViolation("seed " + std::to_string(seed) + " has no paired log");
  }
  for (const auto& [seed, log] : b) {
    (void)log;
    if (!a.count(seed)) throw ContractViolation("seed " + std::to_string(seed) + " has no paired log");
  }
  if (!logs_a.empty()) report.controller_a = logs_a.front().controller();
  if (!logs_b.empty()) report.controller_b = logs_b.front().controller();

  const auto& edges = advantage_bin_edges();
  auto bin_of = [&](double adv) {
    if (std::isinf(adv)) return edges.size();
    std::size_t k = 0;
    while (k + 1 < edges.size() && adv >= edges[k + 1]) ++k;
    return k;
  };
  for (int m : milestones) {
    MilestoneSummary sum;
    sum.milestone = m;
    sum.histogram_a.assign(edges.size() + 1, 0);
    sum.histogram_b.assign(edges.size() + 1, 0);
    for (const auto& [seed, la] : a) {
      MilestoneOutcome o;
      o.milestone = m;
      o.seed = seed;
      o.step_a = la->milestone_step(m);
      o.step_b = b.at(seed)->milestone_step(m);
      if (o.step_a < 0 && o.step_b < 0) {
        ++sum.undecided;
      } else if (o.step_b < 0 || (o.step_a >= 0 && o.step_a < o.step_b)) {
        o.winner = "a";
        o.advantage = o.step_b < 0 ? std::numeric_limits<double>::infinity() : o.step_b - o.step_a;
        ++sum.wins_a;
        ++sum.histogram_a[bin_of(o.advantage)];
      } else if (o.step_a < 0 || o.step_b < o.step_a) {
        o.winner = "b";
        o.advantage = o.step_a < 0 ? std::numeric_limits<double>::infinity() : o.step_a - o.step_b;
        ++sum.wins_b;
        ++sum.histogram_b[bin_of(o.advantage)];
      } else {
        o.winner = "tie";
        ++sum.ties;
      }
      report.outcomes.push_back(o);
    }
    report.summaries.push_back(std::move(sum));
  }
  return report;
}

std::vector<MissionLog> select(std::span<const MissionLog> logs, const std::string& controller) {
  std::vector<MissionLog> out;
  for (const auto& l : logs)
    if (l.controller() == controller) out.push_back(l);
  return out;
}

std::string log_file_name(const std::string& controller, std::uint64_t seed) {
  return controller + "_seed" + std::to_string(seed) + ".jsonl";
}

void export_results(std::span<const MissionLog> input, std::span<const int> milestones, const std::string& out_dir) {
  // Canonical order so the artifacts depend on the set of logs only.
  auto rank = [](const std::string& c) { return c == "flmpc" ? 0 : c == "smpc" ? 1 : c == "bilevel" ? 2 : 3; };
  std::vector<MissionLog> logs(input.begin(), input.end());
  std::stable_sort(logs.begin(), logs.end(), [&](const MissionLog& a, const MissionLog& b) {
    const auto ka = std::make_tuple(rank(a.controller()), a.controller(), a.seed());
    const auto kb = std::make_tuple(rank(b.controller()), b.controller(), b.seed());
    return ka < kb;
  });
  const fs::path root(out_dir);
  ensure_dir(root / "logs");
  ensure_dir(root / "maps");
  for (const auto& l : logs) l.write((root / "logs" / log_file_name(l.controller(), l.seed())).string());

  std::vector<std::string> controllers;
  for (const auto& l : logs)
    if (std::find(controllers.begin(), controllers.end(), l.controller()) == controllers.end())
      controllers.push_back(l.controller());

  {
    auto out = open_out(root / "milestones.csv");
    out << "controller,seed,milestone,step\n";
    for (const auto& l : logs)
      for (int m : milestones) out << l.controller() << ',' << l.seed() << ',' << m << ',' << csv_step(l.milestone_step(m)) << '\n';
  }
  {
    auto out = open_out(root / "summary.csv");
    out << "controller,seed,humans,rescued,complete,final_step,explored_fraction,degenerate_updates\n";
    char buf[32];
    for (const auto& l : logs) {
      const auto& s = l.summary;
      std::snprintf(buf, sizeof buf, "%.6f", s.explored_fraction);
      out << l.controller() << ',' << l.seed() << ',' << s.humans_total << ',' << s.rescued << ','
          << (s.complete ? 1 : 0) << ',' << s.final_step << ',' << buf << ',' << s.degenerate_updates << '\n';
    }
  }

  json report;
  report["milestones"] = std::vector<int>(milestones.begin(), milestones.end());
  report["comparisons"] = json::array();
  for (std::size_t i = 0; i < controllers.size(); ++i)
    for (std::size_t k = i + 1; k < controllers.size(); ++k) {
      const auto a = select(logs, controllers[i]);
      const auto b = select(logs, controllers[k]);
      report["comparisons"].push_back(compare_controllers(a, b, milestones).to_json());
    }
  json missions = json::array();
  for (const auto& l : logs) {
    const auto& s = l.summary;
    missions.push_back({{"controller", l.controller()},
                        {"seed", l.seed()},
                        {"rescued", s.rescued},
                        {"humans", s.humans_total},
                        {"complete", s.complete},
                        {"final_step", s.final_step},
                        {"explored_fraction", s.explored_fraction}});
  }
  report["missions"] = missions;
  open_out(root / "report.json") << report.dump(2) << '\n';

  for (const auto& l : logs) {
    if (l.snapshots.empty()) continue;
    const auto& snap = l.snapshots.back();
    belief::write_pgm_bytes(snap.width, snap.height, snap.uncertainty,
                            (root / "maps" / (l.controller() + "_seed" + std::to_string(l.seed()) + ".pgm")).string());
  }
}

void export_timing(std::span<const MissionLog> logs, const std::string& path) {
  struct Acc {
    std::size_t evaluations = 0;
    double seconds = 0.0;
    std::size_t plans = 0;
    int missions = 0;
  };
  std::map<std::string, Acc> acc;
  auto out = open_out(path);
  out << "controller,seed,plans,evaluations,grading_seconds,per_candidate_us\n";
  char buf[128];
  for (const auto& l : logs) {
    const auto& t = l.timing;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.4f", t.plans, t.evaluations, t.seconds, t.per_candidate() * 1e6);
    out << l.controller() << ',' << l.seed() << ',' << buf << '\n';
    auto& a = acc[l.controller()];
    a.evaluations += t.evaluations;
    a.seconds += t.seconds;
    a.plans += t.plans;
    ++a.missions;
  }
  for (const auto& [name, a] : acc) {
    const double per = a.evaluations ? a.seconds / static_cast<double>(a.evaluations) : 0.0;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.4f", a.plans, a.evaluations, a.seconds, per * 1e6);
    out << name << ",all," << buf << '\n';
  }
}

std::vector<MissionLog> load_logs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<MissionLog> logs;
  for (const auto& f : files) logs.push_back(MissionLog::read(f.string()));
  return logs;
}

}  // namespace sar::harness
