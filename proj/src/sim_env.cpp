#include "sar/sim_env.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "sar/geometry.hpp"

namespace sar::sim {

CellStateSpace::CellStateSpace() : CellStateSpace({"empty", "human", "obstacle"}) {}

CellStateSpace::CellStateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw ConfigError("state space needs at least two labels");
  if (labels_.size() > 255) throw ConfigError("state space too large");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw ConfigError("state labels must be unique");
}

StateIndex CellStateSpace::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw std::out_of_range("unknown state label: " + label);
  return static_cast<StateIndex>(it - labels_.begin());
}

int Environment::humans_remaining() const {
  const auto v = truth.values();
  return static_cast<int>(std::count(v.begin(), v.end(), kHuman));
}

namespace {

constexpr int kObstacleAttempts = 32;
constexpr int kPlacementAttempts = 256;

constexpr Cell kNeighbors8[] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

Grid<std::uint8_t> reachable_from(const Grid<StateIndex>& truth, std::span<const Cell> sources) {
  Grid<std::uint8_t> seen(truth.width(), truth.height(), 0);
  std::deque<Cell> queue;
  for (Cell s : sources) {
    if (!seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Cell d : kNeighbors8) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (!truth.contains(n) || seen[n] || truth[n] == kObstacle) continue;
      seen[n] = 1;
      queue.push_back(n);
    }
  }
  return seen;
}

}  // namespace

Environment generate_environment(const EnvironmentConfig& config, std::uint64_t seed) {
  if (config.width <= 0 || config.height <= 0) throw ConfigError("grid dimensions must be positive");
  if (config.n_humans < 0) throw ConfigError("n_humans must be non-negative");
  if (config.n_robots < 1) throw ConfigError("at least one robot is required");
  if (!(config.obstacle_density >= 0.0 && config.obstacle_density < 1.0))
    throw ConfigError("obstacle_density must lie in [0, 1)");
  const double cells = static_cast<double>(config.width) * config.height;
  const double expected_obstacles = config.obstacle_density * cells;
  if (cells <= config.n_humans + config.n_robots + expected_obstacles)
    throw ConfigError("grid too small for requested humans, robots and obstacle density");

  const std::size_t entities = static_cast<std::size_t>(config.n_humans + config.n_robots);
  Rng rng(stream_seed({seed, 0x656e76ULL}));

  for (int obstacle_attempt = 0; obstacle_attempt < kObstacleAttempts; ++obstacle_attempt) {
    Environment env;
    env.seed = seed;
    env.truth = Grid<StateIndex>(config.width, config.height, kEmpty);
    for (std::size_t i = 0; i < env.truth.size(); ++i) {
      if (rng.bernoulli(config.obstacle_density)) env.truth[i] = kObstacle;
    }
    std::vector<std::size_t> free_cells;
    for (std::size_t i = 0; i < env.truth.size(); ++i) {
      if (env.truth[i] == kEmpty) free_cells.push_back(i);
    }
    if (free_cells.size() < entities) continue;

    for (int placement = 0; placement < kPlacementAttempts; ++placement) {
      std::vector<std::size_t> pool = free_cells;
      for (std::size_t i = 0; i < entities; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<Cell> robot_cells;
      for (int r = 0; r < config.n_robots; ++r) robot_cells.push_back(env.truth.cell(pool[r]));
      const auto reach = reachable_from(env.truth, robot_cells);
      bool ok = true;
      for (std::size_t i = config.n_robots; i < entities; ++i) {
        if (!reach[pool[i]]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;

      env.robots.clear();
      for (int r = 0; r < config.n_robots; ++r) env.robots.push_back({r, robot_cells[r]});
      for (std::size_t i = config.n_robots; i < entities; ++i) env.truth[pool[i]] = kHuman;
      return env;
    }
  }
  throw ConfigError("could not place humans and robots with every human reachable");
}

MoveOutcome step_robot(Environment& env, int robot_id, Cell target) {
  if (robot_id < 0 || robot_id >= static_cast<int>(env.robots.size()) ||
      env.robots[robot_id].id != robot_id)
    throw ContractViolation("unknown robot id " + std::to_string(robot_id));
  RobotState& robot = env.robots[robot_id];
  if (!env.truth.contains(target)) throw ContractViolation("move target outside the grid");
  if (!is_same_or_adjacent(robot.position, target))
    throw ContractViolation("move target is not adjacent to the robot");

  StateIndex& state = env.truth[target];
  if (state == kObstacle) return MoveOutcome::canceled;
  robot.position = target;
  if (state == kHuman) {
    state = kEmpty;
    return MoveOutcome::rescued;
  }
  return MoveOutcome::moved;
}

double detectability(double delta, double delta_max) {
  const double r = delta / delta_max;
  return std::max(1.0 - r * r, 0.0);
}

void SensorModel::validate() const {
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(hit_prob) || !is_prob(miss_prob) || !is_prob(blend_floor))
    throw ConfigError("sensor probabilities must lie in [0, 1]");
  if (!(delta_max > 0.0)) throw ConfigError("sensor delta_max must be positive");
  if (n_states < 2) throw ConfigError("sensor needs at least two states");
  const double row = hit_prob + static_cast<double>(n_states - 1) * miss_prob;
  if (std::abs(row - 1.0) > 1e-12)
    throw ConfigError("distance-zero sensor row must sum to one");
}

StateIndex SensorModel::sample(StateIndex truth, double d, Rng& rng) const {
  double total = 0.0;
  for (std::size_t o = 0; o < n_states; ++o) total += likelihood(static_cast<StateIndex>(o), truth, d);
  double u = rng.uniform() * total;
  for (std::size_t o = 0; o + 1 < n_states; ++o) {
    u -= likelihood(static_cast<StateIndex>(o), truth, d);
    if (u < 0.0) return static_cast<StateIndex>(o);
  }
  return static_cast<StateIndex>(n_states - 1);
}

void sense_into(const Environment& env, Cell position, const SensorModel& model, Rng& rng,
                std::vector<Observation>& out) {
  if (!env.truth.contains(position)) throw ContractViolation("sensing from outside the grid");
  // Offsets depend only on delta_max; cache the last radius per thread.
  thread_local double cached_radius = -1.0;
  thread_local std::vector<DiscOffset> offsets;
  if (cached_radius != model.delta_max) {
    offsets = disc_offsets(model.delta_max);
    cached_radius = model.delta_max;
  }
  for (const DiscOffset& off : offsets) {
    const Cell c{position.x + off.dx, position.y + off.dy};
    if (!env.truth.contains(c)) continue;
    const double d = detectability(off.distance, model.delta_max);
    if (d <= 0.0) continue;
    out.push_back({c, model.sample(env.truth[c], d, rng), d});
  }
}

std::vector<Observation> sense(const Environment& env, Cell position, const SensorModel& model,
                               Rng& rng) {
  std::vector<Observation> out;
  sense_into(env, position, model, rng, out);
  return out;
}

Environment read_grid(std::istream& in) {
  int w = 0;
  int h = 0;
  std::string header;
  if (!std::getline(in, header)) throw IoError("grid file: missing header");
  std::istringstream hs(header);
  if (!(hs >> w >> h) || w <= 0 || h <= 0) throw IoError("grid file: bad header '" + header + "'");
  Environment env;
  env.truth = Grid<StateIndex>(w, h, kEmpty);
  std::string row;
  for (int y = 0; y < h; ++y) {
    if (!std::getline(in, row)) throw IoError("grid file: expected " + std::to_string(h) + " rows");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (static_cast<int>(row.size()) != w)
      throw IoError("grid file: row " + std::to_string(y + 2) + " has wrong width");
    for (int x = 0; x < w; ++x) {
      const Cell c{x, y};
      switch (row[x]) {
        case '.': break;
        case 'H': env.truth[c] = kHuman; break;
        case '#': env.truth[c] = kObstacle; break;
        case 'R': {
          const int id = static_cast<int>(env.robots.size());
          env.robots.push_back({id, c});
          break;
        }
        default:
          throw IoError("grid file: unexpected character '" + std::string(1, row[x]) +
                        "' on line " + std::to_string(y + 2));
      }
    }
  }
  return env;
}

Environment read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path);
  return read_grid(in);
}

void write_grid(std::ostream& out, const Environment& env) {
  out << env.width() << ' ' << env.height() << '\n';
  Grid<char> chars(env.width(), env.height(), '.');
  for (std::size_t i = 0; i < env.truth.size(); ++i) {
    if (env.truth[i] == kHuman) chars[i] = 'H';
    if (env.truth[i] == kObstacle) chars[i] = '#';
  }
  for (const RobotState& r : env.robots) chars[r.position] = 'R';
  for (int y = 0; y < env.height(); ++y) {
    for (int x = 0; x < env.width(); ++x) out << chars[Cell{x, y}];
    out << '\n';
  }
}

void write_grid_file(const std::string& path, const Environment& env) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grid file " + path);
  write_grid(out, env);
  if (!out) throw IoError("failed writing grid file " + path);
}

}  // namespace sar::sim
