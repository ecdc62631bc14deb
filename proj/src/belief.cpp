#include "sar/belief.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sar::belief {

ProbabilityMap::ProbabilityMap(int width, int height, std::span<const double> prior)
    : width_(width), height_(height), n_states_(prior.size()) {
  if (width <= 0 || height <= 0) throw ConfigError("probability map dimensions must be positive");
  if (prior.size() < 2) throw ConfigError("prior needs at least two states");
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("prior entries must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("prior must sum to 1");
  const std::size_t cells = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  data_.resize(cells * n_states_);
  for (std::size_t c = 0; c < cells; ++c) std::copy(prior.begin(), prior.end(), data_.begin() + c * n_states_);
}

StateIndex ProbabilityMap::map_state(Cell c) const {
  auto b = at(c);
  return static_cast<StateIndex>(std::max_element(b.begin(), b.end()) - b.begin());
}

bool bayes_update_belief(std::span<double> belief, StateIndex observed, double detectability,
                         const sim::SensorModel& sensor) {
  double scratch[16];
  std::vector<double> heap;
  double* post = scratch;
  if (belief.size() > 16) {
    heap.resize(belief.size());
    post = heap.data();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    post[i] = sensor.likelihood(observed, static_cast<StateIndex>(i), detectability) * belief[i];
    total += post[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  for (std::size_t i = 0; i < belief.size(); ++i) belief[i] = post[i] / total;
  return true;
}

void bayes_update(ProbabilityMap& map, std::span<const sim::Observation> observations,
                  const sim::SensorModel& sensor) {
  for (const auto& obs : observations) {
    if (!map.contains(obs.cell)) throw ContractViolation("observation outside the probability map");
    if (obs.observed_state >= map.n_states()) throw ContractViolation("observation state out of range");
    if (!bayes_update_belief(map.at(obs.cell), obs.observed_state, obs.detectability, sensor))
      map.count_degenerate();
  }
}

void update_certainty_map(CertaintyMap& map, std::span<const sim::Observation> observations, double decay,
                          int steps) {
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("certainty decay must lie in (0, 1]");
  auto& z = map.grid();
  std::vector<char> seen(z.size(), 0);
  for (const auto& obs : observations) {
    const std::size_t i = z.index(obs.cell);
    z[i] = 1.0 - (1.0 - z[i]) * (1.0 - obs.detectability);
    seen[i] = 1;
  }
  const double factor = std::pow(decay, steps);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!seen[i]) z[i] *= factor;
}

FuzzyMapSet::FuzzyMapSet(int width, int height) {
  for (auto& l : layers_) l = Grid<double>(width, height, 0.0);
}

void FuzzyUpdateParams::validate() const {
  if (!(uncertainty_ceiling >= 0.0 && uncertainty_ceiling <= 1.0))
    throw ConfigError("uncertainty ceiling must lie in [0, 1]");
  if (!(rise_per_step >= 0.0) || !std::isfinite(rise_per_step)) throw ConfigError("uncertainty rise must be >= 0");
  if (!(rate_divisor > 0.0) || !std::isfinite(rate_divisor)) throw ConfigError("rate divisor must be > 0");
}

void refresh_static_layers(FuzzyMapSet& maps, const ProbabilityMap& prob, const MembershipBank& bank, Cell c) {
  const double p_obstacle = prob.prob(c, sim::kObstacle);
  const double p_human = prob.prob(c, sim::kHuman);
  const double u = maps.at(Layer::uncertainty, c);
  maps.layer(Layer::passability)[c] = bank.curve(mf::kPassability)(p_obstacle);
  maps.layer(Layer::human_detection_reward)[c] = bank.curve(mf::kHumanDetectionReward)(p_human);
  maps.layer(Layer::exploration_reward)[c] = bank.curve(mf::kExplorationReward)(u);
}

FuzzyMapSet initial_fuzzy_maps(const ProbabilityMap& prob, const MembershipBank& bank) {
  FuzzyMapSet maps(prob.width(), prob.height());
  maps.layer(Layer::uncertainty).fill(1.0);
  const double neutral = bank.surface(mf::kMeasurementConsistency)(0.0, 0.0);
  maps.layer(Layer::measurement_consistency).fill(neutral);
  for (int y = 0; y < prob.height(); ++y)
    for (int x = 0; x < prob.width(); ++x) refresh_static_layers(maps, prob, bank, {x, y});
  return maps;
}

double measurement_consistency(const ProbabilityMap& prob, const sim::Observation& obs,
                               const sim::SensorModel& sensor, const MembershipBank& bank) {
  const double likelihood = sensor.base_likelihood(obs.observed_state, prob.map_state(obs.cell));
  return bank.surface(mf::kMeasurementConsistency)(obs.detectability, likelihood);
}

double observed_uncertainty(double previous, double consistency, double detectability,
                            const MembershipBank& bank) {
  const double full = bank.surface(mf::kUncertaintyObserved)(previous, consistency);
  return std::clamp(previous - detectability * (previous - full), 0.0, 1.0);
}

double unobserved_uncertainty(double previous, int elapsed_steps, const FuzzyUpdateParams& params) {
  if (previous >= params.uncertainty_ceiling || elapsed_steps <= 0) return previous;
  const double risen = previous + params.rise_per_step * elapsed_steps / params.rate_divisor;
  return std::min(params.uncertainty_ceiling, risen);
}

void update_fuzzy_maps(FuzzyMapSet& maps, const ProbabilityMap& updated_prob,
                       std::span<const sim::Observation> observations, const MembershipBank& bank,
                       const sim::SensorModel& sensor, const FuzzyUpdateParams& params, int elapsed_steps) {
  auto& u = maps.layer(Layer::uncertainty);
  auto& consistency = maps.layer(Layer::measurement_consistency);
  const double neutral = bank.surface(mf::kMeasurementConsistency)(0.0, 0.0);
  std::vector<char> seen(u.size(), 0);

  for (const auto& obs : observations) {
    const std::size_t i = u.index(obs.cell);
    const double c = measurement_consistency(updated_prob, obs, sensor, bank);
    // Several observations of one cell in a round: the last one sets the layer.
    consistency[i] = c;
    u[i] = observed_uncertainty(u[i], c, obs.detectability, bank);
    seen[i] = 1;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (seen[i]) continue;
    u[i] = unobserved_uncertainty(u[i], elapsed_steps, params);
    consistency[i] = neutral;
  }
  for (int y = 0; y < maps.height(); ++y)
    for (int x = 0; x < maps.width(); ++x) refresh_static_layers(maps, updated_prob, bank, {x, y});
}

namespace {

void write_doubles(std::ofstream& out, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

void write_sidecar(const std::string& stem, int width, int height, const std::vector<std::string>& layers) {
  nlohmann::json j;
  j["width"] = width;
  j["height"] = height;
  j["layers"] = layers;
  j["dtype"] = "float64-le";
  j["layout"] = "layer-major, row-major cells";
  std::ofstream out(stem + ".json");
  if (!out) throw IoError("cannot write " + stem + ".json");
  out << j.dump(2) << '\n';
}

std::ofstream open_binary(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

void export_binary(const FuzzyMapSet& maps, const std::string& stem) {
  auto out = open_binary(stem + ".bin");
  std::vector<std::string> names;
  for (const auto& info : kLayerTable) {
    write_doubles(out, maps.layer(info.layer).values());
    names.emplace_back(info.name);
  }
  write_sidecar(stem, maps.width(), maps.height(), names);
}

void export_binary(const ProbabilityMap& map, const std::string& stem) {
  auto out = open_binary(stem + ".bin");
  const std::size_t cells = static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height());
  std::vector<double> plane(cells);
  std::vector<std::string> names;
  for (std::size_t s = 0; s < map.n_states(); ++s) {
    for (std::size_t c = 0; c < cells; ++c) plane[c] = map.raw()[c * map.n_states() + s];
    write_doubles(out, plane);
    names.push_back("state_" + std::to_string(s));
  }
  write_sidecar(stem, map.width(), map.height(), names);
}

std::vector<double> read_binary(const std::string& stem, nlohmann::json* sidecar) {
  std::ifstream side(stem + ".json");
  if (!side) throw IoError("cannot read " + stem + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(stem + ".json: " + e.what());
  }
  const std::size_t count = j.at("width").get<std::size_t>() * j.at("height").get<std::size_t>() *
                            j.at("layers").size();
  std::ifstream in(stem + ".bin", std::ios::binary);
  if (!in) throw IoError("cannot read " + stem + ".bin");
  std::vector<double> values(count);
  for (auto& v : values) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError(stem + ".bin: truncated");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
  if (sidecar) *sidecar = std::move(j);
  return values;
}

std::vector<std::uint8_t> quantize(const Grid<double>& grid) {
  std::vector<std::uint8_t> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(grid[i], 0.0, 1.0)));
  return out;
}

void write_pgm_bytes(int width, int height, std::span<const std::uint8_t> bytes, const std::string& path) {
  if (bytes.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw ContractViolation("pgm payload size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_pgm(const Grid<double>& grid, const std::string& path) {
  write_pgm_bytes(grid.width(), grid.height(), quantize(grid), path);
}

Grid<std::uint8_t> read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255) throw IoError(path + ": not an 8-bit P5 image");
  in.get();
  Grid<std::uint8_t> grid(width, height, 0);
  if (!in.read(reinterpret_cast<char*>(grid.values().data()), static_cast<std::streamsize>(grid.size())))
    throw IoError(path + ": truncated");
  return grid;
}

}  // namespace sar::belief
