#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sar/grid.hpp"
#include "sar/membership.hpp"
#include "sar/sim_env.hpp"

namespace sar::belief {

/// Per-cell categorical belief over the cell state space.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  ProbabilityMap(int width, int height, std::span<const double> prior);

  /// The mission-start prior for {empty, human, obstacle}.
  static std::vector<double> default_prior() { return {0.34, 0.33, 0.33}; }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t n_states() const { return n_states_; }
  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  std::span<const double> at(Cell c) const { return {data_.data() + offset(c), n_states_}; }
  std::span<double> at(Cell c) { return {data_.data() + offset(c), n_states_}; }
  double prob(Cell c, StateIndex s) const { return data_[offset(c) + s]; }
  /// Most likely state; ties go to the lowest index.
  StateIndex map_state(Cell c) const;

  /// Number of observations rejected because the posterior vanished.
  std::size_t degenerate_updates() const { return degenerate_updates_; }
  void count_degenerate() { ++degenerate_updates_; }

  std::span<const double> raw() const { return data_; }

 private:
  std::size_t offset(Cell c) const {
    return (static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x)) *
           n_states_;
  }

  int width_ = 0;
  int height_ = 0;
  std::size_t n_states_ = 0;
  std::vector<double> data_;
  std::size_t degenerate_updates_ = 0;
};

/// Bayes update of one belief vector in place; false (belief untouched) if
/// the posterior normalizer is zero.
bool bayes_update_belief(std::span<double> belief, StateIndex observed, double detectability,
                         const sim::SensorModel& sensor);

/// Applies every observation in order. Unobserved cells are unchanged.
void bayes_update(ProbabilityMap& map, std::span<const sim::Observation> observations,
                  const sim::SensorModel& sensor);

/// Certainty degrees in [0,1], initialized to zero.
class CertaintyMap {
 public:
  CertaintyMap() = default;
  CertaintyMap(int width, int height) : z_(width, height, 0.0) {}

  double at(Cell c) const { return z_[c]; }
  double& at(Cell c) { return z_[c]; }
  const Grid<double>& grid() const { return z_; }
  Grid<double>& grid() { return z_; }

 private:
  Grid<double> z_;
};

/// Observed cells gain certainty in proportion to detectability; all other
/// cells decay by `decay` (applied `steps` times).
void update_certainty_map(CertaintyMap& map, std::span<const sim::Observation> observations, double decay,
                          int steps = 1);

enum class Layer : std::size_t {
  passability = 0,
  human_detection_reward,
  exploration_reward,
  uncertainty,
  measurement_consistency,
};
inline constexpr std::size_t kLayerCount = 5;

enum class LayerRole { constraint, reward, auxiliary };

struct LayerInfo {
  Layer layer;
  const char* name;
  LayerRole role;
  bool dynamic;
};

inline constexpr std::array<LayerInfo, kLayerCount> kLayerTable{{
    {Layer::passability, "passability", LayerRole::constraint, false},
    {Layer::human_detection_reward, "human_detection_reward", LayerRole::reward, false},
    {Layer::exploration_reward, "exploration_reward", LayerRole::reward, false},
    {Layer::uncertainty, "uncertainty", LayerRole::auxiliary, true},
    {Layer::measurement_consistency, "measurement_consistency", LayerRole::auxiliary, false},
}};

/// The n^f fuzzy layers of the environment model.
class FuzzyMapSet {
 public:
  FuzzyMapSet() = default;
  FuzzyMapSet(int width, int height);

  int width() const { return layers_[0].width(); }
  int height() const { return layers_[0].height(); }

  const Grid<double>& layer(Layer l) const { return layers_[static_cast<std::size_t>(l)]; }
  Grid<double>& layer(Layer l) { return layers_[static_cast<std::size_t>(l)]; }
  double at(Layer l, Cell c) const { return layer(l)[c]; }

 private:
  std::array<Grid<double>, kLayerCount> layers_;
};

struct FuzzyUpdateParams {
  double uncertainty_ceiling = 0.648;
  double rise_per_step = 0.002;
  /// 1 for the small-world case, 100 for the large one.
  double rate_divisor = 1.0;

  void validate() const;
};

/// Mission-start fuzzy maps: uncertainty 1, neutral consistency, static layers
/// from `prob`.
FuzzyMapSet initial_fuzzy_maps(const ProbabilityMap& prob, const MembershipBank& bank);

/// Dynamic-uncertainty update for one observed cell.
double observed_uncertainty(double previous, double consistency, double detectability,
                            const MembershipBank& bank);
/// Unobserved rise towards the ceiling; values at/above the ceiling are fixed.
double unobserved_uncertainty(double previous, int elapsed_steps, const FuzzyUpdateParams& params);
/// Consistency of one observation with the current most-likely state.
double measurement_consistency(const ProbabilityMap& prob, const sim::Observation& obs,
                               const sim::SensorModel& sensor, const MembershipBank& bank);

/// Runs after `bayes_update`; `elapsed_steps` is the time since the previous update.
void update_fuzzy_maps(FuzzyMapSet& maps, const ProbabilityMap& updated_prob,
                       std::span<const sim::Observation> observations, const MembershipBank& bank,
                       const sim::SensorModel& sensor, const FuzzyUpdateParams& params,
                       int elapsed_steps = 1);

/// Recomputes the static reward/constraint layers of one cell.
void refresh_static_layers(FuzzyMapSet& maps, const ProbabilityMap& prob, const MembershipBank& bank, Cell c);

// Export: flat little-endian float64 binary plus a JSON sidecar, and 8-bit PGM.

void export_binary(const FuzzyMapSet& maps, const std::string& stem);
void export_binary(const ProbabilityMap& map, const std::string& stem);
/// Reads back a binary export as (layer-major) values plus its sidecar.
std::vector<double> read_binary(const std::string& stem, nlohmann::json* sidecar = nullptr);

/// Binary P5 PGM, brightness = round(255 * clamp(value, 0, 1)).
void write_pgm(const Grid<double>& grid, const std::string& path);
void write_pgm_bytes(int width, int height, std::span<const std::uint8_t> bytes, const std::string& path);
Grid<std::uint8_t> read_pgm(const std::string& path);
std::vector<std::uint8_t> quantize(const Grid<double>& grid);

}  // namespace sar::belief
