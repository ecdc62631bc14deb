#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sar/baseline_smpc.hpp"
#include "sar/coordination.hpp"
#include "sar/mission_log.hpp"
#include "sar/optim.hpp"
#include "sar/parent.hpp"
#include "sar/sim_env.hpp"

namespace sar::harness {

inline constexpr int kSchemaVersion = 1;

/// Everything needed to re-run a batch. Budget is either a fixed step count
/// or the formula "500/n_rob".
struct Scenario {
  std::string name = "scenario";
  sim::EnvironmentConfig environment;
  std::vector<std::string> controllers{"flmpc", "smpc"};
  std::string budget = "500/n_rob";
  coord::MissionParams mission;
  std::string membership_version = "v1";
  smpc::StochasticCostParams smpc;
  parent::ParentParams parent;
  optim::GaOptions ga;
  std::vector<std::uint64_t> seeds{1};
  /// Milestones (humans rescued) for the win/advantage report; empty = 1..humans.
  std::vector<int> milestones;

  /// Resolves the budget and validates every block.
  void finalize();
  int budget_steps() const;
  std::vector<int> effective_milestones() const;

  nlohmann::json to_json() const;
  /// Missing keys take defaults; unknown keys and bad types throw ConfigError
  /// naming the offending JSON path.
  static Scenario from_json(const nlohmann::json& j);
};

/// Reads a scenario file. Errors carry "file:line" (syntax) or the file and
/// JSON path plus its line (semantic).
Scenario load_scenario(const std::string& path);

/// "a..b" (inclusive) or a comma list.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

std::unique_ptr<coord::Planner> make_planner(const Scenario& scenario, const std::string& controller);

MissionLog run_one(const Scenario& scenario, const std::string& controller, std::uint64_t seed);

/// One log per (controller, seed) in controller-major order; missions run
/// on up to `threads` worker threads, results are independent of the count.
std::vector<MissionLog> run_batch(const Scenario& scenario, int threads = 1);

struct MilestoneOutcome {
  int milestone = 0;
  std::uint64_t seed = 0;
  int step_a = -1;  ///< -1: not reached within budget
  int step_b = -1;
  /// "a", "b", "tie", or "" when neither reached the milestone.
  std::string winner;
  double advantage = 0.0;  ///< infinity when only one side reached it

  bool decided() const { return !winner.empty(); }
};

struct MilestoneSummary {
  int milestone = 0;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  int undecided = 0;
  /// Advantage histogram bins [0,10), [10,20), ... [50,inf) and "infinite".
  std::vector<int> histogram_a;
  std::vector<int> histogram_b;
};

struct WinAdvantageReport {
  std::string controller_a;
  std::string controller_b;
  std::vector<MilestoneOutcome> outcomes;
  std::vector<MilestoneSummary> summaries;

  nlohmann::json to_json() const;
};

inline const std::vector<double>& advantage_bin_edges() {
  static const std::vector<double> edges{0, 10, 20, 30, 40, 50};
  return edges;
}

/// Pairs logs by seed. Throws ContractViolation for unpaired seeds.
WinAdvantageReport compare_controllers(std::span<const MissionLog> logs_a, std::span<const MissionLog> logs_b,
                                       std::span<const int> milestones);

/// Logs of one controller, in input order.
std::vector<MissionLog> select(std::span<const MissionLog> logs, const std::string& controller);

std::string log_file_name(const std::string& controller, std::uint64_t seed);

/// Writes logs/, milestones.csv, report.json (all controller pairs), the
/// end-of-mission uncertainty PGMs and the mission summary CSV. Rows follow
/// flmpc, smpc, bilevel, then other controllers by name, each by seed.
void export_results(std::span<const MissionLog> logs, std::span<const int> milestones, const std::string& out_dir);

/// Per-controller grading wall-time statistics (kept apart from the report).
void export_timing(std::span<const MissionLog> logs, const std::string& path);

/// Loads every *.jsonl log in `dir`, sorted by file name.
std::vector<MissionLog> load_logs(const std::string& dir);

}  // namespace sar::harness
