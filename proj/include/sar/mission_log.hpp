#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sar/common.hpp"

namespace sar {

enum class EventType { move, cancel, rescue, idle, replan, cluster };

const char* to_string(EventType t);
EventType event_type_from_string(const std::string& s);

struct LogEvent {
  EventType type = EventType::move;
  int step = 0;
  int robot = -1;
  Cell cell;
  /// Extra fields (replan grade, cluster dump, ...); must be deterministic.
  nlohmann::json data = nlohmann::json::object();
};

/// Quantized map snapshot: brightness = round(255 * uncertainty).
struct MapSnapshot {
  int step = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> uncertainty;
};

/// Wall-clock statistics; never serialized into the log.
struct GradingTiming {
  std::size_t evaluations = 0;
  double seconds = 0.0;
  std::size_t plans = 0;

  double per_candidate() const { return evaluations ? seconds / static_cast<double>(evaluations) : 0.0; }
};

struct MissionSummary {
  int humans_total = 0;
  int rescued = 0;
  bool complete = false;
  int final_step = 0;
  double explored_fraction = 0.0;
  std::size_t degenerate_updates = 0;
};

/// Line-delimited record of one mission: a header line, one line per event,
/// snapshot lines and a closing summary line.
class MissionLog {
 public:
  nlohmann::json header = nlohmann::json::object();
  std::vector<LogEvent> events;
  std::vector<MapSnapshot> snapshots;
  MissionSummary summary;
  GradingTiming timing;

  void add(LogEvent e) { events.push_back(std::move(e)); }

  /// Ascending steps at which humans were rescued.
  std::vector<int> rescue_steps() const;
  /// Step at which `m` humans had been rescued, or -1.
  int milestone_step(int m) const;

  std::string controller() const;
  std::uint64_t seed() const;

  std::string to_jsonl() const;
  static MissionLog from_jsonl(const std::string& text);

  void write(const std::string& path) const;
  static MissionLog read(const std::string& path);
};

}  // namespace sar
