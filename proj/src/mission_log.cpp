#include "sar/mission_log.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sar {

namespace {

constexpr const char* kEventNames[] = {"move", "cancel", "rescue", "idle", "replan", "cluster"};

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

std::vector<std::uint8_t> from_hex(const std::string& s) {
  if (s.size() % 2) throw IoError("snapshot payload has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw IoError("snapshot payload is not hex");
  };
  std::vector<std::uint8_t> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  return out;
}

}  // namespace

const char* to_string(EventType t) { return kEventNames[static_cast<int>(t)]; }

EventType event_type_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kEventNames[i]) return static_cast<EventType>(i);
  throw IoError("unknown event type '" + s + "'");
}

std::vector<int> MissionLog::rescue_steps() const {
  std::vector<int> steps;
  for (const auto& e : events)
    if (e.type == EventType::rescue) steps.push_back(e.step);
  std::sort(steps.begin(), steps.end());
  return steps;
}

int MissionLog::milestone_step(int m) const {
  if (m <= 0) return 0;
  const auto steps = rescue_steps();
  return static_cast<int>(steps.size()) >= m ? steps[static_cast<std::size_t>(m - 1)] : -1;
}

std::string MissionLog::controller() const { return header.value("controller", std::string{}); }

std::uint64_t MissionLog::seed() const { return header.value("seed", std::uint64_t{0}); }

std::string MissionLog::to_jsonl() const {
  std::ostringstream out;
  nlohmann::json h = header;
  h["type"] = "header";
  out << h.dump() << '\n';
  for (const auto& e : events) {
    nlohmann::json j;
    j["type"] = to_string(e.type);
    j["step"] = e.step;
    j["robot"] = e.robot;
    j["cell"] = {e.cell.x, e.cell.y};
    if (!e.data.empty()) j["data"] = e.data;
    out << j.dump() << '\n';
  }
  for (const auto& s : snapshots) {
    nlohmann::json j;
    j["type"] = "snapshot";
    j["step"] = s.step;
    j["width"] = s.width;
    j["height"] = s.height;
    j["uncertainty_u8"] = to_hex(s.uncertainty);
    out << j.dump() << '\n';
  }
  nlohmann::json j;
  j["type"] = "summary";
  j["humans_total"] = summary.humans_total;
  j["rescued"] = summary.rescued;
  j["complete"] = summary.complete;
  j["final_step"] = summary.final_step;
  j["explored_fraction"] = summary.explored_fraction;
  j["degenerate_updates"] = summary.degenerate_updates;
  out << j.dump() << '\n';
  return out.str();
}

MissionLog MissionLog::from_jsonl(const std::string& text) {
  MissionLog log;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        j.erase("type");
        log.header = std::move(j);
      } else if (type == "snapshot") {
        log.snapshots.push_back({j.at("step").get<int>(), j.at("width").get<int>(), j.at("height").get<int>(),
                                 from_hex(j.at("uncertainty_u8").get<std::string>())});
      } else if (type == "summary") {
        log.summary.humans_total = j.at("humans_total").get<int>();
        log.summary.rescued = j.at("rescued").get<int>();
        log.summary.complete = j.at("complete").get<bool>();
        log.summary.final_step = j.at("final_step").get<int>();
        log.summary.explored_fraction = j.at("explored_fraction").get<double>();
        log.summary.degenerate_updates = j.at("degenerate_updates").get<std::size_t>();
      } else {
        LogEvent e;
        e.type = event_type_from_string(type);
        e.step = j.at("step").get<int>();
        e.robot = j.at("robot").get<int>();
        e.cell = {j.at("cell").at(0).get<int>(), j.at("cell").at(1).get<int>()};
        if (j.contains("data")) e.data = j.at("data");
        log.events.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw IoError("mission log line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return log;
}

void MissionLog::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_jsonl();
}

MissionLog MissionLog::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

}  // namespace sar
