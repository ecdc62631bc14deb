// sarsim: batch runner for the search-and-rescue controllers.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sar/belief.hpp"
#include "sar/harness.hpp"

namespace fs = std::filesystem;
using namespace sar;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> milestones_from(const std::string& list, std::span<const MissionLog> logs) {
  std::vector<int> ms;
  for (const auto& s : split_list(list)) ms.push_back(std::stoi(s));
  if (ms.empty()) {
    int humans = 0;
    for (const auto& l : logs) humans = std::max(humans, l.summary.humans_total);
    for (int m = 1; m <= humans; ++m) ms.push_back(m);
  }
  return ms;
}

void print_summary(std::span<const MissionLog> logs) {
  for (const auto& l : logs) {
    const auto& s = l.summary;
    std::printf("%-8s seed %-4llu rescued %d/%d %s step %d explored %.3f\n", l.controller().c_str(),
                static_cast<unsigned long long>(l.seed()), s.rescued, s.humans_total,
                s.complete ? "complete" : "budget", s.final_step, s.explored_fraction);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy-logic MPC search-and-rescue simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, seeds, controller, logs_dir, milestones, a_name, b_name, log_path;
  int threads = 1;

  auto* run = app.add_subcommand("run", "Run every (controller, seed) mission of a scenario");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seeds", seeds, "Seed override: a..b or a comma list");
  run->add_option("--controller", controller, "Controller override: flmpc, smpc, bilevel (comma list)");
  run->add_option("--threads", threads, "Concurrent missions")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Win/advantage report for two controllers");
  compare->add_option("--logs", logs_dir, "Directory of mission logs")->required();
  compare->add_option("--a", a_name, "First controller")->required();
  compare->add_option("--b", b_name, "Second controller")->required();
  compare->add_option("--milestones", milestones, "Comma list (default 1..humans)");
  compare->add_option("--out", out_dir, "Report file (default: stdout)");

  auto* exp = app.add_subcommand("export", "Regenerate CSV, report and maps from logs");
  exp->add_option("--logs", logs_dir, "Directory of mission logs")->required();
  exp->add_option("--out", out_dir, "Output directory")->required();
  exp->add_option("--milestones", milestones, "Comma list (default 1..humans)");

  auto* replay = app.add_subcommand("replay", "Print the timeline of one mission log");
  replay->add_option("--log", log_path, "Mission log (.jsonl)")->required();
  replay->add_option("--out", out_dir, "Write every uncertainty snapshot as PGM here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto scenario = harness::load_scenario(scenario_path);
      if (!seeds.empty()) scenario.seeds = harness::parse_seed_range(seeds);
      if (!controller.empty()) scenario.controllers = split_list(controller);
      scenario.finalize();
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "effective_scenario.json", std::ios::binary)
          << scenario.to_json().dump(2) << '\n';
      const auto logs = harness::run_batch(scenario, threads);
      const auto ms = scenario.effective_milestones();
      harness::export_results(logs, ms, out_dir);
      harness::export_timing(logs, (fs::path(out_dir) / "timing.csv").string());
      print_summary(logs);
    } else if (*compare) {
      const auto logs = harness::load_logs(logs_dir);
      const auto la = harness::select(logs, a_name);
      const auto lb = harness::select(logs, b_name);
      const auto ms = milestones_from(milestones, logs);
      const auto text = harness::compare_controllers(la, lb, ms).to_json().dump(2);
      if (out_dir.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream out(out_dir, std::ios::binary);
        if (!out) throw IoError("cannot write " + out_dir);
        out << text << '\n';
      }
    } else if (*exp) {
      const auto logs = harness::load_logs(logs_dir);
      harness::export_results(logs, milestones_from(milestones, logs), out_dir);
      print_summary(logs);
    } else if (*replay) {
      const auto log = MissionLog::read(log_path);
      std::printf("controller %s seed %llu grid %dx%d\n", log.controller().c_str(),
                  static_cast<unsigned long long>(log.seed()), log.header.value("width", 0),
                  log.header.value("height", 0));
      for (const auto& e : log.events) {
        if (e.type == EventType::rescue)
          std::printf("step %4d robot %d rescued human at (%d,%d)\n", e.step, e.robot, e.cell.x, e.cell.y);
        else if (e.type == EventType::cluster && e.robot >= 0)
          std::printf("step %4d robot %d route %s\n", e.step, e.robot, e.data.value("route", nlohmann::json()).dump().c_str());
      }
      const MissionLog copy[] = {log};
      print_summary(copy);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (const auto& s : log.snapshots)
          belief::write_pgm_bytes(s.width, s.height, s.uncertainty,
                                  (fs::path(out_dir) / ("uncertainty_step" + std::to_string(s.step) + ".pgm")).string());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sarsim: %s\n", e.what());
    return 1;
  }
  return 0;
}
