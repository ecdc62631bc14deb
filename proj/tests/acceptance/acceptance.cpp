// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line,
// preceded by indented detail lines; the exit code is non-zero on any FAIL.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "golden.hpp"
#include "oracles.hpp"
#include "sar/baseline_smpc.hpp"
#include "sar/flmpc.hpp"
#include "sar/fuzzy_agg.hpp"
#include "sar/harness.hpp"
#include "sar/parent.hpp"
#include "short_maps.hpp"

using namespace sar;
namespace fs = std::filesystem;

namespace {

std::string g_data_dir = SAR_TEST_DATA;
std::string g_out_dir = "acceptance_out";
int g_threads = 0;

int threads() { return g_threads > 0 ? g_threads : std::max(1u, std::thread::hardware_concurrency()); }

void detail(const std::string& s) { std::printf("  %s\n", s.c_str()); }

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool verdict(int n, bool pass, const std::string& summary) {
  std::printf("criterion %d: %s (%s)\n", n, pass ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
  return pass;
}

bool close(double got, double want, double tol) { return std::abs(got - want) <= tol * std::max(1.0, std::abs(want)); }

// ---------------------------------------------------------------- 1

bool criterion_golden() {
  using fuzzy::AggregationParams;
  auto agg = [](double w_goal, double w_con, double w_agg) {
    AggregationParams p;
    p.w_goal = w_goal;
    p.w_con = w_con;
    p.w_agg = w_agg;
    return p;
  };
  sim::SensorModel sensor;
  const double d36 = sim::detectability(3, 6);

  belief::ProbabilityMap bayes(3, 3, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  const sim::Observation hit{{1, 1}, sim::kHuman, 1.0};
  belief::bayes_update(bayes, std::span<const sim::Observation>(&hit, 1), sensor);

  belief::CertaintyMap cert(2, 1);
  cert.at({1, 0}) = 0.5;
  const sim::Observation other{{0, 0}, sim::kEmpty, 1.0};
  belief::update_certainty_map(cert, std::span<const sim::Observation>(&other, 1), 0.99);

  parent::ParentParams pp;
  pp.sigma = 60.0;
  pp.eta = 170.0;
  parent::FuzzyCluster cluster;
  cluster.members = {{{50, 50}, 1.0}};
  cluster.center_x = cluster.center_y = 50.0;
  cluster.state = parent::ClusterState::to_be_explored;

  const std::vector<fuzzy::DegreeTuple> yager{{1.0, 0.9}}, mean{{0.5}, {1.0}};
  const std::vector<fuzzy::WeightedGoal> weighted{{{0.8}, 0.5}};

  struct Item {
    const char* name;
    double got;
    double want;
  };
  const std::vector<Item> items{
      {"Yager constraint (1, 0.9; w=5)", fuzzy::aggregate_constraints(yager, agg(1, 5, 1)), golden::kYager_1_09_w5},
      {"generalized mean (0.5, 1; w=2)", fuzzy::aggregate_goals(mean, agg(2, 5, 1)), golden::kGeneralizedMean_05_1_w2},
      {"weighted goal (0.8, w=0.5, 20)", fuzzy::aggregate_goals_weighted(weighted, 1.0, agg(20, 5, 1)),
       golden::kWeightedGoal_08_w05_g20},
      {"tuning weight (d=2, k=3)", flmpc::tuning_weight(flmpc::alpha(2, 5) * flmpc::beta(3, 0.965), 0.0),
       golden::kTuningWeight_d2_k3},
      {"parent weight (10 steps)", parent::parent_weight(10.0, 0.98), golden::kParentWeight_10},
      {"fringe depth 1", parent::fringe_membership(1), golden::kFringe1},
      {"fringe depth 2", parent::fringe_membership(2), golden::kFringe2},
      {"fringe depth 3", parent::fringe_membership(3), golden::kFringe3},
      {"high-level weight at D = sigma", parent::child_weight_transform({80, 50}, cluster, {110, 50}, pp),
       golden::kGaussianAtSigma},
      {"penalized likelihood, correct", sensor.likelihood(sim::kHuman, sim::kHuman, d36), golden::kPenalizedCorrect},
      {"penalized likelihood, incorrect", sensor.likelihood(sim::kObstacle, sim::kHuman, d36),
       golden::kPenalizedIncorrect},
      {"detectability (3 of 6)", d36, golden::kDetectability_3_6},
      {"Bayes human posterior", bayes.prob({1, 1}, sim::kHuman), golden::kBayesHumanPosterior},
      {"certainty decay", cert.at({1, 0}), golden::kCertaintyDecayed},
      {"cooperative weight 0.8 vs 0.5", flmpc::cooperative_weight(0.8, 0.5), golden::kCooperative_08_05},
      {"cooperative weight 0.4 vs 0.7", flmpc::cooperative_weight(0.4, 0.7), golden::kCooperative_04_07},
      {"overall aggregation (0.8, 0.5)", fuzzy::aggregate_overall(0.8, 0.5, agg(1, 5, 1)), golden::kOverall_08_05},
  };
  int ok = 0;
  for (const auto& it : items) {
    const bool good = close(it.got, it.want, golden::kTol);
    ok += good;
    if (!good) detail(fmt("MISMATCH %s: got %.17g want %.17g", it.name, it.got, it.want));
  }
  return verdict(1, ok == static_cast<int>(items.size()),
                 fmt("%d/%zu reference values within 1e-9", ok, items.size()));
}

// ---------------------------------------------------------------- 2

struct Checker {
  long checks = 0;
  long failures = 0;
  std::map<std::string, long> failed_by;
  void operator()(bool ok, const char* what) {
    ++checks;
    if (!ok) {
      ++failures;
      ++failed_by[what];
    }
  }
};

bool criterion_properties() {
  Checker check;
  Rng rng(stream_seed({2024, 2}));
  const sim::SensorModel sensor;
  flmpc::ControllerParams cp;

  for (int trial = 0; trial < 1000; ++trial) {
    // aggregation ranges, bounds, monotonicity
    fuzzy::AggregationParams p;
    p.w_goal = rng.uniform(0.5, 25.0);
    p.w_con = rng.uniform(1.0, 8.0);
    p.w_agg = rng.uniform(0.2, 3.0);
    std::vector<fuzzy::DegreeTuple> tuples(1 + rng.below(6));
    double lo = 1.0, hi = 0.0, all_min = 1.0;
    for (auto& t : tuples) {
      t.resize(1 + rng.below(3));
      for (auto& v : t) {
        v = rng.uniform();
        all_min = std::min(all_min, v);
      }
      const double s = fuzzy::s_norm(t, p.s_norm);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double g = fuzzy::aggregate_goals(tuples, p);
    const double c = fuzzy::aggregate_constraints(tuples, p);
    const double o = fuzzy::aggregate_overall(g, c, p);
    check(g >= 0 && g <= 1 && c >= 0 && c <= 1 && o >= 0 && o <= 1, "aggregation range");
    check(g >= lo - 1e-12 && g <= hi + 1e-12, "goal between extremes");
    check(c <= all_min + 1e-12, "t-norm dominance");
    auto raised = tuples;
    auto& slot = raised[rng.below(raised.size())];
    auto& v = slot[rng.below(slot.size())];
    v = std::min(1.0, v + rng.uniform(0.0, 0.5));
    check(fuzzy::aggregate_goals(raised, p) >= g - 1e-12, "goal monotone");
    check(fuzzy::aggregate_constraints(raised, p) >= c - 1e-12, "constraint monotone");
    auto rev = tuples;
    std::reverse(rev.begin(), rev.end());
    check(close(fuzzy::aggregate_goals(rev, p), g, 1e-12), "goal commutative");

    // Bayes posterior is a distribution and matches the explicit form
    std::vector<double> prior{rng.uniform(), rng.uniform(), rng.uniform()};
    const double sum = prior[0] + prior[1] + prior[2];
    for (auto& x : prior) x /= sum;
    const int observed = static_cast<int>(rng.below(3));
    const double dist = rng.uniform(0.0, 7.0);
    const double d = sim::detectability(dist, sensor.delta_max);
    check(d >= 0 && d <= 1, "detectability range");
    check(sim::detectability(dist + 0.5, sensor.delta_max) <= d, "detectability decreasing");
    belief::ProbabilityMap pm(1, 1, prior);
    const sim::Observation ob{{0, 0}, static_cast<StateIndex>(observed), d};
    belief::bayes_update(pm, std::span<const sim::Observation>(&ob, 1), sensor);
    const auto post = pm.at({0, 0});
    check(close(post[0] + post[1] + post[2], 1.0, 1e-12), "posterior sums to one");
    check(post[static_cast<std::size_t>(observed)] >= prior[static_cast<std::size_t>(observed)] - 1e-12,
          "observed state gains mass");

    // certainty stays in [0,1] and never drops on observation
    belief::CertaintyMap cm(1, 1);
    const double z0 = rng.uniform();
    cm.at({0, 0}) = z0;
    belief::update_certainty_map(cm, std::span<const sim::Observation>(&ob, 1), 0.99);
    check(cm.at({0, 0}) >= z0 - 1e-15 && cm.at({0, 0}) <= 1.0, "certainty gain");

    // cooperative weights
    const double own = rng.uniform(), others = rng.uniform();
    const double coop = flmpc::cooperative_weight(own, others);
    check(coop >= 0.0 && coop <= own, "cooperative bounds");

    // decoded plans are legal 8-neighbor chains inside the grid
    std::vector<double> dec;
    for (int i = 0; i < cp.n_p; ++i) {
      dec.push_back(rng.uniform(0.0, cp.n_travel));
      dec.push_back(rng.uniform(0.0, 2 * std::numbers::pi));
    }
    const Cell start{static_cast<int>(rng.below(30)), static_cast<int>(rng.below(30))};
    const auto plan = flmpc::decode_motion_plan(dec, start, 30, 30, cp);
    bool legal = plan.cells.size() <= static_cast<std::size_t>(cp.n_path);
    Cell prev = start;
    for (Cell cell : plan.cells) {
      legal = legal && cell.x >= 0 && cell.y >= 0 && cell.x < 30 && cell.y < 30 && std::abs(cell.x - prev.x) <= 1 &&
              std::abs(cell.y - prev.y) <= 1 && !(cell == prev);
      prev = cell;
    }
    check(legal, "decoded plan legal");
    const auto weights = flmpc::tuning_weights(flmpc::observed_set(plan, start, 30, 30, cp));
    bool in_range = !weights.empty();
    for (const auto& e : weights.entries()) in_range = in_range && e.weight >= 0.0 && e.weight <= 1.0;
    check(in_range, "tuning weights in range");

    // parent weights
    const double dd = rng.uniform(0.0, 300.0);
    const double pw = parent::parent_weight(dd, 0.98);
    check(pw > 0.0 && pw <= 1.0, "parent weight range");
    check(parent::parent_weight(dd + 1.0, 0.98) <= pw, "parent weight decreasing");
  }

  // split/merge keeps every passable support cell exactly once
  parent::ParentParams pp;
  pp.cluster_side = 6;
  for (int trial = 0; trial < 200; ++trial) {
    auto clusters = parent::init_clusters(18, 18, pp);
    Grid<double> pass(18, 18, 1.0);
    const double wall = rng.uniform(0.1, 0.5);
    for (auto& x : pass.values()) x = rng.bernoulli(wall) ? 0.0 : 1.0;
    const std::vector<Cell> robots{{static_cast<int>(rng.below(18)), static_cast<int>(rng.below(18))}};
    const auto before = clusters[4];
    const auto rep = parent::split_merge_clusters(clusters, 4, pass, robots, pp);
    std::multiset<Cell, RowMajorLess> got(rep.kept.begin(), rep.kept.end());
    for (const auto* group : {&rep.merged, &rep.deleted, &rep.retained})
      for (const auto& g : *group) got.insert(g.begin(), g.end());
    std::multiset<Cell, RowMajorLess> want;
    for (const auto& m : before.members)
      if (pass[m.cell] >= pp.wall_threshold) want.insert(m.cell);
    check(got == want, "split support preserved");
    for (const auto& comp : rep.merged) {
      bool moved = true;
      for (Cell c : comp) moved = moved && clusters[4].mu(c) == 0.0;
      check(moved, "merged cells leave the source");
    }
  }

  for (const auto& [what, n] : check.failed_by) detail(fmt("%ld failures: %s", n, what.c_str()));
  return verdict(2, check.failures == 0 && check.checks >= 10000,
                 fmt("%ld property checks, %ld failures", check.checks, check.failures));
}

// ---------------------------------------------------------------- 3

bool criterion_oracles() {
  const sim::SensorModel sensor;
  Rng rng(stream_seed({2024, 3}));

  // Bayes against the explicit numerator/denominator
  int bayes_ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> prior{rng.uniform(), rng.uniform(), rng.uniform()};
    const double sum = prior[0] + prior[1] + prior[2];
    for (auto& x : prior) x /= sum;
    const int observed = static_cast<int>(rng.below(3));
    const double d = rng.uniform();
    belief::ProbabilityMap pm(1, 1, prior);
    const sim::Observation ob{{0, 0}, static_cast<StateIndex>(observed), d};
    belief::bayes_update(pm, std::span<const sim::Observation>(&ob, 1), sensor);
    const auto want = oracle::bayes(prior, observed, d, sensor);
    double err = 0.0;
    for (std::size_t s = 0; s < 3; ++s) err = std::max(err, std::abs(pm.at({0, 0})[s] - want[s]));
    worst = std::max(worst, err);
    bayes_ok += err <= 1e-12;
  }
  detail(fmt("Bayes update: %d/1000 within 1e-12 (worst %.3g)", bayes_ok, worst));

  // passable components against a set-based flood fill
  parent::ParentParams pp;
  pp.cluster_side = 12;
  int fill_ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto clusters = parent::init_clusters(36, 36, pp);
    Grid<double> pass(36, 36, 1.0);
    const double wall = rng.uniform(0.15, 0.55);
    for (auto& x : pass.values()) x = rng.bernoulli(wall) ? 0.0 : 1.0;
    const auto& c = clusters[4];
    const auto comps = parent::passable_components(c.members, pass, pp.wall_threshold);
    oracle::CellSet set;
    for (const auto& m : c.members)
      if (pass[m.cell] >= pp.wall_threshold) set.insert(m.cell);
    const auto ref = oracle::flood_fill(set);
    bool same = comps.size() == ref.size();
    for (std::size_t k = 0; same && k < comps.size(); ++k)
      same = comps[k] == std::vector<Cell>(ref[k].begin(), ref[k].end());
    fill_ok += same;
  }
  detail(fmt("split components: %d/100 masks identical to flood fill", fill_ok));

  // short-horizon plans against exhaustive enumeration
  flmpc::ControllerParams cp;
  cp.n_p = 3;
  cp.n_travel = 1;
  cp.n_path = 3;
  optim::PsoOptions pso;
  pso.seed = 1;
  int plan_ok = 0;
  const auto& maps = short_maps::all();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto fm = oracle::picture_maps(maps[i]);
    const Cell start{4, 4};
    const auto r = flmpc::plan(start, fm, {}, cp, pso);
    double best = 0.0;
    for (const auto& cells : oracle::short_plans(start, 9, 9, 3))
      best = std::max(best, flmpc::grade_trajectory({cells, {}}, start, fm, {}, flmpc::max_observable_count(cp), cp));
    const bool ok = close(r.grade, best, 1e-9);
    plan_ok += ok;
    if (!ok) detail(fmt("map %zu: planner %.12f, exhaustive %.12f", i, r.grade, best));
  }
  detail(fmt("short-horizon argmax: %d/%zu maps within 1e-9", plan_ok, maps.size()));

  return verdict(3, bayes_ok == 1000 && fill_ok == 100 && plan_ok == static_cast<int>(maps.size()) && maps.size() == 20,
                 fmt("Bayes %d/1000, flood fill %d/100, argmax %d/%zu", bayes_ok, fill_ok, plan_ok, maps.size()));
}

// ---------------------------------------------------------------- 4, 5

std::string histogram_line(const std::vector<int>& h) {
  static const char* bins[] = {"[0,10)", "[10,20)", "[20,30)", "[30,40)", "[40,50)", "[50,inf)", "inf"};
  std::string s;
  for (std::size_t i = 0; i < h.size() && i < 7; ++i) s += fmt("%s%s:%d", i ? " " : "", bins[i], h[i]);
  return s;
}

std::vector<MissionLog> run_and_export(harness::Scenario& s, int seeds_override, const std::string& tag) {
  if (seeds_override > 0 && static_cast<std::size_t>(seeds_override) < s.seeds.size())
    s.seeds.resize(static_cast<std::size_t>(seeds_override));
  s.finalize();
  auto logs = harness::run_batch(s, threads());
  const auto dir = fs::path(g_out_dir) / tag;
  harness::export_results(logs, s.effective_milestones(), dir.string());
  harness::export_timing(logs, (dir / "timing.csv").string());
  detail(fmt("%zu missions, artifacts in %s", logs.size(), dir.string().c_str()));
  return logs;
}

double per_candidate(const std::vector<MissionLog>& logs) {
  double sec = 0.0;
  std::size_t evals = 0;
  for (const auto& l : logs) {
    sec += l.timing.seconds;
    evals += l.timing.evaluations;
  }
  return evals ? sec / static_cast<double>(evals) : 0.0;
}

bool criterion_cs1(int seeds) {
  auto s = harness::load_scenario(g_data_dir + "/cs1.json");
  const auto logs = run_and_export(s, seeds, "cs1");
  const auto fl = harness::select(logs, "flmpc");
  const auto sm = harness::select(logs, "smpc");
  const double t_fl = per_candidate(fl), t_sm = per_candidate(sm);
  const double ratio = t_fl > 0 ? t_sm / t_fl : 0.0;
  detail(fmt("per-candidate grading: flmpc %.2f us, smpc %.2f us, ratio %.1f", t_fl * 1e6, t_sm * 1e6, ratio));

  const std::vector<int> all{s.environment.n_humans};
  const auto rep = harness::compare_controllers(fl, sm, all);
  for (const auto& o : rep.outcomes)
    detail(fmt("seed %llu: flmpc %d, smpc %d -> %s", static_cast<unsigned long long>(o.seed), o.step_a, o.step_b,
               o.winner.c_str()));
  const auto& sum = rep.summaries.front();
  const int decided = sum.wins_a + sum.wins_b + sum.ties;
  detail(fmt("all-humans milestone: flmpc %d, smpc %d, ties %d, undecided %d", sum.wins_a, sum.wins_b, sum.ties,
             sum.undecided));
  detail("flmpc advantage histogram: " + histogram_line(sum.histogram_a));
  detail("smpc advantage histogram:  " + histogram_line(sum.histogram_b));
  const bool a = ratio >= 10.0;
  const bool b = decided > 0 && 2 * sum.wins_a >= decided;
  return verdict(4, a && b,
                 fmt("(a) time ratio %.1f %s 10, (b) flmpc wins %d of %d decided", ratio, a ? ">=" : "<", sum.wins_a,
                     decided));
}

bool criterion_cs2(int seeds) {
  auto s = harness::load_scenario(g_data_dir + "/cs2.json");
  const auto logs = run_and_export(s, seeds, "cs2");
  const auto bi = harness::select(logs, "bilevel");
  const auto fl = harness::select(logs, "flmpc");

  int complete = 0, explored_ge = 0;
  std::map<std::uint64_t, const MissionLog*> single;
  for (const auto& l : fl) single[l.seed()] = &l;
  for (const auto& l : bi) {
    complete += l.summary.complete;
    const auto* f = single.at(l.seed());
    explored_ge += l.summary.explored_fraction >= f->summary.explored_fraction;
    detail(fmt("seed %llu: bilevel %d/%d at %d explored %.3f | flmpc %d/%d at %d explored %.3f",
               static_cast<unsigned long long>(l.seed()), l.summary.rescued, l.summary.humans_total,
               l.summary.final_step, l.summary.explored_fraction, f->summary.rescued, f->summary.humans_total,
               f->summary.final_step, f->summary.explored_fraction));
  }
  const std::vector<int> last{s.environment.n_humans};
  const auto rep = harness::compare_controllers(bi, fl, last);
  const auto& sum = rep.summaries.front();
  detail(fmt("last-victim milestone: bilevel %d, flmpc %d, ties %d, undecided %d", sum.wins_a, sum.wins_b, sum.ties,
             sum.undecided));
  const int n = static_cast<int>(bi.size());
  const bool a = complete == n;
  const bool b = 10 * explored_ge >= 6 * n;
  const bool c = 10 * sum.wins_a >= 4 * n;
  return verdict(5, n > 0 && a && b && c,
                 fmt("(a) complete %d/%d, (b) explored >= single-level %d/%d, (c) last-victim wins %d/%d", complete, n,
                     explored_ge, n, sum.wins_a, n));
}

// ---------------------------------------------------------------- 6

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = s.str();
  }
  return out;
}

bool criterion_reproducible() {
  auto s = harness::load_scenario(g_data_dir + "/repro.json");
  const auto first_dir = fs::path(g_out_dir) / "repro_a";
  const auto second_dir = fs::path(g_out_dir) / "repro_b";
  fs::remove_all(first_dir);
  fs::remove_all(second_dir);
  const auto first = harness::run_batch(s, 1);
  const auto second = harness::run_batch(s, std::max(2, threads()));
  harness::export_results(first, s.effective_milestones(), first_dir.string());
  // a reordered input must not change the artifacts either
  std::vector<MissionLog> shuffled(second.rbegin(), second.rend());
  harness::export_results(shuffled, s.effective_milestones(), second_dir.string());

  const auto a = read_tree(first_dir), b = read_tree(second_dir);
  int differ = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      ++differ;
      detail("differs: " + name);
    }
  }
  for (const auto& [name, bytes] : b)
    if (!a.count(name)) {
      ++differ;
      detail("missing in first run: " + name);
    }
  return verdict(6, differ == 0 && !a.empty(),
                 fmt("%zu artifacts compared over %zu missions, %d differ", a.size(), first.size(), differ));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> criteria;
  int seeds = 0;
  app.add_option("--criterion", criteria, "Criteria to run (default: all)")->check(CLI::Range(1, 6));
  app.add_option("--seeds", seeds, "Use only the first N seeds of the case studies");
  app.add_option("--threads", g_threads, "Worker threads (default: hardware)");
  app.add_option("--data", g_data_dir, "Directory with the scenario files");
  app.add_option("--out", g_out_dir, "Directory for case-study artifacts");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6};

  const std::map<int, std::function<bool()>> run{
      {1, criterion_golden},
      {2, criterion_properties},
      {3, criterion_oracles},
      {4, [&] { return criterion_cs1(seeds); }},
      {5, [&] { return criterion_cs2(seeds); }},
      {6, criterion_reproducible},
  };
  bool all = true;
  for (int c : criteria) {
    try {
      all = run.at(c)() && all;
    } catch (const std::exception& e) {
      verdict(c, false, std::string("error: ") + e.what());
      all = false;
    }
  }
  return all ? 0 : 1;
}
