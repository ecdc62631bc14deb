#include "sar/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sar/common.hpp"
#include "sar/rng.hpp"

namespace sar::optim {

void PsoOptions::validate() const {
  if (swarm_size < 2) throw ConfigError("pso swarm size must be >= 2");
  if (iterations < 0) throw ConfigError("pso iterations must be >= 0");
  if (!(inertia >= 0.0 && cognitive >= 0.0 && social >= 0.0)) throw ConfigError("pso coefficients must be >= 0");
}

PsoResult particle_swarm_maximize(const Objective& objective, std::span<const Bounds> bounds,
                                  const PsoOptions& options, std::span<const std::vector<double>> seeds,
                                  const PsoMonitor& monitor) {
  options.validate();
  const std::size_t dim = bounds.size();
  for (const auto& b : bounds)
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.hi < b.lo) throw ConfigError("pso bounds must be finite");

  Rng rng(stream_seed({options.seed, 0x70736f}));
  const std::size_t n = static_cast<std::size_t>(options.swarm_size);
  std::vector<std::vector<double>> x(n, std::vector<double>(dim)), v(n, std::vector<double>(dim));
  std::vector<std::vector<double>> pbest(n);
  std::vector<double> pbest_value(n);
  PsoResult result;

  auto clamp_to_box = [&](std::vector<double>& p) {
    for (std::size_t d = 0; d < dim; ++d) p[d] = std::clamp(p[d], bounds[d].lo, bounds[d].hi);
  };
  auto evaluate = [&](const std::vector<double>& p) {
    ++result.evaluations;
    return objective(p);
  };

  std::size_t g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double width = bounds[d].hi - bounds[d].lo;
      x[i][d] = rng.uniform(bounds[d].lo, bounds[d].hi);
      v[i][d] = rng.uniform(-width, width) * 0.5;
    }
    if (i < seeds.size()) {
      if (seeds[i].size() != dim) throw ContractViolation("pso seed particle has wrong dimension");
      x[i] = seeds[i];
      clamp_to_box(x[i]);
    }
    pbest[i] = x[i];
    pbest_value[i] = evaluate(x[i]);
    if (pbest_value[i] > pbest_value[g]) g = i;
  }
  if (monitor) monitor(0, pbest_value[g]);

  for (int it = 1; it <= options.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double width = bounds[d].hi - bounds[d].lo;
        const double r1 = rng.uniform(), r2 = rng.uniform();
        double vel = options.inertia * v[i][d] + options.cognitive * r1 * (pbest[i][d] - x[i][d]) +
                     options.social * r2 * (pbest[g][d] - x[i][d]);
        v[i][d] = std::clamp(vel, -width, width);
        x[i][d] += v[i][d];
      }
      clamp_to_box(x[i]);
    }
    // Synchronous update: the global best moves only after the whole swarm is evaluated.
    std::size_t next_g = g;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = evaluate(x[i]);
      if (f > pbest_value[i]) {
        pbest_value[i] = f;
        pbest[i] = x[i];
      }
      if (pbest_value[i] > pbest_value[next_g]) next_g = i;
    }
    g = next_g;
    if (monitor) monitor(it, pbest_value[g]);
  }
  result.best = pbest[g];
  result.value = pbest_value[g];
  return result;
}

void GaOptions::validate() const {
  if (population < 2) throw ConfigError("ga population must be >= 2");
  if (generations < 0) throw ConfigError("ga generations must be >= 0");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("ga mutation rate must lie in [0, 1]");
}

bool is_exact_partition(const Routes& routes, int n_clusters, int n_robots) {
  if (static_cast<int>(routes.size()) != n_robots) return false;
  std::vector<int> seen(static_cast<std::size_t>(n_clusters), 0);
  for (const auto& r : routes) {
    if (r.empty()) return false;
    for (int c : r) {
      if (c < 0 || c >= n_clusters || seen[static_cast<std::size_t>(c)]++) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

namespace {

// Giant-tour chromosome: a permutation cut into consecutive routes of the given lengths.
struct Chromosome {
  std::vector<int> order;
  std::vector<int> lengths;
};

Routes to_routes(const Chromosome& c) {
  Routes routes;
  std::size_t pos = 0;
  for (int len : c.lengths) {
    routes.emplace_back(c.order.begin() + static_cast<long>(pos), c.order.begin() + static_cast<long>(pos + len));
    pos += static_cast<std::size_t>(len);
  }
  return routes;
}

Chromosome from_routes(const Routes& routes) {
  Chromosome c;
  for (const auto& r : routes) {
    c.order.insert(c.order.end(), r.begin(), r.end());
    c.lengths.push_back(static_cast<int>(r.size()));
  }
  return c;
}

std::vector<int> random_lengths(int n_clusters, int n_robots, Rng& rng) {
  // Uniform composition of n_clusters into n_robots positive parts.
  std::vector<int> cuts(static_cast<std::size_t>(n_clusters - 1));
  std::iota(cuts.begin(), cuts.end(), 1);
  for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(n_robots) && i < cuts.size(); ++i)
    std::swap(cuts[i], cuts[i + rng.below(cuts.size() - i)]);
  std::vector<int> chosen(cuts.begin(), cuts.begin() + (n_robots - 1));
  std::sort(chosen.begin(), chosen.end());
  std::vector<int> lengths;
  int prev = 0;
  for (int c : chosen) {
    lengths.push_back(c - prev);
    prev = c;
  }
  lengths.push_back(n_clusters - prev);
  return lengths;
}

Chromosome random_chromosome(int n_clusters, int n_robots, Rng& rng) {
  Chromosome c;
  c.order.resize(static_cast<std::size_t>(n_clusters));
  std::iota(c.order.begin(), c.order.end(), 0);
  for (std::size_t i = c.order.size(); i > 1; --i) std::swap(c.order[i - 1], c.order[rng.below(i)]);
  c.lengths = random_lengths(n_clusters, n_robots, rng);
  return c;
}

// Order crossover on the giant tour; route lengths come from the first parent.
Chromosome order_crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
  const std::size_t n = a.order.size();
  Chromosome child;
  child.lengths = a.lengths;
  if (n < 2) {
    child.order = a.order;
    return child;
  }
  std::size_t i = rng.below(n), j = rng.below(n);
  if (i > j) std::swap(i, j);
  child.order.assign(n, -1);
  std::vector<char> used(n, 0);
  for (std::size_t k = i; k <= j; ++k) {
    child.order[k] = a.order[k];
    used[static_cast<std::size_t>(a.order[k])] = 1;
  }
  std::size_t write = (j + 1) % n;
  for (std::size_t step = 0; step < n; ++step) {
    const int gene = b.order[(j + 1 + step) % n];
    if (used[static_cast<std::size_t>(gene)]) continue;
    child.order[write] = gene;
    write = (write + 1) % n;
  }
  return child;
}

// Swaps a segment of one route with a segment of another; segment lengths may
// differ, which moves clusters between routes.
void swap_between_routes(Chromosome& c, Rng& rng) {
  Routes routes = to_routes(c);
  if (routes.size() < 2) return;
  const std::size_t r1 = rng.below(routes.size());
  std::size_t r2 = rng.below(routes.size() - 1);
  if (r2 >= r1) ++r2;
  auto pick = [&](const std::vector<int>& r, bool allow_empty) {
    const std::size_t start = rng.below(r.size() + (allow_empty ? 1 : 0));
    const std::size_t max_len = r.size() - std::min(start, r.size());
    const std::size_t len = max_len == 0 ? 0 : rng.below(max_len + 1);
    return std::pair{start, len};
  };
  auto [s1, l1] = pick(routes[r1], false);
  auto [s2, l2] = pick(routes[r2], true);
  if (routes[r1].size() - l1 + l2 == 0 || routes[r2].size() - l2 + l1 == 0) return;
  std::vector<int> seg1(routes[r1].begin() + static_cast<long>(s1), routes[r1].begin() + static_cast<long>(s1 + l1));
  std::vector<int> seg2(routes[r2].begin() + static_cast<long>(s2), routes[r2].begin() + static_cast<long>(s2 + l2));
  routes[r1].erase(routes[r1].begin() + static_cast<long>(s1), routes[r1].begin() + static_cast<long>(s1 + l1));
  routes[r1].insert(routes[r1].begin() + static_cast<long>(s1), seg2.begin(), seg2.end());
  routes[r2].erase(routes[r2].begin() + static_cast<long>(s2), routes[r2].begin() + static_cast<long>(s2 + l2));
  routes[r2].insert(routes[r2].begin() + static_cast<long>(s2), seg1.begin(), seg1.end());
  c = from_routes(routes);
}

void reverse_within_route(Chromosome& c, Rng& rng) {
  const std::size_t r = rng.below(c.lengths.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < r; ++k) offset += static_cast<std::size_t>(c.lengths[k]);
  const std::size_t len = static_cast<std::size_t>(c.lengths[r]);
  if (len < 2) return;
  std::size_t i = rng.below(len), j = rng.below(len);
  if (i > j) std::swap(i, j);
  std::reverse(c.order.begin() + static_cast<long>(offset + i), c.order.begin() + static_cast<long>(offset + j + 1));
}

}  // namespace

GaResult ga_route_assign(int n_clusters, int n_robots, const RouteScore& score, const GaOptions& options,
                         const GaMonitor& monitor) {
  options.validate();
  if (n_robots < 1) throw ConfigError("ga needs at least one robot");
  if (n_robots > n_clusters) throw ConfigError("more robots than clusters");

  Rng rng(stream_seed({options.seed, 0x6761}));
  const std::size_t pop_size = static_cast<std::size_t>(options.population);
  std::vector<Chromosome> pop;
  std::vector<double> fitness;
  pop.reserve(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) pop.push_back(random_chromosome(n_clusters, n_robots, rng));
  for (const auto& c : pop) fitness.push_back(score(to_routes(c)));

  GaResult best;
  auto track = [&] {
    for (std::size_t i = 0; i < pop.size(); ++i)
      if (best.routes.empty() || fitness[i] > best.score) {
        best.score = fitness[i];
        best.routes = to_routes(pop[i]);
      }
  };
  auto report = [&](int gen) {
    if (!monitor) return;
    std::vector<Routes> view;
    view.reserve(pop.size());
    for (const auto& c : pop) view.push_back(to_routes(c));
    monitor(gen, view);
  };
  track();
  report(0);

  auto tournament = [&]() -> const Chromosome& {
    const std::size_t a = rng.below(pop_size), b = rng.below(pop_size);
    return fitness[a] >= fitness[b] ? pop[a] : pop[b];
  };

  for (int gen = 1; gen <= options.generations; ++gen) {
    const std::size_t elite =
        static_cast<std::size_t>(std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
    std::vector<Chromosome> next{pop[elite]};
    std::vector<double> next_fitness{fitness[elite]};
    while (next.size() < pop_size) {
      Chromosome child = order_crossover(tournament(), tournament(), rng);
      if (rng.bernoulli(options.mutation_rate)) swap_between_routes(child, rng);
      if (rng.bernoulli(options.mutation_rate)) reverse_within_route(child, rng);
      next_fitness.push_back(score(to_routes(child)));
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fitness = std::move(next_fitness);
    track();
    report(gen);
  }
  return best;
}

}  // namespace sar::optim
