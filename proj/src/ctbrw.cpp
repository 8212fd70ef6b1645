#include "treemart/ctbrw.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "treemart/error.hpp"
#include "treemart/oracle.hpp"

namespace treemart {

std::int64_t CTState::height() const noexcept {
  for (std::size_t k = occupancy.size(); k-- > 0;) {
    if (occupancy[k] != 0) return static_cast<std::int64_t>(k);
  }
  return 0;
}

CTState simulate(const ModelParams& params, std::int64_t n_deaths, const ReplicaSeed& seed) {
  if (!params.integer_beta()) {
    throw Error(Errc::unsupported_model, "the embedding needs integer beta");
  }
  if (n_deaths < 0) throw Error(Errc::domain_error, "n_deaths must be >= 0");
  const bool mary = params.beta() == -1.0;
  const auto offspring_here = mary ? 0 : static_cast<std::int64_t>(params.beta()) + 1;
  const auto offspring_next = mary ? static_cast<std::int64_t>(params.m()) : 1;

  Rng rng = make_rng(seed);
  std::vector<std::uint32_t> individuals(mary ? static_cast<std::size_t>(params.m()) : 1, 0);
  CTState state;
  state.occupancy = {static_cast<std::int64_t>(individuals.size())};
  state.alive_total = static_cast<std::int64_t>(individuals.size());
  state.death_times.reserve(static_cast<std::size_t>(n_deaths));

  for (std::int64_t event = 1; event <= n_deaths; ++event) {
    const auto alive = static_cast<double>(individuals.size());
    state.clock += -std::log1p(-unit_uniform(rng)) / alive;
    state.death_times.push_back(state.clock);

    const auto who = std::min(static_cast<std::size_t>(unit_uniform(rng) * alive),
                              individuals.size() - 1);
    const std::uint32_t x = individuals[who];
    individuals[who] = individuals.back();
    individuals.pop_back();
    if (state.occupancy.size() < static_cast<std::size_t>(x) + 2) {
      state.occupancy.resize(static_cast<std::size_t>(x) + 2, 0);
    }
    state.occupancy[x] += offspring_here - 1;
    state.occupancy[x + 1] += offspring_next;
    individuals.insert(individuals.end(), static_cast<std::size_t>(offspring_here), x);
    individuals.insert(individuals.end(), static_cast<std::size_t>(offspring_next), x + 1);

    state.alive_total = static_cast<std::int64_t>(individuals.size());
    if (static_cast<double>(state.alive_total) != alpha(params, event + 1)) {
      throw std::logic_error("population count diverged from alpha_{n+1}");
    }
  }
  while (state.occupancy.size() > 1 && state.occupancy.back() == 0) state.occupancy.pop_back();
  return state;
}

double chi_square_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

CouplingResult coupling_statistic(const ModelParams& params, std::int64_t n,
                                  std::int64_t replicas, std::uint64_t master_seed) {
  if (!params.integer_beta()) {
    throw Error(Errc::unsupported_model, "the embedding needs integer beta");
  }
  if (n < 0 || n > 6) throw Error(Errc::invalid_config, "coupling_statistic needs n <= 6");
  if (replicas < 10'000) {
    throw Error(Errc::invalid_config, "coupling_statistic needs at least 10^4 replicas");
  }
  const ProfileLaw law = exact_profile_law(params, n + 1);

  std::map<std::vector<double>, std::int64_t> observed;
  for (std::int64_t r = 0; r < replicas; ++r) {
    const CTState s = simulate(params, n, ReplicaSeed{master_seed, static_cast<std::uint64_t>(r)});
    std::vector<double> key(s.occupancy.begin(), s.occupancy.end());
    while (!key.empty() && key.back() == 0.0) key.pop_back();
    ++observed[key];
  }

  CouplingResult result;
  struct Cell {
    double expected;
    double observed;
  };
  std::vector<Cell> cells;
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < law.outcomes.size(); ++i) {
    const auto it = observed.find(law.outcomes[i]);
    const std::int64_t count = it == observed.end() ? 0 : it->second;
    matched += count;
    cells.push_back({law.probs[i] * static_cast<double>(replicas), static_cast<double>(count)});
  }
  result.impossible_draws = replicas - matched;
  if (result.impossible_draws > 0) {
    result.chi_square = std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
    result.cells = static_cast<std::int64_t>(cells.size());
    return result;
  }

  // Pool ascending by expected count until each bucket reaches 5.
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.expected < b.expected; });
  std::vector<Cell> buckets;
  Cell open{0.0, 0.0};
  for (const Cell& c : cells) {
    open.expected += c.expected;
    open.observed += c.observed;
    if (open.expected >= 5.0) {
      buckets.push_back(open);
      open = {0.0, 0.0};
    }
  }
  if (open.expected > 0.0) {
    if (buckets.empty()) {
      buckets.push_back(open);
    } else {
      buckets.back().expected += open.expected;
      buckets.back().observed += open.observed;
    }
  }

  result.cells = static_cast<std::int64_t>(buckets.size());
  result.degrees_of_freedom = static_cast<int>(buckets.size()) - 1;
  for (const Cell& b : buckets) {
    const double d = b.observed - b.expected;
    result.chi_square += d * d / b.expected;
  }
  result.p_value = chi_square_sf(result.chi_square, result.degrees_of_freedom);
  return result;
}

}  // namespace treemart
