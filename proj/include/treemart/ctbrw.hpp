#pragma once

#include <cstdint>
#include <vector>

#include "treemart/model.hpp"
#include "treemart/rng.hpp"

namespace treemart {

/// Continuous-time branching random walk after some number of death events.
/// occupancy[k] is the number of alive individuals at position k.
struct CTState {
  std::vector<std::int64_t> occupancy;
  std::int64_t alive_total = 0;
  std::vector<double> death_times;  ///< tau_1 < tau_2 < ...
  double clock = 0.0;

  std::int64_t deaths() const noexcept { return static_cast<std::int64_t>(death_times.size()); }
  /// Highest occupied position (0 for an empty occupancy vector).
  std::int64_t height() const noexcept;
};

/// Initial population: one individual at 0 for beta >= 0 (m = 1), m individuals
/// at 0 for beta = -1. Each death at position x is replaced by beta+1
/// individuals at x and one at x+1 (beta >= 0) or m individuals at x+1
/// (beta = -1). Throws unsupported_model for non-integer beta.
CTState simulate(const ModelParams& params, std::int64_t n_deaths, const ReplicaSeed& seed);

struct CouplingResult {
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::int64_t cells = 0;             ///< after pooling
  std::int64_t impossible_draws = 0;  ///< observed vectors with zero exact probability
};

/// Chi-square goodness of fit of the occupancy vector after n deaths against
/// the exact law of (U_{k+1}(n+1))_{k>=0}. Cells with expected count below 5
/// are pooled. Requires n <= 6 and replicas >= 10^4.
CouplingResult coupling_statistic(const ModelParams& params, std::int64_t n,
                                  std::int64_t replicas, std::uint64_t master_seed);

/// Upper tail P(chi^2_dof >= x).
double chi_square_sf(double x, int dof);

}  // namespace treemart
