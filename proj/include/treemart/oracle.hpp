#pragma once

#include <cstdint>
#include <vector>

#include "treemart/exact.hpp"
#include "treemart/model.hpp"

namespace treemart {

/// Largest size the exhaustive enumeration accepts.
constexpr std::int64_t kOracleCap = 8;

struct HistorySummary {
  std::int64_t path_length = 0;
  std::vector<std::uint32_t> depths;           ///< D_1 .. D_n
  std::vector<std::int64_t> internal_profile;  ///< X_k(n)
  std::vector<double> external_profile;        ///< U_k(n), k >= 0
  std::vector<double> martingale;              ///< S_1 .. S_n
};

/// One labelled growth history (T_1, ..., T_n). parent_choices holds the
/// parent index (insertion order, root = 0) of nodes 2..n.
struct History {
  std::vector<std::uint32_t> parent_choices;
  double probability = 0.0;
  HistorySummary terminal;
};

/// Every positive-probability history of length n, each exactly once.
/// Isomorphic shapes are not merged. Throws cap_exceeded for n > 8.
std::vector<History> enumerate_histories(const ModelParams& params, std::int64_t n);

enum class Statistic { path_length, depth_of_last, profile_vector };

/// Exact law of a scalar statistic of T_n. For Statistic::profile_vector use
/// exact_profile_law(); passing it here throws usage.
Pmf exact_distribution(const ModelParams& params, std::int64_t n, Statistic statistic);

/// Exact law of the external profile vector (U_1(n), U_2(n), ...) with
/// trailing zeros removed; outcomes sorted lexicographically.
struct ProfileLaw {
  std::vector<std::vector<double>> outcomes;
  std::vector<double> probs;
};
ProfileLaw exact_profile_law(const ModelParams& params, std::int64_t n);

/// max over histories h of size n-1 of |E[S_n | h] - S_{n-1}(h)|; 2 <= n <= 7.
double check_martingale_property(const ModelParams& params, std::int64_t n);

/// Total-variation distance between the enumerated law of D_n and depth_pmf.
double check_depth_bernoulli_law(const ModelParams& params, std::int64_t n);

/// max over prefixes h of size n-1 of the gap between
/// alpha_n^2 / (beta+m)^2 E[X_n^2 | h] (by enumerating the n-th insertion) and
/// Var(D_n) + M''_{n-1}(1) + S_{n-1} - S_{n-1}^2 (from the profile polynomial).
double check_conditional_variance_identity(const ModelParams& params, std::int64_t n);

/// max over prefixes h of size n-1 of
/// |E[W_n(z) | h] - (alpha_{n-1} + beta + m z) / alpha_{n-1} W_{n-1}(z)| for real z.
double check_profile_recursion(const ModelParams& params, std::int64_t n, double z);

/// Joint law of the indicators that the i-th and j-th inserted nodes lie on
/// the root path of the n-th node (1 <= i < j < n).
struct AncestorLaw {
  double both = 0.0;
  double only_i = 0.0;
  double only_j = 0.0;
  double neither = 0.0;
};
AncestorLaw ancestor_joint_law(const ModelParams& params, std::int64_t n, std::int64_t i,
                               std::int64_t j);

}  // namespace treemart
