#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "treemart/exact.hpp"
#include "treemart/model.hpp"
#include "treemart/tree_sim.hpp"

namespace treemart {

using Complex = std::complex<double>;

/// Largest |z - 1| accepted by eval_C / eval_M. Inside this disc every factor
/// of the product form has positive real part, so principal logs are safe.
constexpr double kProfileWindow = 0.5;
/// Default evaluation disc around z = 1 used by the CLI and diagnostics.
constexpr double kDefaultProfileRadius = 0.1;

/// W_n(z) = sum_k U_k(n) z^k by Horner's rule over the external profile.
Complex eval_W(const TreeState& state, Complex z);

/// C_n(z) = E[W_n(z)] = m z prod_{j<n} (alpha_j + beta + m z) / alpha_j,
/// evaluated as a sum of complex logarithms.
Complex eval_C(const ModelParams& params, std::int64_t n, Complex z);

/// M_n(z) = W_n(z) / C_n(z); throws degenerate_normalizer if |C_n(z)| < 1e-300.
Complex eval_M(const TreeState& state, Complex z);

/// C_n(1), C_n'(1), C_n''(1) from the logarithmic derivatives of the product form.
struct NormalizerAtOne {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};
NormalizerAtOne normalizer_at_one(const ModelParams& params, std::int64_t n);

/// Prefix sums of the logarithmic derivatives for all n <= max_n, so that
/// normalizer_at_one is O(1) along a trajectory.
class NormalizerTable {
 public:
  NormalizerTable(const ModelParams& params, std::int64_t max_n);
  const ModelParams& params() const noexcept { return params_; }
  std::int64_t max_n() const noexcept { return static_cast<std::int64_t>(first_.size()) - 1; }
  NormalizerAtOne at(std::int64_t n) const;

 private:
  ModelParams params_;
  std::vector<double> first_;   // (log C_n)'(1)
  std::vector<double> second_;  // (log C_n)''(1)
};

struct DerivativeBundle {
  double W1 = 0.0;    ///< W_n(1) = alpha_n
  double Wp1 = 0.0;   ///< W_n'(1) = E_n
  double Wpp1 = 0.0;  ///< W_n''(1) = sum_k k (k-1) U_k(n)
  double C1 = 0.0;
  double Cp1 = 0.0;   ///< mu_n
  double Cpp1 = 0.0;
  double Mp1 = 0.0;   ///< M_n'(1) = S_n
  double Mpp1 = 0.0;
};
DerivativeBundle derivatives_at_one(const TreeState& state);
DerivativeBundle derivatives_at_one(const TreeState& state, const NormalizerTable& normalizer);

/// E[X_n^2 | F_{n-1}] for the tree `state` of size n-1:
///   ((beta+m)/alpha_n)^2 (Var(D_n) + M''_{n-1}(1) + S_{n-1} - S_{n-1}^2).
double conditional_increment_variance(const TreeState& state, const MomentTable& moments,
                                      const NormalizerTable& normalizer);

}  // namespace treemart
