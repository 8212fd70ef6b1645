#pragma once

#include <cstdint>
#include <vector>

#include "treemart/model.hpp"

namespace treemart {

/// Finite probability mass function with sorted, distinct support.
struct Pmf {
  std::vector<double> support;
  std::vector<double> probs;

  double total() const;
  double mean() const;
  double variance() const;
  /// E|X - E X|^p
  double central_abs_moment(double p) const;
  /// P(|X - center| >= t)
  double two_sided_tail(double center, double t) const;
};

/// Sum of |p - q| / 2 over the union of supports (support values compared exactly).
double total_variation(const Pmf& a, const Pmf& b);

/// Exact moments of the insertion depth D_n and path length P_n.
struct MomentRow {
  std::int64_t n = 0;
  double depth_mean = 0.0;
  double depth_var = 0.0;
  double path_mean = 0.0;
  double path_var = 0.0;
};

/// Precomputed moments for every n in [0, max_n]. Building costs O(max_n);
/// the table is immutable afterwards and can be shared between threads.
class MomentTable {
 public:
  MomentTable(const ModelParams& params, std::int64_t max_n);

  const ModelParams& params() const noexcept { return params_; }
  std::int64_t max_n() const noexcept { return max_n_; }

  double depth_mean(std::int64_t n) const { return depth_mean_[check(n)]; }
  double depth_var(std::int64_t n) const { return depth_var_[check(n)]; }
  double path_mean(std::int64_t n) const { return path_mean_[check(n)]; }
  double path_var(std::int64_t n) const { return path_var_[check(n)]; }
  MomentRow row(std::int64_t n) const;

  /// mu_n = E[E_n] = (beta+m) E[P_n] + n m.
  double external_path_mean(std::int64_t n) const;

  /// S_n for a realised path length P_n.
  double martingale(std::int64_t n, double path_length) const;

  /// Var(S_n) = Var(P_n) / (n - beta/(beta+m))^2.
  double martingale_var(std::int64_t n) const;

  /// E[X_i^2] = ((beta+m)/alpha_i)^2 (Var(D_i) - Var(S_{i-1})), i >= 2.
  double increment_second_moment(std::int64_t i) const;

 private:
  std::size_t check(std::int64_t n) const;

  ModelParams params_;
  std::int64_t max_n_;
  std::vector<double> depth_mean_;
  std::vector<double> depth_var_;
  std::vector<double> path_mean_;
  std::vector<double> path_var_;
};

double depth_mean(const ModelParams& params, std::int64_t n);
double depth_variance(const ModelParams& params, std::int64_t n);

constexpr std::int64_t kDepthPmfCap = 10'000;

/// Exact law of D_n as a Poisson-binomial convolution over the n-1 ancestor
/// indicators with success probabilities m/alpha_i.
Pmf depth_pmf(const ModelParams& params, std::int64_t n, std::int64_t cap = kDepthPmfCap);

double mean_path(const ModelParams& params, std::int64_t n);
double var_path(const ModelParams& params, std::int64_t n);

/// E[P_n] = a n log n + b n + O(log n).
struct MeanExpansion {
  double a = 0.0;
  double b = 0.0;
};
MeanExpansion mean_expansion(const ModelParams& params);

/// sigma^2 with Var(P_n) = sigma^2 n^2 + o(n^2).
double variance_constant(const ModelParams& params);

struct TailVariance {
  double truncated = 0.0;    ///< sum_{i=n}^{N} E[X_i^2]
  double closed_form = 0.0;  ///< theta log(n) / n
};
TailVariance s_squared(const ModelParams& params, std::int64_t n, std::int64_t horizon);
TailVariance s_squared(const MomentTable& table, std::int64_t n, std::int64_t horizon);

/// 2 exp(-t^2 / (2 E[D_n] + t))
double bernstein_depth_tail(const ModelParams& params, std::int64_t n, double t);
/// 2n exp(-t^2 / (2 n^2 E[D_n] + t n))
double path_tail_bound(const ModelParams& params, std::int64_t n, double t);

/// Compensated summation.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace treemart
