#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "treemart/exact.hpp"
#include "treemart/model.hpp"

namespace treemart {

/// Monte Carlo protocol shared by the limit-theorem experiments. S_N at the
/// horizon N stands in for the almost-sure limit S.
struct ExperimentConfig {
  ModelParams model = presets::bst();
  std::int64_t n = 2000;
  std::int64_t horizon = 400'000;
  std::int64_t replicas = 1000;
  std::uint64_t master_seed = 0;
  std::vector<std::int64_t> checkpoints;
  std::vector<int> moment_orders{2, 3, 4, 6};
  unsigned threads = 1;
};

/// Largest accepted (n log N) / (N log n), the relative variance that the
/// S_N proxy removes from S_n - S.
constexpr double kProxyGuard = 0.01;
double proxy_inflation(std::int64_t n, std::int64_t horizon);

/// Throws invalid_config unless 2 <= n < N and the proxy guard holds.
void validate_proxy(const ExperimentConfig& config);

/// One S_n - S_N per replica (ordered by replica index).
std::vector<double> martingale_tail_gaps(const ExperimentConfig& config,
                                         const MomentTable& table);

/// sqrt((beta+m)/m) sqrt(n / log n)
double clt_prefactor(const ModelParams& params, std::int64_t n);

/// Z = sqrt((beta+m)/m) sqrt(n / log n) (S_n - S_N), one per replica.
std::vector<double> clt_sample(const ExperimentConfig& config);
std::vector<double> clt_sample(const ExperimentConfig& config, const MomentTable& table);

double std_normal_cdf(double x);

/// Two-sided sup_x |F_hat(x) - cdf(x)|; throws empty_sample.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov p-value for a one-sample statistic over `count` points.
double ks_p_value(double statistic, std::int64_t count);

/// E|N|^p for a standard normal N.
double normal_abs_moment(double p);

struct MomentEstimate {
  int p = 0;
  double value = 0.0;
  double target = 0.0;
  double standard_error = 0.0;
  bool exploratory = false;  ///< non-integer beta: no known limit for the moments
};
MomentEstimate moment_estimate(std::span<const double> samples, int p, const ModelParams& params);
MomentEstimate moment_estimate(const ExperimentConfig& config, int p);

/// sqrt((beta+m)/(2m)) sqrt(n / (log n log log n))
double lil_prefactor(const ModelParams& params, std::int64_t n);

struct LilReplica {
  std::vector<double> running_max;  ///< per checkpoint
  std::vector<double> running_min;
};
struct LilResult {
  std::vector<std::int64_t> checkpoints;
  std::vector<LilReplica> replicas;

  double pooled_max() const;       ///< mean over replicas of the final running max
  double pooled_min() const;       ///< mean over replicas of the final running min
  double extreme_max() const;      ///< max over replicas
  double extreme_min() const;      ///< min over replicas
};

/// Running extremes of L_n = lil_prefactor(n) (S_n - S_N) over the
/// checkpoints, which must lie in [e^e, N/100].
LilResult lil_trajectory(const ExperimentConfig& config);

/// Diagnostics for the martingale-limit conditions along simulated paths.
struct ConditionReport {
  std::int64_t n = 0;
  std::int64_t horizon = 0;
  std::int64_t replicas = 0;
  double s2_exact = 0.0;        ///< sum_{i=n}^{N} E[X_i^2]
  double s2_closed_form = 0.0;  ///< theta log(n) / n
  double truncation_ratio = 0.0;
  std::vector<double> l4_ratio;          ///< per replica, exact s_n^2
  std::vector<double> l4_ratio_closed;   ///< per replica, closed-form s_n^2
  std::vector<double> epsilons;
  std::vector<double> c1_sum;            ///< replica mean, one per epsilon
  std::vector<std::int64_t> checkpoints;
  std::vector<double> l2_partial_sum;    ///< replica mean of sum_{i<=k} X_i^4 / s_i^4
  std::vector<double> p1_moment4;        ///< replica mean of S_k^4
  std::vector<double> p1_moment6;
  std::vector<std::int64_t> mpp_sizes;   ///< n with M''_{2n}(1) - M''_n(1) tracked
  std::vector<double> mpp_gap;           ///< replica mean of |M''_{2n}(1) - M''_n(1)|

  double l4_mean() const;
  double l4_closed_mean() const;
};

/// Grows `replicas` paths to the horizon, using the conditional increment
/// variances from the profile polynomial at every step.
ConditionReport condition_diagnostics(const ExperimentConfig& config,
                                      std::vector<double> epsilons = {0.25, 0.5, 1.0});

struct DepthTailRow {
  double t = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double standard_error = 0.0;
};
/// Frequencies of |D_n - E D_n| >= t over `samples` independently grown trees
/// next to the Bernstein bound.
std::vector<DepthTailRow> depth_tail_experiment(const ModelParams& params, std::int64_t n,
                                                std::int64_t samples, std::uint64_t master_seed,
                                                std::span<const double> t_grid,
                                                unsigned threads = 1);

// Report serialisation. Wall-clock timing goes in a separate "metadata"
// block so the rest of the document is reproducible byte for byte.
nlohmann::json config_json(const ExperimentConfig& config);
nlohmann::json clt_report(const ExperimentConfig& config, std::span<const double> samples);
nlohmann::json moments_report(const ExperimentConfig& config, std::span<const double> samples);
nlohmann::json lil_report(const ExperimentConfig& config, const LilResult& result);
nlohmann::json condition_report_json(const ExperimentConfig& config, const ConditionReport& r);

/// <kind>_<model tag>_n<n>_N<horizon>_seed<seed>, with ':' and ',' replaced.
std::string report_stem(const std::string& kind, const ExperimentConfig& config);

}  // namespace treemart
