#include "treemart/limit_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "treemart/error.hpp"
#include "treemart/parallel.hpp"
#include "treemart/profile_poly.hpp"
#include "treemart/tree_sim.hpp"

namespace treemart {

namespace {

double log_d(std::int64_t n) { return std::log(static_cast<double>(n)); }

double mean_of(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

double sd_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean_of(xs);
  KahanSum s;
  for (double x : xs) s.add((x - mu) * (x - mu));
  return std::sqrt(s.value() / static_cast<double>(xs.size() - 1));
}

std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("TREEMART_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double proxy_inflation(std::int64_t n, std::int64_t horizon) {
  return (static_cast<double>(n) * log_d(horizon)) / (static_cast<double>(horizon) * log_d(n));
}

void validate_proxy(const ExperimentConfig& config) {
  if (config.n < 2) throw Error(Errc::invalid_config, "n must be at least 2");
  if (config.horizon <= config.n) throw Error(Errc::invalid_config, "horizon must exceed n");
  if (config.replicas < 1) throw Error(Errc::invalid_config, "need at least one replica");
  const double inflation = proxy_inflation(config.n, config.horizon);
  if (inflation > kProxyGuard) {
    throw Error(Errc::invalid_config,
                "proxy guard: (n log N)/(N log n) = " + std::to_string(inflation) +
                    " exceeds 0.01; increase the horizon");
  }
}

std::vector<double> martingale_tail_gaps(const ExperimentConfig& config,
                                         const MomentTable& table) {
  validate_proxy(config);
  if (table.max_n() < config.horizon) {
    throw Error(Errc::cap_exceeded, "moment table shorter than the horizon");
  }
  std::vector<double> gaps(static_cast<std::size_t>(config.replicas));
  for_each_replica(config.replicas, config.threads, [&](std::int64_t r) {
    Growth growth(table, ReplicaSeed{config.master_seed, static_cast<std::uint64_t>(r)});
    while (growth.size() < config.n) growth.step();
    const double at_n = growth.martingale();
    while (growth.size() < config.horizon) growth.step();
    gaps[static_cast<std::size_t>(r)] = at_n - growth.martingale();
  });
  return gaps;
}

double clt_prefactor(const ModelParams& params, std::int64_t n) {
  return std::sqrt(params.growth() / params.m()) *
         std::sqrt(static_cast<double>(n) / log_d(n));
}

std::vector<double> clt_sample(const ExperimentConfig& config, const MomentTable& table) {
  auto samples = martingale_tail_gaps(config, table);
  const double scale = clt_prefactor(config.model, config.n);
  for (double& z : samples) z *= scale;
  return samples;
}

std::vector<double> clt_sample(const ExperimentConfig& config) {
  validate_proxy(config);
  const MomentTable table(config.model, config.horizon);
  return clt_sample(config, table);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(Errc::empty_sample, "ks_statistic needs samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto count = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const auto di = static_cast<double>(i);
    d = std::max({d, f - di / count, (di + 1.0) / count - f});
  }
  return d;
}

double ks_p_value(double statistic, std::int64_t count) {
  const double root = std::sqrt(static_cast<double>(count));
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda < 1e-3) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

double normal_abs_moment(double p) {
  return std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

MomentEstimate moment_estimate(std::span<const double> samples, int p, const ModelParams& params) {
  if (samples.empty()) throw Error(Errc::empty_sample, "moment_estimate needs samples");
  std::vector<double> powers;
  powers.reserve(samples.size());
  for (double z : samples) powers.push_back(std::pow(std::abs(z), p));
  return MomentEstimate{
      .p = p,
      .value = mean_of(powers),
      .target = normal_abs_moment(p),
      .standard_error = sd_of(powers) / std::sqrt(static_cast<double>(powers.size())),
      .exploratory = !params.integer_beta(),
  };
}

MomentEstimate moment_estimate(const ExperimentConfig& config, int p) {
  if (p != 2 && p != 3 && p != 4 && p != 6) {
    throw Error(Errc::invalid_config, "moment order must be one of 2, 3, 4, 6");
  }
  const auto samples = clt_sample(config);
  return moment_estimate(samples, p, config.model);
}

// ---------------------------------------------------------------------------
// LIL

double lil_prefactor(const ModelParams& params, std::int64_t n) {
  const double ln = log_d(n);
  return std::sqrt(params.growth() / (2.0 * params.m())) *
         std::sqrt(static_cast<double>(n) / (ln * std::log(ln)));
}

double LilResult::pooled_max() const {
  std::vector<double> v;
  for (const auto& r : replicas) v.push_back(r.running_max.back());
  return mean_of(v);
}

double LilResult::pooled_min() const {
  std::vector<double> v;
  for (const auto& r : replicas) v.push_back(r.running_min.back());
  return mean_of(v);
}

double LilResult::extreme_max() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : replicas) best = std::max(best, r.running_max.back());
  return best;
}

double LilResult::extreme_min() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : replicas) best = std::min(best, r.running_min.back());
  return best;
}

LilResult lil_trajectory(const ExperimentConfig& config) {
  if (config.checkpoints.empty()) throw Error(Errc::invalid_config, "lil needs checkpoints");
  if (config.replicas < 1) throw Error(Errc::invalid_config, "need at least one replica");
  const double lower = std::exp(std::numbers::e);
  const double upper = static_cast<double>(config.horizon) / 100.0;
  LilResult result;
  result.checkpoints = sorted_unique(config.checkpoints);
  for (auto c : result.checkpoints) {
    if (static_cast<double>(c) < lower) {
      throw Error(Errc::invalid_config, "checkpoint " + std::to_string(c) + " below e^e");
    }
    if (static_cast<double>(c) > upper) {
      throw Error(Errc::invalid_config,
                  "checkpoint " + std::to_string(c) + " above horizon/100");
    }
  }
  const MomentTable table(config.model, config.horizon);
  const auto& cps = result.checkpoints;
  result.replicas.resize(static_cast<std::size_t>(config.replicas));
  for_each_replica(config.replicas, config.threads, [&](std::int64_t r) {
    Growth growth(table, ReplicaSeed{config.master_seed, static_cast<std::uint64_t>(r)});
    std::vector<double> s_at(cps.size());
    for (std::size_t k = 0; k < cps.size(); ++k) {
      while (growth.size() < cps[k]) growth.step();
      s_at[k] = growth.martingale();
    }
    while (growth.size() < config.horizon) growth.step();
    const double s_limit = growth.martingale();

    LilReplica out;
    out.running_max.resize(cps.size());
    out.running_min.resize(cps.size());
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cps.size(); ++k) {
      const double l = lil_prefactor(config.model, cps[k]) * (s_at[k] - s_limit);
      hi = std::max(hi, l);
      lo = std::min(lo, l);
      out.running_max[k] = hi;
      out.running_min[k] = lo;
    }
    result.replicas[static_cast<std::size_t>(r)] = std::move(out);
  });
  return result;
}

// ---------------------------------------------------------------------------
// Condition diagnostics

double ConditionReport::l4_mean() const { return mean_of(l4_ratio); }
double ConditionReport::l4_closed_mean() const { return mean_of(l4_ratio_closed); }

ConditionReport condition_diagnostics(const ExperimentConfig& config,
                                      std::vector<double> epsilons) {
  if (config.n < 2 || config.horizon < config.n) {
    throw Error(Errc::invalid_config, "condition diagnostics need 2 <= n <= N");
  }
  if (config.replicas < 1) throw Error(Errc::invalid_config, "need at least one replica");
  const auto& params = config.model;
  const std::int64_t horizon = config.horizon;
  const MomentTable moments(params, horizon);
  const NormalizerTable normalizer(params, horizon);

  ConditionReport report;
  report.n = config.n;
  report.horizon = horizon;
  report.replicas = config.replicas;
  const TailVariance s2 = s_squared(moments, config.n, horizon);
  report.s2_exact = s2.truncated;
  report.s2_closed_form = s2.closed_form;
  report.truncation_ratio = proxy_inflation(config.n, horizon);
  report.epsilons = std::move(epsilons);

  std::vector<std::int64_t> checkpoints = config.checkpoints;
  if (checkpoints.empty()) {
    for (std::int64_t k = 100; k <= horizon; k *= 10) checkpoints.push_back(k);
    checkpoints.push_back(horizon);
  }
  checkpoints = sorted_unique(std::move(checkpoints));
  for (auto c : checkpoints) {
    if (c < 2 || c > horizon) throw Error(Errc::invalid_config, "checkpoint outside [2, N]");
  }
  report.checkpoints = checkpoints;
  for (std::int64_t k = 1000; 2 * k <= horizon && k <= 100'000; k *= 10) {
    report.mpp_sizes.push_back(k);
  }

  const double s_n = std::sqrt(report.s2_exact);
  const double theta = params.theta();
  const auto reps = static_cast<std::size_t>(config.replicas);
  const std::size_t n_eps = report.epsilons.size();
  const std::size_t n_cp = checkpoints.size();
  const std::size_t n_mpp = report.mpp_sizes.size();

  struct Trace {
    double conditional_sum = 0.0;
    std::vector<double> c1;
    std::vector<double> l2, s4, s6;
    std::vector<double> mpp_gap;
  };
  std::vector<Trace> traces(reps);

  for_each_replica(config.replicas, config.threads, [&](std::int64_t r) {
    Trace t;
    t.c1.assign(n_eps, 0.0);
    t.l2.assign(n_cp, 0.0);
    t.s4.assign(n_cp, 0.0);
    t.s6.assign(n_cp, 0.0);
    t.mpp_gap.assign(n_mpp, 0.0);
    std::vector<double> mpp_at(n_mpp, 0.0);

    Growth growth(moments, ReplicaSeed{config.master_seed, static_cast<std::uint64_t>(r)});
    KahanSum conditional;
    KahanSum l2;
    std::size_t next_cp = 0;
    while (growth.size() < horizon) {
      const std::int64_t i = growth.size() + 1;
      const double v = i >= config.n
                           ? conditional_increment_variance(growth.state(), moments, normalizer)
                           : 0.0;
      const StepRecord rec = growth.step();
      const double x = rec.increment;
      if (i >= config.n) {
        conditional.add(v);
        for (std::size_t e = 0; e < n_eps; ++e) {
          if (std::abs(x) >= report.epsilons[e] * s_n) t.c1[e] += x * x;
        }
      }
      const double s_i2 = theta * log_d(i) / static_cast<double>(i);
      l2.add(x * x * x * x / (s_i2 * s_i2));
      if (next_cp < n_cp && checkpoints[next_cp] == i) {
        const double s = rec.martingale;
        t.l2[next_cp] = l2.value();
        t.s4[next_cp] = std::pow(s, 4);
        t.s6[next_cp] = std::pow(s, 6);
        ++next_cp;
      }
      for (std::size_t k = 0; k < n_mpp; ++k) {
        if (i == report.mpp_sizes[k]) {
          mpp_at[k] = derivatives_at_one(growth.state(), normalizer).Mpp1;
        } else if (i == 2 * report.mpp_sizes[k]) {
          t.mpp_gap[k] = std::abs(derivatives_at_one(growth.state(), normalizer).Mpp1 - mpp_at[k]);
        }
      }
    }
    t.conditional_sum = conditional.value();
    for (double& c : t.c1) c /= report.s2_exact;
    traces[static_cast<std::size_t>(r)] = std::move(t);
  });

  auto column_mean = [&](auto member, std::size_t width) {
    std::vector<double> out(width, 0.0);
    for (const auto& t : traces) {
      for (std::size_t k = 0; k < width; ++k) out[k] += (t.*member)[k];
    }
    for (double& v : out) v /= static_cast<double>(reps);
    return out;
  };
  for (const auto& t : traces) {
    report.l4_ratio.push_back(t.conditional_sum / report.s2_exact);
    report.l4_ratio_closed.push_back(t.conditional_sum / report.s2_closed_form);
  }
  report.c1_sum = column_mean(&Trace::c1, n_eps);
  report.l2_partial_sum = column_mean(&Trace::l2, n_cp);
  report.p1_moment4 = column_mean(&Trace::s4, n_cp);
  report.p1_moment6 = column_mean(&Trace::s6, n_cp);
  report.mpp_gap = column_mean(&Trace::mpp_gap, n_mpp);
  return report;
}

// ---------------------------------------------------------------------------

std::vector<DepthTailRow> depth_tail_experiment(const ModelParams& params, std::int64_t n,
                                                std::int64_t samples, std::uint64_t master_seed,
                                                std::span<const double> t_grid,
                                                unsigned threads) {
  if (n < 1 || samples < 1) throw Error(Errc::invalid_config, "need n >= 1 and samples >= 1");
  std::vector<std::uint32_t> depth(static_cast<std::size_t>(samples));
  for_each_replica(samples, threads, [&](std::int64_t r) {
    Rng rng = make_rng(ReplicaSeed{master_seed, static_cast<std::uint64_t>(r)});
    TreeState state(params);
    state.reserve(static_cast<std::size_t>(n));
    while (state.size() < n) insert_step(state, rng);
    depth[static_cast<std::size_t>(r)] = state.last_depth();
  });
  const double mean = depth_mean(params, n);
  const auto count = static_cast<double>(samples);
  std::vector<DepthTailRow> rows;
  for (double t : t_grid) {
    const auto hits = std::count_if(depth.begin(), depth.end(), [&](std::uint32_t d) {
      return std::abs(static_cast<double>(d) - mean) >= t;
    });
    const double f = static_cast<double>(hits) / count;
    rows.push_back({t, f, bernstein_depth_tail(params, n, t), std::sqrt(f * (1.0 - f) / count)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

nlohmann::json config_json(const ExperimentConfig& config) {
  return {
      {"model", config.model.tag()},
      {"beta", config.model.beta()},
      {"m", config.model.m()},
      {"n", config.n},
      {"horizon", config.horizon},
      {"replicas", config.replicas},
      {"master_seed", config.master_seed},
      {"checkpoints", config.checkpoints},
      {"moment_orders", config.moment_orders},
  };
}

nlohmann::json clt_report(const ExperimentConfig& config, std::span<const double> samples) {
  const double ks = ks_statistic(samples, std_normal_cdf);
  return {
      {"config", config_json(config)},
      {"summary",
       {
           {"prefactor", clt_prefactor(config.model, config.n)},
           {"proxy_inflation", proxy_inflation(config.n, config.horizon)},
           {"mean", mean_of(samples)},
           {"sd", sd_of(samples)},
           {"ks_distance", ks},
           {"ks_p_value", ks_p_value(ks, static_cast<std::int64_t>(samples.size()))},
       }},
  };
}

nlohmann::json moments_report(const ExperimentConfig& config, std::span<const double> samples) {
  nlohmann::json rows = nlohmann::json::array();
  for (int p : config.moment_orders) {
    const auto e = moment_estimate(samples, p, config.model);
    rows.push_back({{"p", e.p},
                    {"estimate", e.value},
                    {"target", e.target},
                    {"standard_error", e.standard_error},
                    {"exploratory", e.exploratory}});
  }
  return {{"config", config_json(config)}, {"summary", {{"moments", rows}}}};
}

nlohmann::json lil_report(const ExperimentConfig& config, const LilResult& result) {
  std::vector<double> final_max;
  std::vector<double> final_min;
  for (const auto& r : result.replicas) {
    final_max.push_back(r.running_max.back());
    final_min.push_back(r.running_min.back());
  }
  std::vector<double> mean_running_max(result.checkpoints.size(), 0.0);
  std::vector<double> mean_running_min(result.checkpoints.size(), 0.0);
  for (const auto& r : result.replicas) {
    for (std::size_t k = 0; k < result.checkpoints.size(); ++k) {
      mean_running_max[k] += r.running_max[k] / static_cast<double>(result.replicas.size());
      mean_running_min[k] += r.running_min[k] / static_cast<double>(result.replicas.size());
    }
  }
  auto cfg = config_json(config);
  cfg["checkpoints"] = {{"first", result.checkpoints.front()},
                        {"last", result.checkpoints.back()},
                        {"count", result.checkpoints.size()}};
  return {
      {"config", cfg},
      {"summary",
       {{"pooled_max", result.pooled_max()},
        {"pooled_min", result.pooled_min()},
        {"extreme_max", result.extreme_max()},
        {"extreme_min", result.extreme_min()},
        {"final_max", final_max},
        {"final_min", final_min}}},
      {"per_checkpoint",
       {{"checkpoints", result.checkpoints},
        {"mean_running_max", mean_running_max},
        {"mean_running_min", mean_running_min}}},
  };
}

nlohmann::json condition_report_json(const ExperimentConfig& config, const ConditionReport& r) {
  return {
      {"config", config_json(config)},
      {"summary",
       {{"s2_exact", r.s2_exact},
        {"s2_closed_form", r.s2_closed_form},
        {"truncation_ratio", r.truncation_ratio},
        {"l4_ratio_mean", r.l4_mean()},
        {"l4_ratio_closed_form_mean", r.l4_closed_mean()},
        {"l4_ratio", r.l4_ratio},
        {"epsilons", r.epsilons},
        {"c1_sum", r.c1_sum},
        {"mpp_sizes", r.mpp_sizes},
        {"mpp_gap", r.mpp_gap}}},
      {"per_checkpoint",
       {{"checkpoints", r.checkpoints},
        {"l2_partial_sum", r.l2_partial_sum},
        {"p1_moment4", r.p1_moment4},
        {"p1_moment6", r.p1_moment6}}},
  };
}

std::string report_stem(const std::string& kind, const ExperimentConfig& config) {
  std::string tag = config.model.tag();
  std::replace(tag.begin(), tag.end(), ':', '-');
  std::replace(tag.begin(), tag.end(), ',', '_');
  return kind + "_" + tag + "_n" + std::to_string(config.n) + "_N" +
         std::to_string(config.horizon) + "_seed" + std::to_string(config.master_seed);
}

}  // namespace treemart
