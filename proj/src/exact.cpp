#include "treemart/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "treemart/error.hpp"

namespace treemart {

namespace {

// Walks n = 1, 2, ... keeping the running sums behind the closed forms:
//   E[D_n]   = m sum_{i<n} 1/alpha_i
//   Var(D_n) = sum_{i<n} p_i (1 - p_i),  p_i = m / alpha_i
//   E[P_n]   = (m alpha_n / (beta+m)) sum_{i<n} 1/alpha_i - m (n-1) / (beta+m)
//   Var(P_n) = (a_n)(a_n + 1) sum_{i<=n} Var(D_i) / (a_i (a_i + 1)),  a_i = alpha_i / (beta+m)
class MomentCursor {
 public:
  explicit MomentCursor(const ModelParams& params) : params_(params) {}

  std::int64_t n() const noexcept { return n_; }

  MomentRow row() const {
    const double c = params_.growth();
    const double m = params_.m();
    const double a_n = alpha(params_, n_) / c;
    return MomentRow{
        .n = n_,
        .depth_mean = m * inv_alpha_.value(),
        .depth_var = depth_var_.value(),
        .path_mean = m * a_n * inv_alpha_.value() - m * static_cast<double>(n_ - 1) / c,
        .path_var = a_n * (a_n + 1.0) * var_ratio_.value(),
    };
  }

  void advance() {
    const double alpha_n = alpha(params_, n_);
    const double p = params_.m() / alpha_n;
    inv_alpha_.add(1.0 / alpha_n);
    depth_var_.add(p * (1.0 - p));
    ++n_;
    const double a = alpha(params_, n_) / params_.growth();
    var_ratio_.add(depth_var_.value() / (a * (a + 1.0)));
  }

 private:
  ModelParams params_;
  std::int64_t n_ = 1;
  KahanSum inv_alpha_;
  KahanSum depth_var_;
  KahanSum var_ratio_;
};

MomentRow moments_at(const ModelParams& params, std::int64_t n) {
  if (n < 1) throw Error(Errc::domain_error, "moments need n >= 1");
  MomentCursor cursor(params);
  while (cursor.n() < n) cursor.advance();
  return cursor.row();
}

}  // namespace

// ---------------------------------------------------------------------------
// Pmf

double Pmf::total() const {
  KahanSum s;
  for (double p : probs) s.add(p);
  return s.value();
}

double Pmf::mean() const {
  KahanSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) s.add(support[i] * probs[i]);
  return s.value();
}

double Pmf::variance() const {
  const double mu = mean();
  KahanSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = support[i] - mu;
    s.add(d * d * probs[i]);
  }
  return s.value();
}

double Pmf::central_abs_moment(double p) const {
  const double mu = mean();
  KahanSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s.add(std::pow(std::abs(support[i] - mu), p) * probs[i]);
  }
  return s.value();
}

double Pmf::two_sided_tail(double center, double t) const {
  KahanSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (std::abs(support[i] - center) >= t) s.add(probs[i]);
  }
  return s.value();
}

double total_variation(const Pmf& a, const Pmf& b) {
  KahanSum s;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.support.size() || j < b.support.size()) {
    if (j == b.support.size() || (i < a.support.size() && a.support[i] < b.support[j])) {
      s.add(std::abs(a.probs[i++]));
    } else if (i == a.support.size() || b.support[j] < a.support[i]) {
      s.add(std::abs(b.probs[j++]));
    } else {
      s.add(std::abs(a.probs[i++] - b.probs[j++]));
    }
  }
  return 0.5 * s.value();
}

// ---------------------------------------------------------------------------
// MomentTable

MomentTable::MomentTable(const ModelParams& params, std::int64_t max_n)
    : params_(params), max_n_(max_n) {
  if (max_n < 1) throw Error(Errc::domain_error, "moment table needs max_n >= 1");
  const auto size = static_cast<std::size_t>(max_n) + 1;
  depth_mean_.assign(size, 0.0);
  depth_var_.assign(size, 0.0);
  path_mean_.assign(size, 0.0);
  path_var_.assign(size, 0.0);
  MomentCursor cursor(params);
  for (std::int64_t n = 1;; ++n) {
    const MomentRow r = cursor.row();
    const auto k = static_cast<std::size_t>(n);
    depth_mean_[k] = r.depth_mean;
    depth_var_[k] = r.depth_var;
    path_mean_[k] = r.path_mean;
    path_var_[k] = r.path_var;
    if (n == max_n) break;
    cursor.advance();
  }
}

std::size_t MomentTable::check(std::int64_t n) const {
  if (n < 0 || n > max_n_) {
    throw Error(Errc::cap_exceeded, "moment table covers n <= " + std::to_string(max_n_) +
                                        ", requested " + std::to_string(n));
  }
  return static_cast<std::size_t>(n);
}

MomentRow MomentTable::row(std::int64_t n) const {
  return MomentRow{n, depth_mean(n), depth_var(n), path_mean(n), path_var(n)};
}

double MomentTable::external_path_mean(std::int64_t n) const {
  return params_.growth() * path_mean(n) + static_cast<double>(n) * params_.m();
}

double MomentTable::martingale(std::int64_t n, double path_length) const {
  return (path_length - path_mean(n)) * params_.growth() / alpha(params_, n);
}

double MomentTable::martingale_var(std::int64_t n) const {
  const double scale = params_.growth() / alpha(params_, n);
  return path_var(n) * scale * scale;
}

double MomentTable::increment_second_moment(std::int64_t i) const {
  if (i < 2) return 0.0;
  const double scale = params_.growth() / alpha(params_, i);
  return scale * scale * (depth_var(i) - martingale_var(i - 1));
}

// ---------------------------------------------------------------------------
// Free functions

double depth_mean(const ModelParams& params, std::int64_t n) {
  return moments_at(params, n).depth_mean;
}

double depth_variance(const ModelParams& params, std::int64_t n) {
  return moments_at(params, n).depth_var;
}

double mean_path(const ModelParams& params, std::int64_t n) {
  return moments_at(params, n).path_mean;
}

double var_path(const ModelParams& params, std::int64_t n) {
  return moments_at(params, n).path_var;
}

Pmf depth_pmf(const ModelParams& params, std::int64_t n, std::int64_t cap) {
  if (n < 1) throw Error(Errc::domain_error, "depth_pmf needs n >= 1");
  if (n > cap) {
    throw Error(Errc::cap_exceeded,
                "depth_pmf cap is " + std::to_string(cap) + ", requested " + std::to_string(n));
  }
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  dist[0] = 1.0;
  for (std::int64_t i = 1; i < n; ++i) {
    const double p = params.m() / alpha(params, i);
    for (auto k = static_cast<std::size_t>(i); k > 0; --k) {
      dist[k] = dist[k] * (1.0 - p) + dist[k - 1] * p;
    }
    dist[0] *= 1.0 - p;
  }
  Pmf pmf;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (dist[k] >= 1e-18) {
      pmf.support.push_back(static_cast<double>(k));
      pmf.probs.push_back(dist[k]);
    }
  }
  const double total = pmf.total();
  for (double& p : pmf.probs) p /= total;
  return pmf;
}

MeanExpansion mean_expansion(const ModelParams& params) {
  const double theta = params.theta();
  return MeanExpansion{theta, -theta * (1.0 + digamma(theta))};
}

double variance_constant(const ModelParams& params) {
  const double theta = params.theta();
  return 1.0 + theta * (1.0 - theta * trigamma(theta));
}

TailVariance s_squared(const ModelParams& params, std::int64_t n, std::int64_t horizon) {
  if (n < 2 || horizon < n) throw Error(Errc::domain_error, "s_squared needs 2 <= n <= N");
  // Streaming version of MomentTable::increment_second_moment: O(1) memory.
  const double c = params.growth();
  MomentCursor cursor(params);
  double previous_martingale_var = 0.0;  // Var(S_1)
  KahanSum tail;
  while (cursor.n() < horizon) {
    cursor.advance();
    const MomentRow r = cursor.row();
    const double scale = c / alpha(params, r.n);
    if (r.n >= n) tail.add(scale * scale * (r.depth_var - previous_martingale_var));
    previous_martingale_var = r.path_var * scale * scale;
  }
  return TailVariance{tail.value(), params.theta() * std::log(static_cast<double>(n)) /
                                        static_cast<double>(n)};
}

TailVariance s_squared(const MomentTable& table, std::int64_t n, std::int64_t horizon) {
  if (n < 2 || horizon < n) throw Error(Errc::domain_error, "s_squared needs 2 <= n <= N");
  KahanSum tail;
  for (std::int64_t i = n; i <= horizon; ++i) tail.add(table.increment_second_moment(i));
  return TailVariance{tail.value(), table.params().theta() *
                                        std::log(static_cast<double>(n)) /
                                        static_cast<double>(n)};
}

double bernstein_depth_tail(const ModelParams& params, std::int64_t n, double t) {
  if (!(t > 0.0)) throw Error(Errc::domain_error, "tail bound needs t > 0");
  return 2.0 * std::exp(-t * t / (2.0 * depth_mean(params, n) + t));
}

double path_tail_bound(const ModelParams& params, std::int64_t n, double t) {
  if (!(t > 0.0)) throw Error(Errc::domain_error, "tail bound needs t > 0");
  const double nn = static_cast<double>(n);
  return 2.0 * nn * std::exp(-t * t / (2.0 * nn * nn * depth_mean(params, n) + t * nn));
}

}  // namespace treemart
