#include "treemart/profile_poly.hpp"

#include <cmath>
#include <string>

#include "treemart/error.hpp"

namespace treemart {

Complex eval_W(const TreeState& state, Complex z) {
  const auto u = state.external_profile();
  Complex acc = 0.0;
  for (std::size_t k = u.size(); k-- > 0;) acc = acc * z + u[k];
  return acc;
}

Complex eval_C(const ModelParams& params, std::int64_t n, Complex z) {
  if (n < 1) throw Error(Errc::domain_error, "C_n needs n >= 1");
  if (!(z.real() > 0.0) || std::abs(z - 1.0) > kProfileWindow) {
    throw Error(Errc::domain_error, "z outside the evaluation window |z - 1| <= 0.5");
  }
  const double m = params.m();
  Complex log_c = std::log(m * z);
  const Complex shift = params.beta() + m * z;
  for (std::int64_t j = 1; j < n; ++j) {
    const Complex factor = 1.0 + shift / alpha(params, j);
    if (!(factor.real() > 0.0)) {
      throw Error(Errc::domain_error, "normalizer factor crosses the branch cut");
    }
    log_c += std::log(factor);
  }
  return std::exp(log_c);
}

Complex eval_M(const TreeState& state, Complex z) {
  const Complex c = eval_C(state.params(), state.size(), z);
  if (std::abs(c) < 1e-300) {
    throw Error(Errc::degenerate_normalizer, "|C_n(z)| below 1e-300");
  }
  return eval_W(state, z) / c;
}

namespace {

// (log C_n)'(1) = 1 + sum_{j=2}^{n} m / alpha_j,  (log C_n)''(1) = -1 - sum_{j=2}^{n} (m / alpha_j)^2
NormalizerAtOne assemble(const ModelParams& params, std::int64_t n, double first, double second) {
  const double value = alpha(params, n);
  return NormalizerAtOne{value, value * first, value * (first * first + second)};
}

}  // namespace

NormalizerAtOne normalizer_at_one(const ModelParams& params, std::int64_t n) {
  if (n < 1) throw Error(Errc::domain_error, "C_n needs n >= 1");
  KahanSum first;
  KahanSum second;
  first.add(1.0);
  second.add(-1.0);
  for (std::int64_t j = 2; j <= n; ++j) {
    const double q = params.m() / alpha(params, j);
    first.add(q);
    second.add(-q * q);
  }
  return assemble(params, n, first.value(), second.value());
}

NormalizerTable::NormalizerTable(const ModelParams& params, std::int64_t max_n)
    : params_(params) {
  if (max_n < 1) throw Error(Errc::domain_error, "normalizer table needs max_n >= 1");
  const auto size = static_cast<std::size_t>(max_n) + 1;
  first_.assign(size, 0.0);
  second_.assign(size, 0.0);
  KahanSum first;
  KahanSum second;
  first.add(1.0);
  second.add(-1.0);
  first_[1] = first.value();
  second_[1] = second.value();
  for (std::int64_t j = 2; j <= max_n; ++j) {
    const double q = params.m() / alpha(params, j);
    first.add(q);
    second.add(-q * q);
    first_[static_cast<std::size_t>(j)] = first.value();
    second_[static_cast<std::size_t>(j)] = second.value();
  }
}

NormalizerAtOne NormalizerTable::at(std::int64_t n) const {
  if (n < 1 || n > max_n()) {
    throw Error(Errc::cap_exceeded, "normalizer table does not cover n = " + std::to_string(n));
  }
  const auto k = static_cast<std::size_t>(n);
  return assemble(params_, n, first_[k], second_[k]);
}

namespace {

DerivativeBundle bundle(const TreeState& state, const NormalizerAtOne& c) {
  const auto u = state.external_profile();
  double w = 0.0;
  double wp = 0.0;
  double wpp = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    const double kk = static_cast<double>(k);
    w += u[k];
    wp += kk * u[k];
    wpp += kk * (kk - 1.0) * u[k];
  }
  DerivativeBundle d{w, wp, wpp, c.value, c.first, c.second, 0.0, 0.0};
  const double cv = c.value;
  d.Mp1 = (wp * cv - c.first * w) / (cv * cv);
  d.Mpp1 = ((wpp * cv - c.second * w) * cv - 2.0 * c.first * (wp * cv - c.first * w)) /
           (cv * cv * cv);
  return d;
}

}  // namespace

DerivativeBundle derivatives_at_one(const TreeState& state) {
  return bundle(state, normalizer_at_one(state.params(), state.size()));
}

DerivativeBundle derivatives_at_one(const TreeState& state, const NormalizerTable& normalizer) {
  return bundle(state, normalizer.at(state.size()));
}

double conditional_increment_variance(const TreeState& state, const MomentTable& moments,
                                      const NormalizerTable& normalizer) {
  const auto& params = state.params();
  const std::int64_t n = state.size() + 1;
  const double s_prev = moments.martingale(n - 1, static_cast<double>(state.path_length()));
  const DerivativeBundle d = derivatives_at_one(state, normalizer);
  const double scale = params.growth() / alpha(params, n);
  return scale * scale * (moments.depth_var(n) + d.Mpp1 + s_prev - s_prev * s_prev);
}

}  // namespace treemart
