#include "treemart/model.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "treemart/error.hpp"

namespace treemart {

namespace {

std::string shortest_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(Errc::usage, "cannot parse " + std::string(what) + " from '" +
                                 std::string(text) + "'");
  }
  return value;
}

// Above this the asymptotic series below are accurate to ~1e-16.
constexpr double kAsymptoticThreshold = 10.0;

}  // namespace

bool ModelParams::integer_beta() const noexcept {
  return std::floor(beta_) == beta_;
}

std::string ModelParams::tag() const {
  if (beta_ == -1.0) return m_ == 2 ? "bst" : "mary:" + std::to_string(m_);
  if (beta_ == 0.0) return "rt";
  if (beta_ == 1.0) return "port";
  if (integer_beta()) return "p-oriented:" + shortest_real(beta_);
  return "custom:" + shortest_real(beta_) + "," + std::to_string(m_);
}

ModelParams make_params(double beta, int m) {
  const bool linear = std::isfinite(beta) && beta >= 0.0 && m == 1;
  const bool mary = beta == -1.0 && m >= 2;
  if (!linear && !mary) {
    throw Error(Errc::invalid_combination,
                "invalid model (beta=" + shortest_real(beta) + ", m=" + std::to_string(m) +
                    "): need beta >= 0 with m = 1, or beta = -1 with m >= 2");
  }
  return ModelParams(beta, m);
}

namespace presets {
ModelParams bst() { return make_params(-1.0, 2); }
ModelParams rt() { return make_params(0.0, 1); }
ModelParams port() { return make_params(1.0, 1); }
ModelParams p_oriented(int p) { return make_params(static_cast<double>(p), 1); }
ModelParams mary(int m) { return make_params(-1.0, m); }
}  // namespace presets

ModelParams parse_model(std::string_view selector) {
  if (selector == "bst") return presets::bst();
  if (selector == "rt") return presets::rt();
  if (selector == "port") return presets::port();
  const auto colon = selector.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = selector.substr(0, colon);
    const auto rest = selector.substr(colon + 1);
    if (kind == "p-oriented") return presets::p_oriented(parse_number<int>(rest, "p"));
    if (kind == "mary") return presets::mary(parse_number<int>(rest, "m"));
    if (kind == "custom") {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos) {
        throw Error(Errc::usage, "custom model needs custom:<beta>,<m>");
      }
      return make_params(parse_number<double>(rest.substr(0, comma), "beta"),
                         parse_number<int>(rest.substr(comma + 1), "m"));
    }
  }
  throw Error(Errc::usage, "unknown model selector '" + std::string(selector) + "'");
}

double alpha(const ModelParams& params, std::int64_t n) {
  if (n <= 0) return 1.0;
  return params.growth() * static_cast<double>(n) - params.beta();
}

double attachment_weight(const ModelParams& params, std::int64_t outdegree) {
  if (outdegree < 0) throw Error(Errc::domain_error, "negative outdegree");
  if (params.beta() == -1.0 && outdegree > params.m()) {
    throw Error(Errc::saturation_violation,
                "outdegree " + std::to_string(outdegree) + " exceeds m = " +
                    std::to_string(params.m()));
  }
  return params.beta() * static_cast<double>(outdegree) + params.m();
}

double digamma(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain_error, "digamma requires x > 0");
  double result = 0.0;
  while (x < kAsymptoticThreshold) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // log x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
  const double r = 1.0 / (x * x);
  const double tail =
      r * (1.0 / 12 -
           r * (1.0 / 120 -
                r * (1.0 / 252 -
                     r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
  return result + std::log(x) - 0.5 / x - tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw Error(Errc::domain_error, "trigamma requires x > 0");
  double result = 0.0;
  while (x < kAsymptoticThreshold) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  // 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}
  const double r = 1.0 / (x * x);
  const double series =
      1.0 / 6 -
      r * (1.0 / 30 -
           r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * 7.0 / 6)))));
  return result + 1.0 / x + 0.5 * r + series * r / x;
}

}  // namespace treemart
