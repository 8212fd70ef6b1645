#include <cmath>
#include <numbers>

#include "doctest.h"
#include "treemart/error.hpp"
#include "treemart/model.hpp"

using namespace treemart;

namespace {

constexpr double kEuler = 0.57721566490153286061;

// psi(x) = -gamma + sum_{k>=0} (1/(k+1) - 1/(k+x)), summed directly with an
// Euler-Maclaurin tail.
double digamma_series(double x) {
  constexpr int kTerms = 200000;
  double s = -kEuler;
  for (int k = 0; k < kTerms; ++k) s += 1.0 / (k + 1) - 1.0 / (k + x);
  const double a = kTerms + 1.0;
  const double b = kTerms + x;
  s += std::log(b / a) - 0.5 / b + 0.5 / a;
  return s;
}

double trigamma_series(double x) {
  constexpr int kTerms = 200000;
  double s = 0.0;
  for (int k = 0; k < kTerms; ++k) s += 1.0 / ((k + x) * (k + x));
  const double b = kTerms + x;
  return s + 1.0 / b + 0.5 / (b * b) + 1.0 / (6.0 * b * b * b);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("valid and invalid parameter combinations") {
    CHECK_NOTHROW(make_params(0.0, 1));
    CHECK_NOTHROW(make_params(2.5, 1));
    CHECK_NOTHROW(make_params(-1.0, 2));
    CHECK_NOTHROW(make_params(-1.0, 7));
    for (auto [beta, m] : {std::pair{-1.0, 1}, {0.0, 2}, {-0.5, 1}, {1.0, 3}, {-2.0, 3}}) {
      try {
        make_params(beta, m);
        FAIL("accepted beta=" << beta << " m=" << m);
      } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_combination);
      }
    }
  }

  TEST_CASE("presets and selectors") {
    CHECK(presets::bst() == make_params(-1, 2));
    CHECK(presets::rt() == make_params(0, 1));
    CHECK(presets::port() == make_params(1, 1));
    CHECK(parse_model("bst") == presets::bst());
    CHECK(parse_model("mary:3") == make_params(-1, 3));
    CHECK(parse_model("custom:0.5,1") == make_params(0.5, 1));
    CHECK(parse_model("p-oriented:3").m() == 1);
    CHECK_THROWS_AS(parse_model("avl"), Error);
    CHECK_THROWS_AS(parse_model("mary:x"), Error);
    CHECK_THROWS_AS(parse_model("custom:1"), Error);
    for (const auto& p : {presets::bst(), presets::rt(), presets::port(), presets::mary(4),
                          make_params(0.5, 1)}) {
      CHECK(parse_model(p.tag()) == p);
    }
  }

  TEST_CASE("theta and alpha") {
    CHECK(presets::bst().theta() == doctest::Approx(2.0));
    CHECK(presets::rt().theta() == doctest::Approx(1.0));
    CHECK(presets::port().theta() == doctest::Approx(0.5));
    const auto p = presets::port();
    CHECK(alpha(p, 0) == 1.0);
    CHECK(alpha(p, 1) == 1.0);
    CHECK(alpha(p, 5) == 9.0);
    CHECK(alpha(presets::bst(), 4) == 5.0);
    CHECK(alpha(presets::mary(3), 4) == 9.0);
  }

  TEST_CASE("attachment weight saturates for m-ary trees") {
    const auto t = presets::mary(3);
    CHECK(attachment_weight(t, 0) == 3.0);
    CHECK(attachment_weight(t, 3) == 0.0);
    CHECK_THROWS_AS(attachment_weight(t, 4), Error);
    CHECK(attachment_weight(presets::port(), 10) == 11.0);
  }

  TEST_CASE("digamma against closed forms and the defining series") {
    const double pi = std::numbers::pi;
    CHECK(digamma(1.0) == doctest::Approx(-kEuler).epsilon(1e-14));
    CHECK(digamma(0.5) == doctest::Approx(-kEuler - 2 * std::log(2.0)).epsilon(1e-14));
    CHECK(digamma(1.0 / 3) ==
          doctest::Approx(-kEuler - pi / (2 * std::sqrt(3.0)) - 1.5 * std::log(3.0)).epsilon(1e-13));
    CHECK(digamma(2.0 / 3) ==
          doctest::Approx(-kEuler + pi / (2 * std::sqrt(3.0)) - 1.5 * std::log(3.0)).epsilon(1e-13));
    for (double x : {0.05, 0.25, 0.75, 1.5, 3.7, 12.0, 150.0}) {
      CHECK(digamma(x) == doctest::Approx(digamma_series(x)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(digamma(0.0), Error);
    CHECK_THROWS_AS(digamma(-1.5), Error);
  }

  TEST_CASE("trigamma against closed forms and partial sums") {
    const double pi = std::numbers::pi;
    CHECK(trigamma(1.0) == doctest::Approx(pi * pi / 6).epsilon(1e-14));
    CHECK(trigamma(0.5) == doctest::Approx(pi * pi / 2).epsilon(1e-14));
    for (double x : {0.05, 0.25, 0.75, 2.0 / 3, 1.5, 9.9, 40.0}) {
      CHECK(trigamma(x) == doctest::Approx(trigamma_series(x)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(trigamma(0.0), Error);
  }

  TEST_CASE("recurrences hold across the shift threshold") {
    for (double x = 0.3; x < 25.0; x += 0.7) {
      CHECK(digamma(x + 1) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
      CHECK(trigamma(x) - trigamma(x + 1) == doctest::Approx(1.0 / (x * x)).epsilon(1e-12));
    }
  }
}
