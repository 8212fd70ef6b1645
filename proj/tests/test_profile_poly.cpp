#include <cmath>
#include <vector>

#include "doctest.h"
#include "treemart/error.hpp"
#include "treemart/profile_poly.hpp"

using namespace treemart;

namespace {

std::vector<ModelParams> models() {
  return {presets::bst(), presets::rt(), presets::port(), make_params(0.5, 1), presets::mary(3)};
}

Complex product_form(const ModelParams& p, int n, Complex z) {
  Complex c = static_cast<double>(p.m()) * z;
  for (int j = 1; j < n; ++j) c *= (alpha(p, j) + p.beta() + static_cast<double>(p.m()) * z) / alpha(p, j);
  return c;
}

TreeState grown(const ModelParams& p, int n, std::uint64_t seed) {
  Rng rng = make_rng({seed, 0});
  TreeState s(p);
  while (s.size() < n) insert_step(s, rng);
  return s;
}

}  // namespace

TEST_SUITE("profile_poly") {
  TEST_CASE("normalizer matches the product form") {
    for (const auto& p : models()) {
      for (int n : {1, 2, 9, 200}) {
        for (Complex z : {Complex{1, 0}, Complex{0.8, 0}, Complex{1.3, 0.2}, Complex{1, -0.4}}) {
          const Complex a = eval_C(p, n, z);
          const Complex b = product_form(p, n, z);
          CHECK(std::abs(a - b) <= 1e-11 * std::abs(b));
        }
        CHECK(eval_C(p, n, {1, 0}).real() == doctest::Approx(alpha(p, n)));
      }
    }
    CHECK_THROWS_AS(eval_C(presets::rt(), 5, {1.6, 0}), Error);
    CHECK_THROWS_AS(eval_C(presets::rt(), 5, {1, 0.51}), Error);
  }

  TEST_CASE("normalizer derivatives match finite differences") {
    for (const auto& p : models()) {
      const NormalizerTable table(p, 500);
      for (int n : {1, 2, 10, 500}) {
        const auto d = normalizer_at_one(p, n);
        const double h = 1e-4;
        const double f0 = eval_C(p, n, {1, 0}).real();
        const double fp = eval_C(p, n, {1 + h, 0}).real();
        const double fm = eval_C(p, n, {1 - h, 0}).real();
        CHECK(d.value == doctest::Approx(f0).epsilon(1e-12));
        CHECK(d.first == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
        CHECK(d.second == doctest::Approx((fp - 2 * f0 + fm) / (h * h)).epsilon(1e-4));
        const auto t = table.at(n);
        CHECK(t.value == doctest::Approx(d.value).epsilon(1e-13));
        CHECK(t.first == doctest::Approx(d.first).epsilon(1e-12));
        CHECK(t.second == doctest::Approx(d.second).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("profile polynomial at one") {
    for (const auto& p : models()) {
      const TreeState s = grown(p, 3000, 4);
      const MomentTable moments(p, 3000);
      const auto d = derivatives_at_one(s);
      CHECK(d.W1 == doctest::Approx(alpha(p, s.size())).epsilon(1e-14));
      CHECK(d.Wp1 == doctest::Approx(p.growth() * s.path_length() + p.m() * 3000.0));
      CHECK(eval_W(s, {1, 0}).real() == doctest::Approx(alpha(p, s.size())));
      CHECK(std::abs(eval_M(s, {1, 0}) - 1.0) < 1e-12);
      CHECK(d.Mp1 == doctest::Approx(moments.martingale(3000, s.path_length())).epsilon(1e-9));

      const double h = 1e-3;
      const double m0 = eval_M(s, {1, 0}).real();
      const double mp = eval_M(s, {1 + h, 0}).real();
      const double mm = eval_M(s, {1 - h, 0}).real();
      CHECK(d.Mp1 == doctest::Approx((mp - mm) / (2 * h)).epsilon(1e-4));
      CHECK(d.Mpp1 == doctest::Approx((mp - 2 * m0 + mm) / (h * h)).epsilon(1e-3));

      const NormalizerTable table(p, 3000);
      const auto e = derivatives_at_one(s, table);
      CHECK(e.Mpp1 == doctest::Approx(d.Mpp1).epsilon(1e-10));
    }
  }

  TEST_CASE("conditional increment variance equals the direct average") {
    for (const auto& p : models()) {
      const int n = 800;
      const MomentTable moments(p, n + 1);
      const NormalizerTable normalizer(p, n + 1);
      const TreeState s = grown(p, n, 8);
      const double s_prev = moments.martingale(n, s.path_length());
      const double ed = moments.depth_mean(n + 1);
      const auto u = s.external_profile();
      double direct = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double dev = static_cast<double>(k) - ed - s_prev;
        direct += u[k] / alpha(p, n) * dev * dev;
      }
      const double scale = p.growth() / alpha(p, n + 1);
      direct *= scale * scale;
      CHECK(conditional_increment_variance(s, moments, normalizer) ==
            doctest::Approx(direct).epsilon(1e-9));
    }
  }

  TEST_CASE("normalized profile has unit mean") {
    constexpr int kTrees = 3000;
    for (const auto& p : {presets::bst(), presets::rt(), presets::port()}) {
      for (Complex z : {Complex{1.1, 0}, Complex{0.9, 0.1}}) {
        Complex sum = 0.0;
        double sum2 = 0.0;
        for (int r = 0; r < kTrees; ++r) {
          const Complex m = eval_M(grown(p, 200, 1000 + r), z);
          sum += m;
          sum2 += std::norm(m - 1.0);
        }
        const Complex mean = sum / static_cast<double>(kTrees);
        const double se = std::sqrt(sum2 / kTrees / kTrees);
        CHECK(std::abs(mean - 1.0) < 4 * se + 1e-3);
      }
    }
  }
}
