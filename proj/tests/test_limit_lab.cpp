#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "treemart/error.hpp"
#include "treemart/limit_lab.hpp"
#include "treemart/parallel.hpp"

using namespace treemart;

namespace {

ExperimentConfig small_config(const ModelParams& p) {
  ExperimentConfig c;
  c.model = p;
  c.n = 50;
  c.horizon = 60'000;
  c.replicas = 40;
  c.master_seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("limit_lab") {
  TEST_CASE("normal absolute moments") {
    CHECK(normal_abs_moment(2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normal_abs_moment(4) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(normal_abs_moment(6) == doctest::Approx(15.0).epsilon(1e-14));
    CHECK(normal_abs_moment(3) == doctest::Approx(2 * std::sqrt(2 / std::numbers::pi)));
    CHECK(normal_abs_moment(1) == doctest::Approx(std::sqrt(2 / std::numbers::pi)));
  }

  TEST_CASE("Kolmogorov-Smirnov statistic and p-value") {
    CHECK(ks_statistic(std::vector<double>{0.5}, [](double x) { return x; }) ==
          doctest::Approx(0.5));
    const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
    CHECK(ks_statistic(grid, [](double x) { return x; }) == doctest::Approx(0.1));
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, std_normal_cdf), Error);
    // Large-sample critical values of the Kolmogorov distribution.
    const std::int64_t big = 1'000'000;
    CHECK(ks_p_value(1.3581 / std::sqrt(double(big)), big) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(ks_p_value(1.6276 / std::sqrt(double(big)), big) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(ks_p_value(0.0, 100) == 1.0);
    CHECK(ks_p_value(0.5, 1000) < 1e-100);
    double previous = 1.0;
    for (double d = 0.01; d < 0.3; d += 0.01) {
      const double q = ks_p_value(d, 200);
      CHECK(q <= previous);
      previous = q;
    }
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std_normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  }

  TEST_CASE("proxy guard") {
    CHECK(proxy_inflation(2000, 400'000) == doctest::Approx(0.0084853).epsilon(1e-4));
    ExperimentConfig c;
    c.horizon = 200'000;
    CHECK_THROWS_AS(validate_proxy(c), Error);
    c.horizon = 400'000;
    CHECK_NOTHROW(validate_proxy(c));
    c.n = 1;
    CHECK_THROWS_AS(validate_proxy(c), Error);
  }

  TEST_CASE("prefactors") {
    CHECK(clt_prefactor(presets::rt(), 100) == doctest::Approx(std::sqrt(100 / std::log(100.0))));
    CHECK(clt_prefactor(presets::bst(), 100) ==
          doctest::Approx(std::sqrt(0.5 * 100 / std::log(100.0))));
    const double ln = std::log(1000.0);
    CHECK(lil_prefactor(presets::port(), 1000) ==
          doctest::Approx(std::sqrt(1000 / (ln * std::log(ln)))));
  }

  TEST_CASE("samples do not depend on the thread count") {
    auto c = small_config(presets::rt());
    c.threads = 1;
    const auto one = clt_sample(c);
    c.threads = 3;
    const auto three = clt_sample(c);
    CHECK(one == three);
    CHECK(one.size() == 40);
  }

  TEST_CASE("tail gap has the exact truncated variance") {
    auto c = small_config(presets::port());
    c.replicas = 600;
    const MomentTable table(c.model, c.horizon);
    const auto gaps = martingale_tail_gaps(c, table);
    const double s2 = s_squared(table, c.n + 1, c.horizon).truncated;
    double sum = 0.0;
    double sum2 = 0.0;
    for (double g : gaps) {
      sum += g;
      sum2 += g * g;
    }
    const double k = static_cast<double>(gaps.size());
    CHECK(std::abs(sum / k) < 4 * std::sqrt(s2 / k));
    CHECK(std::abs(sum2 / k / s2 - 1) < 0.2);
  }

  TEST_CASE("moment estimates") {
    const std::vector<double> z{-2, -1, 0, 1, 2};
    const auto e = moment_estimate(z, 2, presets::rt());
    CHECK(e.value == doctest::Approx(2.0));
    CHECK(e.target == doctest::Approx(1.0));
    CHECK_FALSE(e.exploratory);
    CHECK(moment_estimate(z, 4, make_params(0.5, 1)).exploratory);
    CHECK_THROWS_AS(moment_estimate(small_config(presets::rt()), 5), Error);
  }

  TEST_CASE("lil checkpoints are validated") {
    auto c = small_config(presets::rt());
    c.replicas = 3;
    c.checkpoints = {10, 100};
    CHECK_THROWS_AS(lil_trajectory(c), Error);  // 10 < e^e
    c.checkpoints = {20, 700};
    CHECK_THROWS_AS(lil_trajectory(c), Error);  // 700 > N/100
    c.checkpoints = {16, 20, 200, 600};
    const auto r = lil_trajectory(c);
    REQUIRE(r.replicas.size() == 3);
    for (const auto& rep : r.replicas) {
      for (std::size_t k = 1; k < rep.running_max.size(); ++k) {
        CHECK(rep.running_max[k] >= rep.running_max[k - 1]);
        CHECK(rep.running_min[k] <= rep.running_min[k - 1]);
      }
      CHECK(rep.running_max.back() >= rep.running_min.back());
    }
    CHECK(r.extreme_max() >= r.pooled_max());
    CHECK(r.extreme_min() <= r.pooled_min());
  }

  TEST_CASE("condition diagnostics") {
    ExperimentConfig c;
    c.model = presets::rt();
    c.n = 100;
    c.horizon = 5000;
    c.replicas = 30;
    c.master_seed = 5;
    c.checkpoints = {100, 1000, 5000};
    const auto r = condition_diagnostics(c);
    CHECK(r.l4_ratio.size() == 30);
    CHECK(r.l4_mean() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(r.s2_exact == doctest::Approx(s_squared(c.model, 100, 5000).truncated));
    REQUIRE(r.c1_sum.size() == 3);
    CHECK(r.c1_sum[0] >= r.c1_sum[1]);
    CHECK(r.c1_sum[1] >= r.c1_sum[2]);
    REQUIRE(r.l2_partial_sum.size() == 3);
    CHECK(r.l2_partial_sum[0] <= r.l2_partial_sum[2]);
    CHECK(r.mpp_sizes == std::vector<std::int64_t>{1000});
    CHECK(r.mpp_gap.size() == 1);
    // E S_k^4 stays bounded along the path.
    for (double m4 : r.p1_moment4) CHECK(m4 < 1.0);
  }

  TEST_CASE("depth tail experiment respects the bound") {
    const std::vector<double> ts{1, 2, 4, 6};
    const auto rows = depth_tail_experiment(presets::rt(), 100, 5000, 1, ts);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
      CHECK(row.empirical <= row.bound + 3 * row.standard_error);
      CHECK(row.empirical >= 0.0);
    }
    CHECK(rows[0].empirical >= rows[3].empirical);
  }

  TEST_CASE("reports") {
    auto c = small_config(presets::mary(3));
    c.replicas = 5;
    const auto z = clt_sample(c);
    const auto j = clt_report(c, z);
    CHECK(j["config"]["model"] == "mary:3");
    CHECK(j["summary"].contains("ks_distance"));
    CHECK_FALSE(j.contains("metadata"));
    CHECK(report_stem("clt", c) == "clt_mary-3_n50_N60000_seed3");
    c.model = make_params(0.5, 1);
    CHECK(report_stem("lil", c) == "lil_custom-0.5_1_n50_N60000_seed3");
    const auto m = moments_report(c, z);
    CHECK(m["summary"]["moments"].size() == 4);
  }

  TEST_CASE("thread resolution") {
    CHECK(resolve_threads(3u) == 3);
    CHECK(resolve_threads() >= 1);
  }
}
