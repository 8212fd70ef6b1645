#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "treemart/ctbrw.hpp"
#include "treemart/error.hpp"
#include "treemart/tree_sim.hpp"

using namespace treemart;

namespace {

std::vector<ModelParams> models() {
  return {presets::bst(), presets::rt(), presets::port(), make_params(0.5, 1), presets::mary(3)};
}

// Recomputes every derived field of a state from its parent array.
void check_consistent(const TreeState& s) {
  const auto& p = s.params();
  const auto n = static_cast<std::size_t>(s.size());
  std::vector<std::uint32_t> depth(n, 0);
  std::vector<std::uint32_t> outdeg(n, 0);
  std::int64_t path = 0;
  for (std::size_t v = 1; v < n; ++v) {
    const auto parent = s.parents()[v];
    REQUIRE(parent < v);
    depth[v] = depth[parent] + 1;
    ++outdeg[parent];
    path += depth[v];
  }
  CHECK(s.path_length() == path);
  double weight = 0.0;
  std::vector<std::int64_t> internal(s.internal_profile().size(), 0);
  for (std::size_t v = 0; v < n; ++v) {
    CHECK(s.depths()[v] == depth[v]);
    CHECK(s.outdegrees()[v] == outdeg[v]);
    if (p.beta() < 0) CHECK(outdeg[v] <= static_cast<std::uint32_t>(p.m()));
    const double w = p.beta() * outdeg[v] + p.m();
    CHECK(s.node_weight(v) == doctest::Approx(w));
    weight += w;
    REQUIRE(depth[v] < internal.size());
    ++internal[depth[v]];
  }
  CHECK(weight == doctest::Approx(alpha(p, s.size())));
  CHECK(s.total_weight() == doctest::Approx(alpha(p, s.size())));
  for (std::size_t k = 0; k < internal.size(); ++k) CHECK(s.internal_profile()[k] == internal[k]);
  const auto u = s.external_profile();
  CHECK(u[0] == 0.0);
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    const double x_k = k < internal.size() ? internal[k] : 0.0;
    const double x_km1 = k - 1 < internal.size() ? internal[k - 1] : 0.0;
    CHECK(u[k] == doctest::Approx(p.beta() * x_k + p.m() * x_km1));
    mass += u[k];
    moment += k * u[k];
  }
  CHECK(mass == doctest::Approx(alpha(p, s.size())));
  CHECK(s.external_path_length() == doctest::Approx(moment));
  CHECK(moment == doctest::Approx(p.growth() * path + p.m() * static_cast<double>(n)));
}

}  // namespace

TEST_SUITE("tree_sim") {
  TEST_CASE("initial state") {
    for (const auto& p : models()) {
      const TreeState s(p);
      CHECK(s.size() == 1);
      CHECK(s.path_length() == 0);
      CHECK(s.parents()[0] == TreeState::kNoParent);
      CHECK(s.total_weight() == doctest::Approx(alpha(p, 1)));
      check_consistent(s);
    }
  }

  TEST_CASE("random growth keeps every derived field consistent") {
    for (const auto& p : models()) {
      Rng rng = make_rng({3, 0});
      TreeState s(p);
      for (int i = 0; i < 600; ++i) {
        const auto d = insert_step(s, rng);
        CHECK(d == s.last_depth());
        if (i % 97 == 0) check_consistent(s);
      }
      check_consistent(s);
    }
  }

  TEST_CASE("saturated parents are rejected") {
    TreeState s(presets::bst());
    s.insert_under(0);
    s.insert_under(0);
    CHECK_THROWS_AS(s.insert_under(0), Error);
    try {
      s.insert_under(0);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::saturation_violation);
    }
    CHECK(s.size() == 3);
    check_consistent(s);
  }

  TEST_CASE("parent sampling follows the attachment weights") {
    TreeState s(presets::port());
    s.insert_under(0);
    s.insert_under(0);
    s.insert_under(1);  // weights 3, 2, 1, 1 out of 7
    Rng rng = make_rng({5, 0});
    std::vector<double> counts(4, 0.0);
    constexpr int kDraws = 70000;
    for (int i = 0; i < kDraws; ++i) counts[s.sample_parent(rng)] += 1;
    const std::vector<double> w{3, 2, 1, 1};
    double chi2 = 0.0;
    for (int v = 0; v < 4; ++v) {
      const double e = kDraws * w[v] / 7.0;
      chi2 += (counts[v] - e) * (counts[v] - e) / e;
    }
    CHECK(chi_square_sf(chi2, 3) > 1e-3);
  }

  TEST_CASE("trajectories are reproducible per replica seed") {
    const auto a = grow(presets::rt(), 2000, {9, 4});
    const auto b = grow(presets::rt(), 2000, {9, 4});
    const auto c = grow(presets::rt(), 2000, {9, 5});
    REQUIRE(a.records.size() == 2000);
    bool differs = false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].path == b.records[i].path);
      CHECK(a.records[i].martingale == b.records[i].martingale);
      differs = differs || a.records[i].path != c.records[i].path;
    }
    CHECK(differs);
  }

  TEST_CASE("size one trajectory") {
    const auto t = grow(presets::rt(), 1, {7, 0});
    REQUIRE(t.records.size() == 1);
    CHECK(t.records[0].martingale == 0.0);
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    CHECK(csv.str() == "n,D,P,S,X\n1,0,0,0,0\n");
  }

  TEST_CASE("martingale matches its definition and the increment formula") {
    for (const auto& p : models()) {
      const MomentTable table(p, 5000);
      const auto t = grow(table, 5000, {1, 2});
      for (const auto& r : t.records) {
        CHECK(r.martingale == doctest::Approx(table.martingale(r.n, r.path)).epsilon(1e-12));
      }
      CHECK(max_increment_residual(t, table) < 1e-9);
    }
  }

  TEST_CASE("checkpoint recording") {
    GrowOptions options;
    options.mode = RecordMode::checkpoints;
    options.checkpoints = {10, 100, 1000};
    const auto t = grow(presets::port(), 1500, {1, 0}, options);
    REQUIRE(t.records.size() == 4);
    CHECK(t.find(100) != nullptr);
    CHECK(t.find(1500) != nullptr);
    CHECK(t.find(50) == nullptr);
    const auto full = grow(presets::port(), 1500, {1, 0});
    CHECK(t.find(1000)->martingale == full.find(1000)->martingale);
  }

  TEST_CASE("size limit") {
    GrowOptions options;
    options.max_size = 100;
    CHECK_THROWS_AS(grow(presets::rt(), 101, {1, 0}, options), Error);
  }

  TEST_CASE("martingale has mean zero and the exact variance") {
    constexpr int kTrees = 4000;
    constexpr int kSize = 300;
    for (const auto& p : {presets::bst(), presets::rt(), presets::port()}) {
      const MomentTable table(p, kSize);
      double sum = 0.0;
      double sum2 = 0.0;
      double depth_sum = 0.0;
      for (int r = 0; r < kTrees; ++r) {
        Growth g(table, {21, static_cast<std::uint64_t>(r)});
        while (g.size() < kSize) g.step();
        sum += g.martingale();
        sum2 += g.martingale() * g.martingale();
        depth_sum += g.state().last_depth();
      }
      const double var = table.martingale_var(kSize);
      const double mean = sum / kTrees;
      CHECK(std::abs(mean) < 4 * std::sqrt(var / kTrees));
      // Sample variance of a roughly normal sample: relative SE sqrt(2/kTrees).
      CHECK(std::abs(sum2 / kTrees / var - 1) < 4 * std::sqrt(2.0 / kTrees) + 0.02);
      const double dv = table.depth_var(kSize);
      CHECK(std::abs(depth_sum / kTrees - table.depth_mean(kSize)) < 4 * std::sqrt(dv / kTrees));
    }
  }
}
