#include "treemart/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "treemart/error.hpp"
#include "treemart/profile_poly.hpp"
#include "treemart/tree_sim.hpp"

namespace treemart {

namespace {

void check_size(std::int64_t n, std::int64_t lo, std::int64_t hi) {
  if (n < lo) throw Error(Errc::domain_error, "oracle size below " + std::to_string(lo));
  if (n > hi) {
    throw Error(Errc::cap_exceeded,
                "oracle enumeration is capped at n = " + std::to_string(hi) + ", requested " +
                    std::to_string(n));
  }
}

struct Node {
  const TreeState& state;
  double probability;
};

// Depth-first walk over all labelled histories up to `size`; `visit` sees
// every tree of exactly that size together with its history probability.
template <class Visit>
void walk(const TreeState& state, double probability, std::int64_t size, Visit&& visit) {
  if (state.size() == size) {
    visit(Node{state, probability});
    return;
  }
  const double total = alpha(state.params(), state.size());
  for (std::size_t v = 0; v < static_cast<std::size_t>(state.size()); ++v) {
    const double w = state.node_weight(v);
    if (w <= 0.0) continue;
    TreeState child = state;
    child.insert_under(v);
    walk(child, probability * w / total, size, visit);
  }
}

template <class Visit>
void for_each_tree(const ModelParams& params, std::int64_t size, Visit&& visit) {
  walk(TreeState(params), 1.0, size, visit);
}

// Calls visit(child, w / alpha) for each one-step extension of `state`.
template <class Visit>
void for_each_child(const TreeState& state, Visit&& visit) {
  const double total = alpha(state.params(), state.size());
  for (std::size_t v = 0; v < static_cast<std::size_t>(state.size()); ++v) {
    const double w = state.node_weight(v);
    if (w <= 0.0) continue;
    TreeState child = state;
    child.insert_under(v);
    visit(child, w / total);
  }
}

Pmf to_pmf(const std::map<double, double>& law) {
  Pmf pmf;
  for (const auto& [value, p] : law) {
    pmf.support.push_back(value);
    pmf.probs.push_back(p);
  }
  return pmf;
}

std::vector<double> trimmed_profile(std::span<const double> u, std::size_t from) {
  std::vector<double> out(u.begin() + static_cast<std::ptrdiff_t>(std::min(from, u.size())),
                          u.end());
  while (!out.empty() && out.back() == 0.0) out.pop_back();
  return out;
}

}  // namespace

std::vector<History> enumerate_histories(const ModelParams& params, std::int64_t n) {
  check_size(n, 1, kOracleCap);
  const MomentTable table(params, n);
  std::vector<History> out;
  // Path lengths along the history give S_1..S_n.
  std::vector<std::int64_t> paths;
  std::vector<std::uint32_t> depths;
  std::vector<std::uint32_t> choices;

  auto record = [&](const TreeState& state, double probability) {
    History h;
    h.parent_choices = choices;
    h.probability = probability;
    h.terminal.path_length = state.path_length();
    h.terminal.depths = depths;
    h.terminal.internal_profile.assign(state.internal_profile().begin(),
                                       state.internal_profile().end());
    h.terminal.external_profile.assign(state.external_profile().begin(),
                                       state.external_profile().end());
    for (std::size_t k = 0; k < paths.size(); ++k) {
      h.terminal.martingale.push_back(
          table.martingale(static_cast<std::int64_t>(k) + 1, static_cast<double>(paths[k])));
    }
    out.push_back(std::move(h));
  };

  auto recurse = [&](auto&& self, const TreeState& state, double probability) -> void {
    paths.push_back(state.path_length());
    depths.push_back(state.last_depth());
    if (state.size() == n) {
      record(state, probability);
    } else {
      const double total = alpha(params, state.size());
      for (std::size_t v = 0; v < static_cast<std::size_t>(state.size()); ++v) {
        const double w = state.node_weight(v);
        if (w <= 0.0) continue;
        TreeState child = state;
        child.insert_under(v);
        choices.push_back(static_cast<std::uint32_t>(v));
        self(self, child, probability * w / total);
        choices.pop_back();
      }
    }
    paths.pop_back();
    depths.pop_back();
  };
  recurse(recurse, TreeState(params), 1.0);
  return out;
}

Pmf exact_distribution(const ModelParams& params, std::int64_t n, Statistic statistic) {
  check_size(n, 1, kOracleCap);
  if (statistic == Statistic::profile_vector) {
    throw Error(Errc::usage, "profile_vector is vector-valued; use exact_profile_law");
  }
  std::map<double, double> law;
  for_each_tree(params, n, [&](const Node& node) {
    const double value = statistic == Statistic::path_length
                             ? static_cast<double>(node.state.path_length())
                             : static_cast<double>(node.state.last_depth());
    law[value] += node.probability;
  });
  return to_pmf(law);
}

ProfileLaw exact_profile_law(const ModelParams& params, std::int64_t n) {
  check_size(n, 1, kOracleCap);
  std::map<std::vector<double>, double> law;
  for_each_tree(params, n, [&](const Node& node) {
    law[trimmed_profile(node.state.external_profile(), 1)] += node.probability;
  });
  ProfileLaw out;
  for (auto& [outcome, p] : law) {
    out.outcomes.push_back(outcome);
    out.probs.push_back(p);
  }
  return out;
}

double check_martingale_property(const ModelParams& params, std::int64_t n) {
  check_size(n, 2, kOracleCap - 1);
  const MomentTable table(params, n);
  double worst = 0.0;
  for_each_tree(params, n - 1, [&](const Node& node) {
    const double s_prev = table.martingale(n - 1, static_cast<double>(node.state.path_length()));
    double expected = 0.0;
    for_each_child(node.state, [&](const TreeState& child, double p) {
      expected += p * table.martingale(n, static_cast<double>(child.path_length()));
    });
    worst = std::max(worst, std::abs(expected - s_prev));
  });
  return worst;
}

double check_depth_bernoulli_law(const ModelParams& params, std::int64_t n) {
  check_size(n, 1, kOracleCap);
  return total_variation(exact_distribution(params, n, Statistic::depth_of_last),
                         depth_pmf(params, n));
}

double check_conditional_variance_identity(const ModelParams& params, std::int64_t n) {
  check_size(n, 2, kOracleCap - 1);
  const MomentTable moments(params, n);
  const NormalizerTable normalizer(params, n);
  const double scale = alpha(params, n) / params.growth();
  double worst = 0.0;
  for_each_tree(params, n - 1, [&](const Node& node) {
    const double s_prev = moments.martingale(n - 1, static_cast<double>(node.state.path_length()));
    double lhs = 0.0;
    for_each_child(node.state, [&](const TreeState& child, double p) {
      const double x = moments.martingale(n, static_cast<double>(child.path_length())) - s_prev;
      lhs += p * x * x;
    });
    lhs *= scale * scale;
    const DerivativeBundle d = derivatives_at_one(node.state, normalizer);
    const double rhs = moments.depth_var(n) + d.Mpp1 + s_prev - s_prev * s_prev;
    worst = std::max(worst, std::abs(lhs - rhs));
  });
  return worst;
}

double check_profile_recursion(const ModelParams& params, std::int64_t n, double z) {
  check_size(n, 2, kOracleCap - 1);
  const double a_prev = alpha(params, n - 1);
  const double factor = (a_prev + params.beta() + params.m() * z) / a_prev;
  double worst = 0.0;
  for_each_tree(params, n - 1, [&](const Node& node) {
    double expected = 0.0;
    for_each_child(node.state, [&](const TreeState& child, double p) {
      expected += p * eval_W(child, z).real();
    });
    worst = std::max(worst, std::abs(expected - factor * eval_W(node.state, z).real()));
  });
  return worst;
}

AncestorLaw ancestor_joint_law(const ModelParams& params, std::int64_t n, std::int64_t i,
                               std::int64_t j) {
  check_size(n, 2, kOracleCap);
  if (!(1 <= i && i < j && j < n)) throw Error(Errc::domain_error, "need 1 <= i < j < n");
  AncestorLaw law;
  for_each_tree(params, n, [&](const Node& node) {
    const auto parents = node.state.parents();
    bool has_i = false;
    bool has_j = false;
    for (auto v = static_cast<std::uint32_t>(n - 1); v != TreeState::kNoParent; v = parents[v]) {
      if (v == static_cast<std::uint32_t>(i - 1)) has_i = true;
      if (v == static_cast<std::uint32_t>(j - 1)) has_j = true;
    }
    (has_i ? (has_j ? law.both : law.only_i) : (has_j ? law.only_j : law.neither)) +=
        node.probability;
  });
  return law;
}

}  // namespace treemart
