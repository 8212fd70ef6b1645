#include "treemart/tree_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "treemart/error.hpp"
#include "treemart/format.hpp"

namespace treemart {

TreeState::TreeState(const ModelParams& params)
    : params_(params),
      parent_{kNoParent},
      depth_{0},
      outdegree_{0},
      internal_{1},
      external_{0.0, static_cast<double>(params.m())},
      external_path_length_(params.m()) {
  weights_.push_back(params.m());
}

void TreeState::reserve(std::size_t nodes) {
  parent_.reserve(nodes);
  depth_.reserve(nodes);
  outdegree_.reserve(nodes);
  weights_.reserve(nodes);
}

std::uint32_t TreeState::insert_under(std::size_t parent) {
  if (parent >= depth_.size()) throw Error(Errc::domain_error, "parent index out of range");
  if (params_.beta() == -1.0 && outdegree_[parent] >= static_cast<std::uint32_t>(params_.m())) {
    throw Error(Errc::saturation_violation, "parent is saturated");
  }
  const double beta = params_.beta();
  const double m = params_.m();
  const std::uint32_t depth = depth_[parent] + 1;
  const auto level = static_cast<std::size_t>(depth);

  parent_.push_back(static_cast<std::uint32_t>(parent));
  depth_.push_back(depth);
  outdegree_.push_back(0);
  ++outdegree_[parent];
  weights_.add(parent, beta);
  weights_.push_back(m);

  if (internal_.size() <= level) internal_.resize(level + 1, 0);
  ++internal_[level];
  if (external_.size() <= level + 1) external_.resize(level + 2, 0.0);
  external_[level] += beta;
  external_[level + 1] += m;

  path_length_ += depth;
  external_path_length_ += (beta + m) * depth + m;
  return depth;
}

std::size_t TreeState::sample_parent(Rng& rng) const {
  const auto n = depth_.size();
  for (;;) {
    const std::size_t v = weights_.find(unit_uniform(rng) * weights_.total());
    // v == n only when rounding pushed u past the stored prefix sums
    if (v < n) return v;
  }
}

std::uint32_t insert_step(TreeState& state, Rng& rng) {
  return state.insert_under(state.sample_parent(rng));
}

// ---------------------------------------------------------------------------

Growth::Growth(const MomentTable& table, const ReplicaSeed& seed)
    : table_(&table), rng_(make_rng(seed)), state_(table.params()) {}

StepRecord Growth::current() const {
  return StepRecord{state_.size(), state_.last_depth(), state_.path_length(), martingale_,
                    increment_};
}

StepRecord Growth::step() {
  insert_step(state_, rng_);
  const double next = table_->martingale(state_.size(), static_cast<double>(state_.path_length()));
  increment_ = next - martingale_;
  martingale_ = next;
  return current();
}

const StepRecord* Trajectory::find(std::int64_t n) const {
  auto it = std::lower_bound(records.begin(), records.end(), n,
                             [](const StepRecord& r, std::int64_t k) { return r.n < k; });
  return it != records.end() && it->n == n ? &*it : nullptr;
}

Trajectory grow(const MomentTable& table, std::int64_t n, const ReplicaSeed& seed,
                const GrowOptions& options) {
  if (n < 1) throw Error(Errc::domain_error, "grow needs n >= 1");
  if (n > options.max_size) {
    throw Error(Errc::resource_limit, "n = " + std::to_string(n) + " exceeds the maximum " +
                                          std::to_string(options.max_size));
  }
  if (n > table.max_n()) throw Error(Errc::cap_exceeded, "moment table too small for n");
  for (auto c : options.checkpoints) {
    if (c < 1 || c > n) throw Error(Errc::invalid_config, "checkpoint outside [1, n]");
  }
  const bool full = options.mode == RecordMode::full ||
                    (options.mode == RecordMode::automatic && n < GrowOptions::kFullRecordLimit);

  std::vector<std::int64_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();

  Trajectory out{table.params(), seed, {}};
  if (full) out.records.reserve(static_cast<std::size_t>(n));
  Growth growth(table, seed);
  auto keep = [&](const StepRecord& r) {
    const bool at_checkpoint = next_checkpoint != checkpoints.end() && *next_checkpoint == r.n;
    if (at_checkpoint) ++next_checkpoint;
    if (full || at_checkpoint || r.n == n) out.records.push_back(r);
  };
  keep(growth.current());
  while (growth.size() < n) keep(growth.step());
  return out;
}

Trajectory grow(const ModelParams& params, std::int64_t n, const ReplicaSeed& seed,
                const GrowOptions& options) {
  if (n > options.max_size) {
    throw Error(Errc::resource_limit, "n = " + std::to_string(n) + " exceeds the maximum " +
                                          std::to_string(options.max_size));
  }
  const MomentTable table(params, std::max<std::int64_t>(n, 1));
  return grow(table, n, seed, options);
}

namespace {

double increment_residual(const MomentTable& table, std::int64_t n, double depth,
                          double previous_martingale, double increment) {
  const double predicted = table.params().growth() / alpha(table.params(), n) *
                           (depth - table.depth_mean(n) - previous_martingale);
  return std::abs(increment - predicted);
}

}  // namespace

double increment_check(const TreeState& before, const TreeState& after,
                       const MomentTable& table) {
  if (after.size() != before.size() + 1) {
    throw Error(Errc::domain_error, "increment_check needs consecutive states");
  }
  const std::int64_t n = after.size();
  const double s_before = table.martingale(n - 1, static_cast<double>(before.path_length()));
  const double s_after = table.martingale(n, static_cast<double>(after.path_length()));
  return increment_residual(table, n, after.last_depth(), s_before, s_after - s_before);
}

double max_increment_residual(const Trajectory& trajectory, const MomentTable& table) {
  double worst = 0.0;
  for (std::size_t i = 1; i < trajectory.records.size(); ++i) {
    const auto& prev = trajectory.records[i - 1];
    const auto& cur = trajectory.records[i];
    if (cur.n != prev.n + 1) continue;
    worst = std::max(worst, increment_residual(table, cur.n, cur.depth, prev.martingale,
                                               cur.increment));
  }
  return worst;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "n,D,P,S,X\n";
  for (const auto& r : trajectory.records) {
    out << r.n << ',' << r.depth << ',' << r.path << ',' << format_real(r.martingale) << ','
        << format_real(r.increment) << '\n';
  }
}

}  // namespace treemart
