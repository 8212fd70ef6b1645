#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "treemart/exact.hpp"
#include "treemart/model.hpp"
#include "treemart/rng.hpp"
#include "treemart/weight_index.hpp"

namespace treemart {

/// Live state of one growing tree T_n.
///
/// Nodes are numbered by insertion order from 0 (the root). Profiles are
/// indexed by level k; external_profile()[k] is U_k(n) = beta X_k(n) + m X_{k-1}(n)
/// for k >= 1 and U_0(n) = 0.
class TreeState {
 public:
  static constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

  /// T_1: a single root at depth 0.
  explicit TreeState(const ModelParams& params);

  const ModelParams& params() const noexcept { return params_; }
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(depth_.size()); }

  std::span<const std::uint32_t> parents() const noexcept { return parent_; }
  std::span<const std::uint32_t> depths() const noexcept { return depth_; }
  std::span<const std::uint32_t> outdegrees() const noexcept { return outdegree_; }
  std::span<const std::int64_t> internal_profile() const noexcept { return internal_; }
  std::span<const double> external_profile() const noexcept { return external_; }

  std::int64_t path_length() const noexcept { return path_length_; }
  double external_path_length() const noexcept { return external_path_length_; }
  /// Sum of the per-node weights held by the sampling index; equals alpha_n.
  double total_weight() const noexcept { return weights_.total(); }
  double node_weight(std::size_t node) const { return weights_.weight(node); }
  std::uint32_t last_depth() const noexcept { return depth_.back(); }

  void reserve(std::size_t nodes);

  /// Attaches node n+1 to `parent` and returns its depth. Throws
  /// saturation_violation when the parent has zero attachment weight.
  std::uint32_t insert_under(std::size_t parent);

  /// Draws a parent with probability (beta d_v + m) / alpha_n.
  std::size_t sample_parent(Rng& rng) const;

 private:
  ModelParams params_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> outdegree_;
  std::vector<std::int64_t> internal_;
  std::vector<double> external_;
  std::int64_t path_length_ = 0;
  double external_path_length_ = 0.0;
  WeightIndex weights_;
};

inline TreeState init_state(const ModelParams& params) { return TreeState(params); }

/// One random insertion; returns D_n, the depth of the new node.
std::uint32_t insert_step(TreeState& state, Rng& rng);

struct StepRecord {
  std::int64_t n = 0;
  std::uint32_t depth = 0;     ///< D_n
  std::int64_t path = 0;       ///< P_n
  double martingale = 0.0;     ///< S_n
  double increment = 0.0;      ///< X_n = S_n - S_{n-1}
};

/// Drives a TreeState together with its martingale S_n. The moment table
/// must cover every size the growth will reach.
class Growth {
 public:
  Growth(const MomentTable& table, const ReplicaSeed& seed);

  const TreeState& state() const noexcept { return state_; }
  const MomentTable& table() const noexcept { return *table_; }
  std::int64_t size() const noexcept { return state_.size(); }
  double martingale() const noexcept { return martingale_; }
  StepRecord current() const;

  StepRecord step();

 private:
  const MomentTable* table_;
  Rng rng_;
  TreeState state_;
  double martingale_ = 0.0;
  double increment_ = 0.0;
};

enum class RecordMode { automatic, full, checkpoints };

struct GrowOptions {
  std::vector<std::int64_t> checkpoints;
  /// automatic: every step below kFullRecordLimit, checkpoints only above.
  RecordMode mode = RecordMode::automatic;
  std::int64_t max_size = 20'000'000;

  static constexpr std::int64_t kFullRecordLimit = 100'000;
};

struct Trajectory {
  ModelParams model;
  ReplicaSeed seed;
  std::vector<StepRecord> records;

  /// Record for size n, if it was kept.
  const StepRecord* find(std::int64_t n) const;
};

Trajectory grow(const MomentTable& table, std::int64_t n, const ReplicaSeed& seed,
                const GrowOptions& options = {});
Trajectory grow(const ModelParams& params, std::int64_t n, const ReplicaSeed& seed,
                const GrowOptions& options = {});

/// |X_n - (beta+m)/alpha_n (D_n - E[D_n] - S_{n-1})| for consecutive states.
double increment_check(const TreeState& before, const TreeState& after,
                       const MomentTable& table);

/// Same residual evaluated on consecutive records of a full trajectory.
double max_increment_residual(const Trajectory& trajectory, const MomentTable& table);

/// CSV with header n,D,P,S,X; reals at 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace treemart
