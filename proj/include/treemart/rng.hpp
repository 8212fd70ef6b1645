#pragma once

#include <cstdint>
#include <random>

namespace treemart {

/// Identifies one replica stream: the same pair always yields the same
/// stream within a build, distinct pairs give independent-behaving streams.
struct ReplicaSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t replica_index = 0;

  friend bool operator==(const ReplicaSeed&, const ReplicaSeed&) = default;
};

using Rng = std::mt19937_64;

/// Substream split rule: the generator is seeded through std::seed_seq with
/// the four 32-bit halves of (master_seed, replica_index).
Rng make_rng(const ReplicaSeed& seed);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace treemart
