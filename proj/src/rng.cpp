#include "treemart/rng.hpp"

#include <array>

namespace treemart {

Rng make_rng(const ReplicaSeed& seed) {
  const std::array<std::uint32_t, 4> words{
      static_cast<std::uint32_t>(seed.master_seed),
      static_cast<std::uint32_t>(seed.master_seed >> 32),
      static_cast<std::uint32_t>(seed.replica_index),
      static_cast<std::uint32_t>(seed.replica_index >> 32),
  };
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace treemart
