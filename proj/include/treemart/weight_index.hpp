#pragma once

#include <cstddef>
#include <vector>

namespace treemart {

/// Binary-indexed prefix-sum tree over non-negative real weights, growable at
/// the back. All operations are O(log n).
class WeightIndex {
 public:
  void reserve(std::size_t capacity) { tree_.reserve(capacity + 1); }
  std::size_t size() const noexcept { return tree_.size() - 1; }

  void push_back(double weight);
  void add(std::size_t index, double delta);

  /// Sum of the first `count` weights.
  double prefix(std::size_t count) const;
  double weight(std::size_t index) const { return prefix(index + 1) - prefix(index); }
  double total() const noexcept { return total_; }

  /// Index i with prefix(i) <= u < prefix(i + 1), or size() when u is not
  /// below the stored total. Zero-weight slots are never returned.
  std::size_t find(double u) const;

 private:
  std::vector<double> tree_ = std::vector<double>(1, 0.0);  // 1-based
  std::size_t top_bit_ = 0;
  double total_ = 0.0;
};

}  // namespace treemart
