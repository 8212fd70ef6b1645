#include "treemart/weight_index.hpp"

namespace treemart {

namespace {
constexpr std::size_t lowbit(std::size_t i) { return i & (~i + 1); }
}  // namespace

void WeightIndex::push_back(double weight) {
  const std::size_t i = tree_.size();
  // node i covers (i - lowbit(i), i]
  tree_.push_back(weight + prefix(i - 1) - prefix(i - lowbit(i)));
  if (top_bit_ == 0 || i >= top_bit_ * 2) top_bit_ = top_bit_ == 0 ? 1 : top_bit_ * 2;
  total_ += weight;
}

void WeightIndex::add(std::size_t index, double delta) {
  for (std::size_t i = index + 1; i < tree_.size(); i += lowbit(i)) tree_[i] += delta;
  total_ += delta;
}

double WeightIndex::prefix(std::size_t count) const {
  double sum = 0.0;
  for (std::size_t i = count; i > 0; i -= lowbit(i)) sum += tree_[i];
  return sum;
}

std::size_t WeightIndex::find(double u) const {
  std::size_t pos = 0;
  const std::size_t n = size();
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next <= n && tree_[next] <= u) {
      pos = next;
      u -= tree_[next];
    }
  }
  return pos;
}

}  // namespace treemart
