// Complete binary sum tree over nonnegative weights.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cgkmc {

/// Every internal node is recomputed as left + right from its children, so
/// node values depend only on the leaves: any sequence of leaf writes
/// followed by a refresh produces the same tree bit-for-bit as a full build.
class SumTree {
 public:
  SumTree() = default;
  explicit SumTree(std::size_t n) { resize(n); }

  void resize(std::size_t n) {
    size_ = n;
    capacity_ = 1;
    while (capacity_ < n) capacity_ <<= 1;
    nodes_.assign(2 * capacity_, 0.0);
  }

  std::size_t size() const { return size_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[capacity_ + i]; }
  std::span<const double> leaves() const { return {nodes_.data() + capacity_, size_}; }

  /// Writes a leaf without touching ancestors; call refresh() afterwards.
  void set_leaf(std::size_t i, double v) { nodes_[capacity_ + i] = v; }

  void set(std::size_t i, double v) {
    set_leaf(i, v);
    refresh(i, i);
  }

  /// Recomputes ancestors of leaves [lo, hi].
  void refresh(std::size_t lo, std::size_t hi) {
    lo += capacity_;
    hi += capacity_;
    while (lo > 1) {
      lo >>= 1;
      hi >>= 1;
      for (std::size_t p = lo; p <= hi; ++p) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
    }
  }

  void rebuild() {
    if (size_ == 0) return;
    refresh(0, capacity_ - 1);
  }

  /// Smallest index l with prefix(l) >= target and a positive weight.
  /// target <= 0 selects the first positive leaf; rounding overshoot past
  /// the total selects the last positive leaf.
  std::size_t find(double target) const {
    if (!(total() > 0.0)) throw std::logic_error("SumTree::find on an all-zero tree");
    if (target <= 0.0) return first_positive();
    std::size_t p = 1;
    while (p < capacity_) {
      const double left = nodes_[2 * p];
      if (target <= left) {
        p = 2 * p;
      } else {
        target -= left;
        p = 2 * p + 1;
      }
    }
    std::size_t i = p - capacity_;
    if (i < size_ && nodes_[p] > 0.0) return i;
    return last_positive_before(std::min(i, size_ - 1));
  }

 private:
  std::size_t first_positive() const {
    for (std::size_t i = 0; i < size_; ++i)
      if (leaf(i) > 0.0) return i;
    throw std::logic_error("SumTree: no positive leaf");
  }
  std::size_t last_positive_before(std::size_t i) const {
    for (std::size_t j = i + 1; j-- > 0;)
      if (leaf(j) > 0.0) return j;
    return first_positive();
  }

  std::size_t size_ = 0;
  std::size_t capacity_ = 1;
  std::vector<double> nodes_{0.0, 0.0};
};

/// Linear cumulative-sum scan with the same selection rule as SumTree::find.
inline std::size_t linear_find(std::span<const double> weights, double target) {
  double cumulative = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    cumulative += weights[i];
    last_positive = i;
    if (cumulative >= target) return i;
  }
  if (last_positive == weights.size()) throw std::logic_error("linear_find: all weights zero");
  return last_positive;
}

}  // namespace cgkmc
