#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace finsler {

/// Largest chart dimension supported by the jet engine.
inline constexpr int kMaxDim = 4;

/// Exponent vector over one block of variables (the x block or the y block).
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim);
  MultiIndex(std::initializer_list<int> exps);

  static MultiIndex unit(int dim, int i, int power = 1);

  int dim() const { return dim_; }
  int operator[](int i) const { return e_[static_cast<std::size_t>(i)]; }
  void set(int i, int v);
  void bump(int i, int by = 1) { set(i, (*this)[i] + by); }

  int order() const;
  double factorial() const;

  MultiIndex operator+(const MultiIndex& o) const;
  bool operator==(const MultiIndex& o) const = default;

  std::string str() const;

 private:
  std::array<std::uint8_t, kMaxDim> e_{};
  std::uint8_t dim_ = 0;
};

/// All multi-indices in `vars` variables with total order <= `order`, ranked
/// by degree first, so every proper sub-index precedes its super-indices.
/// Instances are interned and immutable; share them through get().
class GradedIndexSet {
 public:
  static std::shared_ptr<const GradedIndexSet> get(int vars, int order);

  int vars() const { return vars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(index_.size()); }
  const MultiIndex& at(int k) const { return index_[static_cast<std::size_t>(k)]; }
  int degree(int k) const { return degree_[static_cast<std::size_t>(k)]; }
  double factorial(int k) const { return factorial_[static_cast<std::size_t>(k)]; }

  /// Rank of m, or -1 when m is outside the set.
  int rank(const MultiIndex& m) const;

  /// Pairs (i, j) with at(i) + at(j) == at(k).
  std::span<const std::pair<int, int>> pairs(int k) const {
    const auto b = static_cast<std::size_t>(pair_start_[static_cast<std::size_t>(k)]);
    const auto e = static_cast<std::size_t>(pair_start_[static_cast<std::size_t>(k) + 1]);
    return {pairs_.data() + b, e - b};
  }

  GradedIndexSet(int vars, int order);

 private:
  int vars_;
  int order_;
  std::vector<MultiIndex> index_;
  std::vector<int> degree_;
  std::vector<double> factorial_;
  std::vector<int> rank_table_;
  std::vector<int> pair_start_;
  std::vector<std::pair<int, int>> pairs_;
};

}  // namespace finsler
