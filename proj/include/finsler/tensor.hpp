#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/jet.hpp"

namespace finsler {

enum class Variance : std::uint8_t { up, down };

class TensorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr int kMaxRank = 6;
using Index = std::array<int, kMaxRank>;

/// Dense tensor over n-valued indices, row-major in the order the indices
/// are written (B_j^i_kl is stored as [j][i][k][l]).
template <class T>
struct Tensor {
  int dim = 0;
  std::vector<Variance> variance;
  /// Positive homogeneity degree in y.
  int y_degree = 0;
  std::shared_ptr<const Point> point;
  std::vector<T> comps;

  int rank() const { return static_cast<int>(variance.size()); }
  std::size_t size() const { return comps.size(); }

  std::size_t offset(const Index& idx) const {
    std::size_t o = 0;
    for (int p = 0; p < rank(); ++p) o = o * static_cast<std::size_t>(dim) + static_cast<std::size_t>(idx[p]);
    return o;
  }
  Index index_of(std::size_t o) const {
    Index idx{};
    for (int p = rank() - 1; p >= 0; --p) {
      idx[p] = static_cast<int>(o % static_cast<std::size_t>(dim));
      o /= static_cast<std::size_t>(dim);
    }
    return idx;
  }

  T& operator[](const Index& idx) { return comps[offset(idx)]; }
  const T& operator[](const Index& idx) const { return comps[offset(idx)]; }
  template <class... I>
  T& operator()(I... i) {
    return comps[offset(Index{static_cast<int>(i)...})];
  }
  template <class... I>
  const T& operator()(I... i) const {
    return comps[offset(Index{static_cast<int>(i)...})];
  }
};

using JetTensor = Tensor<Jet>;
using TensorValue = Tensor<double>;

inline std::size_t tensor_size(int dim, int rank) {
  std::size_t s = 1;
  for (int r = 0; r < rank; ++r) s *= static_cast<std::size_t>(dim);
  return s;
}

/// Calls f(idx) over every index tuple of the given rank in storage order.
template <class F>
void for_each_index(int dim, int rank, F&& f) {
  Index idx{};
  const std::size_t total = tensor_size(dim, rank);
  for (std::size_t o = 0; o < total; ++o) {
    f(static_cast<const Index&>(idx));
    for (int p = rank - 1; p >= 0; --p) {
      if (++idx[p] < dim) break;
      idx[p] = 0;
    }
  }
}

TensorValue values(const JetTensor& t);

/// Sum over the pair of positions (a, b), which must be one up and one down.
template <class T>
Tensor<T> contract(const Tensor<T>& t, int a, int b) {
  if (a == b || a < 0 || b < 0 || a >= t.rank() || b >= t.rank()) throw TensorError("bad contraction positions");
  if (t.variance[a] == t.variance[b]) throw TensorError("contraction needs one up and one down index");
  Tensor<T> out;
  out.dim = t.dim;
  out.y_degree = t.y_degree;
  out.point = t.point;
  for (int p = 0; p < t.rank(); ++p) {
    if (p != a && p != b) out.variance.push_back(t.variance[p]);
  }
  for_each_index(t.dim, out.rank(), [&](const Index& o) {
    Index full{};
    int q = 0;
    for (int p = 0; p < t.rank(); ++p) {
      if (p != a && p != b) full[p] = o[q++];
    }
    full[a] = full[b] = 0;
    T s = t[full];
    for (int m = 1; m < t.dim; ++m) {
      full[a] = full[b] = m;
      s = s + t[full];
    }
    out.comps.push_back(std::move(s));
  });
  return out;
}

/// Max |component|.
double max_abs(const TensorValue& t);
/// Max |a - b| over matching components.
double max_abs_diff(const TensorValue& a, const TensorValue& b);

}  // namespace finsler
