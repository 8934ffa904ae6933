#include "finsler/multi_index.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace finsler {

MultiIndex::MultiIndex(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("multi-index dimension out of range: " + std::to_string(dim));
  }
  dim_ = static_cast<std::uint8_t>(dim);
}

MultiIndex::MultiIndex(std::initializer_list<int> exps) : MultiIndex(static_cast<int>(exps.size())) {
  int i = 0;
  for (int v : exps) set(i++, v);
}

MultiIndex MultiIndex::unit(int dim, int i, int power) {
  MultiIndex m(dim);
  m.set(i, power);
  return m;
}

void MultiIndex::set(int i, int v) {
  if (i < 0 || i >= dim_) throw std::out_of_range("multi-index slot out of range");
  if (v < 0 || v > 255) throw std::out_of_range("multi-index exponent out of range");
  e_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
}

int MultiIndex::order() const {
  int s = 0;
  for (int i = 0; i < dim_; ++i) s += (*this)[i];
  return s;
}

double MultiIndex::factorial() const {
  double f = 1.0;
  for (int i = 0; i < dim_; ++i)
    for (int k = 2; k <= (*this)[i]; ++k) f *= k;
  return f;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("multi-index dimension mismatch");
  MultiIndex r(dim_);
  for (int i = 0; i < dim_; ++i) r.set(i, (*this)[i] + o[i]);
  return r;
}

std::string MultiIndex::str() const {
  std::string s = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) s += ",";
    s += std::to_string((*this)[i]);
  }
  return s + ")";
}

namespace {

// Enumerates every exponent vector of the given total degree, lexicographic.
void enumerate_degree(int vars, int degree, int slot, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (slot == vars - 1) {
    cur.set(slot, degree);
    out.push_back(cur);
    return;
  }
  for (int e = degree; e >= 0; --e) {
    cur.set(slot, e);
    enumerate_degree(vars, degree - e, slot + 1, cur, out);
  }
  cur.set(slot, 0);
}

int radix_key(const MultiIndex& m, int base) {
  int key = 0;
  for (int i = m.dim() - 1; i >= 0; --i) key = key * base + m[i];
  return key;
}

}  // namespace

GradedIndexSet::GradedIndexSet(int vars, int order) : vars_(vars), order_(order) {
  if (vars < 1 || vars > kMaxDim) throw std::invalid_argument("unsupported number of variables");
  if (order < 0) throw std::invalid_argument("negative order");
  for (int d = 0; d <= order; ++d) {
    MultiIndex cur(vars);
    enumerate_degree(vars, d, 0, cur, index_);
  }
  int table = 1;
  for (int i = 0; i < vars; ++i) table *= order + 1;
  rank_table_.assign(static_cast<std::size_t>(table), -1);
  for (int k = 0; k < size(); ++k) {
    rank_table_[static_cast<std::size_t>(radix_key(at(k), order + 1))] = k;
    degree_.push_back(at(k).order());
    factorial_.push_back(at(k).factorial());
  }

  pair_start_.push_back(0);
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& m = at(k);
    // Walk every sub-index i <= m; j = m - i.
    MultiIndex i(vars);
    while (true) {
      MultiIndex j(vars);
      for (int v = 0; v < vars; ++v) j.set(v, m[v] - i[v]);
      pairs_.emplace_back(rank(i), rank(j));
      int v = 0;
      while (v < vars) {
        if (i[v] < m[v]) {
          i.bump(v);
          break;
        }
        i.set(v, 0);
        ++v;
      }
      if (v == vars) break;
    }
    pair_start_.push_back(static_cast<int>(pairs_.size()));
  }
}

int GradedIndexSet::rank(const MultiIndex& m) const {
  if (m.dim() != vars_ || m.order() > order_) return -1;
  return rank_table_[static_cast<std::size_t>(radix_key(m, order_ + 1))];
}

std::shared_ptr<const GradedIndexSet> GradedIndexSet::get(int vars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const GradedIndexSet>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{vars, order}];
  if (!slot) slot = std::make_shared<const GradedIndexSet>(vars, order);
  return slot;
}

}  // namespace finsler
