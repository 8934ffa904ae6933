#include "finsler/tensor.hpp"

#include <algorithm>

namespace finsler {

TensorValue values(const JetTensor& t) {
  TensorValue v;
  v.dim = t.dim;
  v.variance = t.variance;
  v.y_degree = t.y_degree;
  v.point = t.point;
  v.comps.reserve(t.comps.size());
  for (const Jet& j : t.comps) v.comps.push_back(j.value());
  return v;
}

double max_abs(const TensorValue& t) {
  double m = 0.0;
  for (double c : t.comps) m = std::max(m, std::abs(c));
  return m;
}

double max_abs_diff(const TensorValue& a, const TensorValue& b) {
  if (a.comps.size() != b.comps.size()) throw TensorError("tensor shapes differ");
  double m = 0.0;
  for (std::size_t k = 0; k < a.comps.size(); ++k) m = std::max(m, std::abs(a.comps[k] - b.comps[k]));
  return m;
}

}  // namespace finsler
