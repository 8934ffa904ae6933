#include "finsler/jet.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace finsler {

std::string JetSpec::str() const {
  std::ostringstream os;
  os << "(n=" << dim << ", kx=" << kx << ", ky=" << ky << ")";
  return os.str();
}

JetSpec common_spec(const JetSpec& a, const JetSpec& b) {
  if (a.dim != b.dim) throw JetSpecError("jet dimension mismatch");
  return {a.dim, std::min(a.kx, b.kx), std::min(a.ky, b.ky)};
}

Rational Rational::make(long num, long den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return "(" + std::to_string(num) + "/" + std::to_string(den) + ")";
}

JetLayout::JetLayout(const JetSpec& spec) : spec_(spec) {
  if (spec.dim < 2 || spec.dim > kMaxDim) {
    throw JetSpecError("jet dimension must be in [2, " + std::to_string(kMaxDim) + "], got " +
                       std::to_string(spec.dim));
  }
  if (spec.kx < 0 || spec.ky < 0) throw JetSpecError("negative jet order in " + spec.str());
  xs_ = GradedIndexSet::get(spec.dim, spec.kx);
  ys_ = GradedIndexSet::get(spec.dim, spec.ky);
}

std::shared_ptr<const JetLayout> JetLayout::get(const JetSpec& spec) {
  static std::mutex mu;
  static std::map<JetSpec, std::shared_ptr<const JetLayout>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[spec];
  if (!slot) slot = std::make_shared<const JetLayout>(spec);
  return slot;
}

Jet::Jet(std::shared_ptr<const JetLayout> layout, std::shared_ptr<const Point> base,
         std::vector<double> coeffs)
    : layout_(std::move(layout)), base_(std::move(base)), c_(std::move(coeffs)) {
  if (static_cast<int>(c_.size()) != layout_->size()) throw JetSpecError("coefficient count does not match layout");
  if (!base_ || base_->dim() != layout_->spec().dim || static_cast<int>(base_->y.size()) != base_->dim()) {
    throw JetSpecError("base point dimension does not match jet spec");
  }
}

Jet Jet::constant(const JetSpec& spec, std::shared_ptr<const Point> base, double value) {
  auto layout = JetLayout::get(spec);
  std::vector<double> c(static_cast<std::size_t>(layout->size()), 0.0);
  c[0] = value;
  return {std::move(layout), std::move(base), std::move(c)};
}

Jet Jet::lift(const JetSpec& spec, std::shared_ptr<const Point> base, Block block, int i) {
  if (!base) throw JetSpecError("null base point");
  if (i < 0 || i >= spec.dim) throw std::out_of_range("coordinate index out of range");
  bool nonzero_y = false;
  for (double v : base->y) nonzero_y = nonzero_y || v != 0.0;
  if (!nonzero_y) throw JetDomainError("base point has y = 0 (outside the slit tangent bundle)");
  const double v = block == Block::x ? base->x[static_cast<std::size_t>(i)] : base->y[static_cast<std::size_t>(i)];
  Jet j = constant(spec, std::move(base), v);
  const auto& L = j.layout();
  const MultiIndex zero(spec.dim);
  const MultiIndex e = MultiIndex::unit(spec.dim, i);
  const int ix = L.xs().rank(block == Block::x ? e : zero);
  const int iy = L.ys().rank(block == Block::y ? e : zero);
  if (ix >= 0 && iy >= 0) j.c_[static_cast<std::size_t>(L.index(ix, iy))] = 1.0;
  return j;
}

double Jet::coeff(const MultiIndex& alpha, const MultiIndex& beta) const {
  const int ix = layout_->xs().rank(alpha);
  const int iy = layout_->ys().rank(beta);
  if (ix < 0 || iy < 0) {
    throw std::out_of_range("order " + alpha.str() + "," + beta.str() + " exceeds jet spec " + spec().str());
  }
  return c_[static_cast<std::size_t>(layout_->index(ix, iy))];
}

double Jet::partial(const MultiIndex& alpha, const MultiIndex& beta) const {
  return coeff(alpha, beta) * alpha.factorial() * beta.factorial();
}

Jet Jet::derivative(const MultiIndex& alpha, const MultiIndex& beta) const {
  const JetSpec& s = spec();
  const JetSpec out{s.dim, s.kx - alpha.order(), s.ky - beta.order()};
  if (out.kx < 0 || out.ky < 0) {
    throw JetSpecError("derivative " + alpha.str() + "," + beta.str() + " exceeds jet spec " + s.str());
  }
  auto layout = JetLayout::get(out);
  const auto& X = layout->xs();
  const auto& Y = layout->ys();
  std::vector<double> c(static_cast<std::size_t>(layout->size()));
  for (int ix = 0; ix < X.size(); ++ix) {
    const MultiIndex sx = X.at(ix) + alpha;
    const int src_x = layout_->xs().rank(sx);
    const double wx = sx.factorial() / X.factorial(ix);
    for (int iy = 0; iy < Y.size(); ++iy) {
      const MultiIndex sy = Y.at(iy) + beta;
      const int src_y = layout_->ys().rank(sy);
      const double wy = sy.factorial() / Y.factorial(iy);
      c[static_cast<std::size_t>(layout->index(ix, iy))] =
          c_[static_cast<std::size_t>(layout_->index(src_x, src_y))] * wx * wy;
    }
  }
  return {std::move(layout), base_, std::move(c)};
}

Jet Jet::dx(int i) const { return derivative(MultiIndex::unit(dim(), i), MultiIndex(dim())); }
Jet Jet::dy(int i) const { return derivative(MultiIndex(dim()), MultiIndex::unit(dim(), i)); }

Jet Jet::truncate(const JetSpec& target) const {
  if (target == spec()) return *this;
  if (target.dim != spec().dim || target.kx > spec().kx || target.ky > spec().ky) {
    throw JetSpecError("cannot truncate " + spec().str() + " to " + target.str());
  }
  auto layout = JetLayout::get(target);
  const auto& X = layout->xs();
  const auto& Y = layout->ys();
  std::vector<double> c(static_cast<std::size_t>(layout->size()));
  for (int ix = 0; ix < X.size(); ++ix) {
    // Graded ranks of the smaller set coincide with those of the larger one.
    for (int iy = 0; iy < Y.size(); ++iy) {
      c[static_cast<std::size_t>(layout->index(ix, iy))] = c_[static_cast<std::size_t>(layout_->index(ix, iy))];
    }
  }
  return {std::move(layout), base_, std::move(c)};
}

Jet Jet::constant_like(double value) const {
  std::vector<double> c(c_.size(), 0.0);
  c[0] = value;
  return {layout_, base_, std::move(c)};
}

JetSpec check_compatible(const Jet& a, const Jet& b) {
  if (a.base() != b.base() && !(*a.base() == *b.base())) throw JetSpecError("jets expanded at different base points");
  return common_spec(a.spec(), b.spec());
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& v : r.c_) v = -v;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  const JetSpec s = check_compatible(*this, o);
  if (s != spec()) *this = truncate(s);
  if (o.spec() == s) {
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  } else {
    const Jet t = o.truncate(s);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += t.c_[k];
  }
  return *this;
}

Jet& Jet::operator-=(const Jet& o) { return *this += -o; }

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }
Jet& Jet::operator/=(const Jet& o) { return *this = *this / o; }

Jet& Jet::operator+=(double v) {
  c_[0] += v;
  return *this;
}
Jet& Jet::operator-=(double v) {
  c_[0] -= v;
  return *this;
}
Jet& Jet::operator*=(double v) {
  for (double& c : c_) c *= v;
  return *this;
}
Jet& Jet::operator/=(double v) {
  if (v == 0.0) throw JetDomainError("division of a jet by zero");
  for (double& c : c_) c /= v;
  return *this;
}

namespace {

// Cauchy-product sum for output (ix, iy), optionally skipping one pair kind.
enum class Skip { none, left_unit, either_unit };

inline double cauchy(const JetLayout& L, const std::vector<double>& A, const std::vector<double>& B, int ix,
                     int iy, Skip skip) {
  const int ny = L.ys().size();
  double s = 0.0;
  for (auto [ax, bx] : L.xs().pairs(ix)) {
    for (auto [ay, by] : L.ys().pairs(iy)) {
      if (skip == Skip::left_unit && ax == 0 && ay == 0) continue;
      if (skip == Skip::either_unit && ((ax == 0 && ay == 0) || (bx == 0 && by == 0))) continue;
      s += A[static_cast<std::size_t>(ax * ny + ay)] * B[static_cast<std::size_t>(bx * ny + by)];
    }
  }
  return s;
}

}  // namespace

Jet operator*(const Jet& a, const Jet& b) {
  const JetSpec s = check_compatible(a, b);
  const Jet ta = a.spec() == s ? a : a.truncate(s);
  const Jet tb = b.spec() == s ? b : b.truncate(s);
  const JetLayout& L = ta.layout();
  std::vector<double> c(static_cast<std::size_t>(L.size()));
  for (int ix = 0; ix < L.xs().size(); ++ix)
    for (int iy = 0; iy < L.ys().size(); ++iy)
      c[static_cast<std::size_t>(L.index(ix, iy))] = cauchy(L, ta.coeffs(), tb.coeffs(), ix, iy, Skip::none);
  return {JetLayout::get(s), a.base(), std::move(c)};
}

Jet operator/(const Jet& a, const Jet& b) {
  const JetSpec s = check_compatible(a, b);
  const Jet ta = a.spec() == s ? a : a.truncate(s);
  const Jet tb = b.spec() == s ? b : b.truncate(s);
  const double b0 = tb.value();
  if (b0 == 0.0) throw JetDomainError("division by a zero-valued jet");
  const JetLayout& L = ta.layout();
  std::vector<double> c(static_cast<std::size_t>(L.size()), 0.0);
  // a = b c, solved in rank order: c_k = (a_k - sum_{i != 0} b_i c_j) / b_0.
  for (int ix = 0; ix < L.xs().size(); ++ix) {
    for (int iy = 0; iy < L.ys().size(); ++iy) {
      const auto k = static_cast<std::size_t>(L.index(ix, iy));
      c[k] = (ta.coeffs()[k] - cauchy(L, tb.coeffs(), c, ix, iy, Skip::left_unit)) / b0;
    }
  }
  return {JetLayout::get(s), a.base(), std::move(c)};
}

Jet sqrt(const Jet& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) {
    std::ostringstream os;
    os << "sqrt of a non-positive-valued jet (value " << a0 << ")";
    throw JetDomainError(os.str());
  }
  const JetLayout& L = a.layout();
  std::vector<double> c(static_cast<std::size_t>(L.size()), 0.0);
  c[0] = std::sqrt(a0);
  // c^2 = a: 2 c_0 c_k + sum_{i, j != 0} c_i c_j = a_k.
  for (int ix = 0; ix < L.xs().size(); ++ix) {
    for (int iy = 0; iy < L.ys().size(); ++iy) {
      if (ix == 0 && iy == 0) continue;
      const auto k = static_cast<std::size_t>(L.index(ix, iy));
      c[k] = (a.c_[k] - cauchy(L, c, c, ix, iy, Skip::either_unit)) / (2.0 * c[0]);
    }
  }
  return {a.layout_, a.base_, std::move(c)};
}

Jet pow_int(const Jet& a, int k) {
  if (k < 0) return 1.0 / pow_int(a, -k);
  if (k == 0) return a.constant_like(1.0);
  Jet r = a;
  for (int i = 1; i < k; ++i) r = r * a;
  return r;
}

Jet pow(const Jet& a, Rational r) {
  if (r.den == 0) throw std::invalid_argument("rational with zero denominator");
  if (r.is_integer()) return pow_int(a, static_cast<int>(r.num));
  if (r.num == 1 && r.den == 2) return sqrt(a);
  const double a0 = a.value();
  if (!(a0 > 0.0)) {
    std::ostringstream os;
    os << "fractional power " << r.str() << " of a non-positive-valued jet (value " << a0 << ")";
    throw JetDomainError(os.str());
  }
  const double rv = r.value();
  const JetLayout& L = a.layout();
  const int ny = L.ys().size();
  std::vector<double> c(static_cast<std::size_t>(L.size()), 0.0);
  c[0] = std::pow(a0, rv);
  // Euler-operator recurrence from a * E(c) = r * c * E(a), E = sum t_v d/dt_v:
  // |k| a_0 c_k = sum_{i + j = k, i != 0} (r |i| - |j|) a_i c_j.
  for (int ix = 0; ix < L.xs().size(); ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      if (ix == 0 && iy == 0) continue;
      double s = 0.0;
      for (auto [ax, cx] : L.xs().pairs(ix)) {
        for (auto [ay, cy] : L.ys().pairs(iy)) {
          if (ax == 0 && ay == 0) continue;
          const int di = L.xs().degree(ax) + L.ys().degree(ay);
          const int dj = L.xs().degree(cx) + L.ys().degree(cy);
          s += (rv * di - dj) * a.c_[static_cast<std::size_t>(ax * ny + ay)] * c[static_cast<std::size_t>(cx * ny + cy)];
        }
      }
      const int dk = L.xs().degree(ix) + L.ys().degree(iy);
      c[static_cast<std::size_t>(L.index(ix, iy))] = s / (dk * a0);
    }
  }
  return {a.layout_, a.base_, std::move(c)};
}

}  // namespace finsler
