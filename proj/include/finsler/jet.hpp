#pragma once

#include <compare>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/multi_index.hpp"

namespace finsler {

/// Truncation budget of a jet: chart dimension and the rectangular order cap
/// (|alpha| <= kx over x, |beta| <= ky over y).
struct JetSpec {
  int dim = 2;
  int kx = 2;
  int ky = 7;

  auto operator<=>(const JetSpec&) const = default;
  std::string str() const;
};

/// Componentwise minimum, the budget an expression mixing two jets can honor.
JetSpec common_spec(const JetSpec& a, const JetSpec& b);

/// Point of the slit tangent bundle.
struct Point {
  std::vector<double> x;
  std::vector<double> y;

  int dim() const { return static_cast<int>(x.size()); }
  bool operator==(const Point&) const = default;
};

struct Rational {
  long num = 1;
  long den = 1;

  static Rational make(long num, long den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_integer() const { return den == 1; }
  bool operator==(const Rational&) const = default;
  std::string str() const;
};

class JetSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class JetDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coefficient layout of a spec: x-rank major, y-rank minor. Interned.
class JetLayout {
 public:
  static std::shared_ptr<const JetLayout> get(const JetSpec& spec);

  explicit JetLayout(const JetSpec& spec);

  const JetSpec& spec() const { return spec_; }
  const GradedIndexSet& xs() const { return *xs_; }
  const GradedIndexSet& ys() const { return *ys_; }
  int size() const { return xs_->size() * ys_->size(); }
  int index(int ix, int iy) const { return ix * ys_->size() + iy; }

 private:
  JetSpec spec_;
  std::shared_ptr<const GradedIndexSet> xs_;
  std::shared_ptr<const GradedIndexSet> ys_;
};

enum class Block { x, y };

/// Truncated mixed Taylor polynomial of a scalar field of (x, y) at a base
/// point. Coefficient (alpha, beta) stores the partial derivative divided by
/// alpha! beta!. Values are immutable; every operation returns a new jet.
///
/// Binary operations require the same dimension and base point. Operands of
/// different orders are truncated to the common spec, which is the largest
/// budget the result is exact to.
class Jet {
 public:
  Jet(std::shared_ptr<const JetLayout> layout, std::shared_ptr<const Point> base,
      std::vector<double> coeffs);

  static Jet constant(const JetSpec& spec, std::shared_ptr<const Point> base, double value);
  static Jet lift(const JetSpec& spec, std::shared_ptr<const Point> base, Block block, int i);

  const JetSpec& spec() const { return layout_->spec(); }
  const JetLayout& layout() const { return *layout_; }
  const std::shared_ptr<const Point>& base() const { return base_; }
  int dim() const { return spec().dim; }

  double value() const { return c_[0]; }
  double coeff(const MultiIndex& alpha, const MultiIndex& beta) const;
  const std::vector<double>& coeffs() const { return c_; }

  /// Mixed partial derivative value at the base point.
  double partial(const MultiIndex& alpha, const MultiIndex& beta) const;

  /// Jet of the derivative field; orders drop by |alpha| and |beta|.
  Jet derivative(const MultiIndex& alpha, const MultiIndex& beta) const;
  Jet dx(int i) const;
  Jet dy(int i) const;

  Jet truncate(const JetSpec& target) const;

  /// Same layout and base, all coefficients replaced by a constant field.
  Jet constant_like(double value) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double v);
  Jet& operator-=(double v);
  Jet& operator*=(double v);
  Jet& operator/=(double v);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double v) { return a += v; }
  friend Jet operator+(double v, Jet a) { return a += v; }
  friend Jet operator-(Jet a, double v) { return a -= v; }
  friend Jet operator-(double v, const Jet& a) { return (-a) += v; }
  friend Jet operator*(Jet a, double v) { return a *= v; }
  friend Jet operator*(double v, Jet a) { return a *= v; }
  friend Jet operator/(Jet a, double v) { return a /= v; }
  friend Jet operator/(double v, const Jet& a) { return a.constant_like(v) / a; }

 private:
  friend Jet sqrt(const Jet& a);
  friend Jet pow(const Jet& a, Rational r);

  std::shared_ptr<const JetLayout> layout_;
  std::shared_ptr<const Point> base_;
  std::vector<double> c_;
};

Jet sqrt(const Jet& a);
/// a^r. Integer exponents multiply (a must be nonzero-valued for r < 0);
/// fractional exponents need a positive value. r = 1/2 dispatches to sqrt.
Jet pow(const Jet& a, Rational r);
Jet pow_int(const Jet& a, int k);

/// Brings two jets onto a common spec; throws JetSpecError on dimension or
/// base mismatch.
JetSpec check_compatible(const Jet& a, const Jet& b);

}  // namespace finsler
