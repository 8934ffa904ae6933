#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/sample.hpp"

namespace finsler {

/// Scalar or vector parameter bound by a metric definition.
struct Param {
  std::vector<double> values;
  bool is_vector = false;

  static Param scalar(double v) { return {{v}, false}; }
  static Param vector(std::vector<double> v) { return {std::move(v), true}; }
  bool operator==(const Param&) const = default;
};

using ParamTable = std::map<std::string, Param>;

enum class DeclaredForm { F, F_squared };

std::string to_string(DeclaredForm f);
DeclaredForm parse_declared_form(const std::string& s);

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

/// Evaluation failed at a point: a sqrt or fractional power of a non-positive
/// value, a division by zero, or a non-positive F.
class MetricDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class NodeKind { number, param, dot, norm2, sqrt, add, sub, mul, div, neg, pow };

/// Vector operand of dot/norm2.
struct VectorRef {
  enum class Kind { x, y, param } kind = Kind::x;
  std::string name;
  bool operator==(const VectorRef&) const = default;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::number;
  double number = 0.0;
  std::string name;
  VectorRef u;
  VectorRef v;
  Rational exponent;
  NodePtr lhs;
  NodePtr rhs;
};

bool same_tree(const Node& a, const Node& b);

/// Parsed metric expression. Immutable after parse.
struct MetricExpr {
  NodePtr root;
  DeclaredForm form = DeclaredForm::F;
  ParamTable params;
  std::string source;
  /// Chart domain |x| < radius, when bounded.
  std::optional<double> domain_radius;
};

/// Parses `text` against the declared parameters. Throws ParseError with a
/// 1-based line/column for syntax errors, type errors (vector in scalar
/// position or vice versa) and unbound identifiers.
MetricExpr parse(const std::string& text, const ParamTable& params = {}, DeclaredForm form = DeclaredForm::F);

/// Fully parenthesized text; parse(print(e)) reproduces the tree.
std::string print(const Node& node);

// -- scalar kernels shared by every evaluator ---------------------------------

inline long double metric_sqrt(long double v) {
  if (!(v > 0.0L)) throw JetDomainError("sqrt of a non-positive value");
  return std::sqrt(v);
}
inline Jet metric_sqrt(const Jet& v) { return sqrt(v); }

inline long double metric_div(long double a, long double b) {
  if (b == 0.0L) throw JetDomainError("division by zero");
  return a / b;
}
inline Jet metric_div(const Jet& a, const Jet& b) { return a / b; }

inline long double metric_pow(long double a, Rational r) {
  if (r.is_integer()) {
    long k = r.num < 0 ? -r.num : r.num;
    long double p = 1.0L;
    if (k > 0) {
      p = a;
      for (long i = 1; i < k; ++i) p = p * a;
    }
    return r.num < 0 ? metric_div(1.0L, p) : p;
  }
  if (r.num == 1 && r.den == 2) return metric_sqrt(a);
  if (!(a > 0.0L)) throw JetDomainError("fractional power of a non-positive value");
  return std::pow(a, static_cast<long double>(r.num) / static_cast<long double>(r.den));
}
inline Jet metric_pow(const Jet& a, Rational r) { return pow(a, r); }

/// Coordinates and constant factory for one evaluation.
template <class T>
struct EvalVars {
  std::vector<T> x;
  std::vector<T> y;
  std::function<T(double)> constant;

  int dim() const { return static_cast<int>(x.size()); }
};

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

template <class T>
T norm2(const std::vector<T>& a) {
  return dot(a, a);
}

template <class T>
std::vector<T> vector_param(const EvalVars<T>& vars, const ParamTable& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end() || !it->second.is_vector) throw std::invalid_argument("unbound vector parameter '" + name + "'");
  if (static_cast<int>(it->second.values.size()) != vars.dim()) {
    throw std::invalid_argument("vector parameter '" + name + "' has " + std::to_string(it->second.values.size()) +
                                " components, chart dimension is " + std::to_string(vars.dim()));
  }
  std::vector<T> out;
  for (double c : it->second.values) out.push_back(vars.constant(c));
  return out;
}

template <class T>
T scalar_param(const EvalVars<T>& vars, const ParamTable& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end() || it->second.is_vector) throw std::invalid_argument("unbound scalar parameter '" + name + "'");
  return vars.constant(it->second.values[0]);
}

namespace detail {

template <class T>
const std::vector<T>& resolve(const VectorRef& r, const EvalVars<T>& vars, const ParamTable& params,
                              std::vector<T>& storage) {
  switch (r.kind) {
    case VectorRef::Kind::x: return vars.x;
    case VectorRef::Kind::y: return vars.y;
    case VectorRef::Kind::param: storage = vector_param(vars, params, r.name); return storage;
  }
  throw std::logic_error("bad vector ref");
}

template <class T>
T eval_node(const Node& n, const EvalVars<T>& vars, const ParamTable& params) {
  auto fail = [&](const std::exception& e) -> MetricDomainError {
    return MetricDomainError(std::string(e.what()) + " in subexpression " + print(n));
  };
  switch (n.kind) {
    case NodeKind::number: return vars.constant(n.number);
    case NodeKind::param: return scalar_param(vars, params, n.name);
    case NodeKind::dot: {
      std::vector<T> su, sv;
      return dot(resolve(n.u, vars, params, su), resolve(n.v, vars, params, sv));
    }
    case NodeKind::norm2: {
      std::vector<T> su;
      return norm2(resolve(n.u, vars, params, su));
    }
    case NodeKind::add: return eval_node(*n.lhs, vars, params) + eval_node(*n.rhs, vars, params);
    case NodeKind::sub: return eval_node(*n.lhs, vars, params) - eval_node(*n.rhs, vars, params);
    case NodeKind::mul: return eval_node(*n.lhs, vars, params) * eval_node(*n.rhs, vars, params);
    case NodeKind::neg: return -eval_node(*n.lhs, vars, params);
    case NodeKind::div: {
      T a = eval_node(*n.lhs, vars, params);
      T b = eval_node(*n.rhs, vars, params);
      try {
        return metric_div(a, b);
      } catch (const JetDomainError& e) {
        throw fail(e);
      }
    }
    case NodeKind::sqrt: {
      T a = eval_node(*n.lhs, vars, params);
      try {
        return metric_sqrt(a);
      } catch (const JetDomainError& e) {
        throw fail(e);
      }
    }
    case NodeKind::pow: {
      T a = eval_node(*n.lhs, vars, params);
      try {
        return metric_pow(a, n.exponent);
      } catch (const JetDomainError& e) {
        throw fail(e);
      }
    }
  }
  throw std::logic_error("bad node kind");
}

}  // namespace detail

/// Value of the expression itself (F or F^2, whichever was declared).
template <class T>
T evaluate(const MetricExpr& e, const EvalVars<T>& vars) {
  return detail::eval_node(*e.root, vars, e.params);
}

EvalVars<Jet> jet_vars(const JetSpec& spec, const std::shared_ptr<const Point>& base);
EvalVars<long double> plain_vars(const std::vector<double>& x, const std::vector<double>& y);
EvalVars<long double> plain_vars(const std::vector<long double>& x, const std::vector<long double>& y);

/// Jet of the raw expression value at base.
Jet eval_raw_jet(const MetricExpr& e, const JetSpec& spec, const Point& base);

/// Jet of F^2 at base; an expression declared as F is squared after a
/// positivity check.
Jet eval_as_jet(const MetricExpr& e, const JetSpec& spec, const Point& base);

/// F (not F^2) at a plain point.
double eval_F(const MetricExpr& e, const std::vector<double>& x, const std::vector<double>& y);

struct HomogeneityReport {
  double residual = 0.0;
  double tol = 0.0;
  bool passed = false;
  std::size_t worst_sample = 0;
};

/// max over samples and lambda in {0.5, 2, 3} of |F(x, l y) - l F(x, y)| / (l F(x, y)).
HomogeneityReport check_homogeneity(const MetricExpr& e, const SamplePlan& samples, double tol);

}  // namespace finsler
