#include "finsler/metric_lang.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace finsler {

std::string to_string(DeclaredForm f) { return f == DeclaredForm::F ? "F" : "F2"; }

DeclaredForm parse_declared_form(const std::string& s) {
  if (s == "F") return DeclaredForm::F;
  if (s == "F2" || s == "F^2" || s == "F_squared") return DeclaredForm::F_squared;
  throw std::invalid_argument("declared form must be F or F2, got '" + s + "'");
}

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

enum class Tok { number, ident, lparen, rparen, comma, plus, minus, star, slash, caret, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end: return "end of input";
    case Tok::number:
    case Tok::ident: return "'" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= s_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        t.number = std::strtod(begin, &end);
        const auto len = static_cast<std::size_t>(end - begin);
        if (len == 0) throw ParseError(line_, col_, "malformed number");
        t.kind = Tok::number;
        t.text = s_.substr(pos_, len);
        advance(len);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t len = 0;
        while (pos_ + len < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_ + len])) || s_[pos_ + len] == '_'))
          ++len;
        t.kind = Tok::ident;
        t.text = s_.substr(pos_, len);
        advance(len);
      } else {
        switch (c) {
          case '(': t.kind = Tok::lparen; break;
          case ')': t.kind = Tok::rparen; break;
          case ',': t.kind = Tok::comma; break;
          case '+': t.kind = Tok::plus; break;
          case '-': t.kind = Tok::minus; break;
          case '*': t.kind = Tok::star; break;
          case '/': t.kind = Tok::slash; break;
          case '^': t.kind = Tok::caret; break;
          default: throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
        }
        t.text = std::string(1, c);
        advance(1);
      }
      out.push_back(t);
    }
  }

 private:
  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (s_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance(1);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr binary(NodeKind k, NodePtr a, NodePtr b) {
  Node n;
  n.kind = k;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make(std::move(n));
}

bool reserved(const std::string& s) { return s == "dot" || s == "norm2" || s == "sqrt" || s == "x" || s == "y"; }

class Parser {
 public:
  Parser(std::vector<Token> toks, const ParamTable& params) : t_(std::move(toks)), params_(params) {}

  NodePtr run() {
    NodePtr e = expr();
    if (peek().kind != Tok::end) error(peek(), "expected an operator or end of input, found " + describe(peek()));
    return e;
  }

 private:
  const Token& peek() const { return t_[i_]; }
  const Token& take() { return t_[i_ < t_.size() - 1 ? i_++ : i_]; }

  [[noreturn]] void error(const Token& t, const std::string& msg) { throw ParseError(t.line, t.column, msg); }

  const Token& expect(Tok k, const std::string& what) {
    if (peek().kind != k) error(peek(), "expected " + what + ", found " + describe(peek()));
    return take();
  }

  NodePtr expr() {
    NodePtr a = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const NodeKind k = take().kind == Tok::plus ? NodeKind::add : NodeKind::sub;
      a = binary(k, a, term());
    }
    return a;
  }

  NodePtr term() {
    NodePtr a = factor();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const NodeKind k = take().kind == Tok::star ? NodeKind::mul : NodeKind::div;
      a = binary(k, a, factor());
    }
    return a;
  }

  NodePtr factor() {
    if (peek().kind == Tok::minus) {
      take();
      Node n;
      n.kind = NodeKind::neg;
      n.lhs = factor();
      return make(std::move(n));
    }
    NodePtr a = atom();
    if (peek().kind == Tok::caret) {
      take();
      const Rational r = rational();
      Node n;
      n.lhs = a;
      if (r.num == 1 && r.den == 2) {
        n.kind = NodeKind::sqrt;
      } else {
        n.kind = NodeKind::pow;
        n.exponent = r;
      }
      return make(std::move(n));
    }
    return a;
  }

  long integer() {
    bool neg = false;
    if (peek().kind == Tok::minus) {
      take();
      neg = true;
    }
    const Token& t = expect(Tok::number, "an integer exponent");
    for (char c : t.text)
      if (!std::isdigit(static_cast<unsigned char>(c))) error(t, "exponent must be an integer or (p/q), found '" + t.text + "'");
    const long v = std::strtol(t.text.c_str(), nullptr, 10);
    return neg ? -v : v;
  }

  Rational rational() {
    if (peek().kind == Tok::lparen) {
      take();
      const long p = integer();
      expect(Tok::slash, "'/' in rational exponent");
      const Token& qt = peek();
      const long q = integer();
      if (q == 0) error(qt, "zero denominator in exponent");
      expect(Tok::rparen, "')' closing rational exponent");
      return Rational::make(p, q);
    }
    return Rational::make(integer(), 1);
  }

  VectorRef vexpr() {
    const Token& t = expect(Tok::ident, "a vector operand (x, y or a vector parameter)");
    if (t.text == "x") return {VectorRef::Kind::x, ""};
    if (t.text == "y") return {VectorRef::Kind::y, ""};
    const auto it = params_.find(t.text);
    if (it == params_.end()) error(t, "unbound parameter '" + t.text + "'");
    if (!it->second.is_vector) error(t, "scalar parameter '" + t.text + "' used where a vector is required");
    return {VectorRef::Kind::param, t.text};
  }

  NodePtr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        take();
        Node n;
        n.number = t.number;
        return make(std::move(n));
      }
      case Tok::lparen: {
        take();
        NodePtr e = expr();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::ident: break;
      default: error(t, "expected a number, identifier, call or '(', found " + describe(t));
    }
    const Token id = take();
    if (id.text == "dot" || id.text == "norm2" || id.text == "sqrt") {
      expect(Tok::lparen, "'(' after " + id.text);
      Node n;
      if (id.text == "dot") {
        n.kind = NodeKind::dot;
        n.u = vexpr();
        expect(Tok::comma, "','");
        n.v = vexpr();
      } else if (id.text == "norm2") {
        n.kind = NodeKind::norm2;
        n.u = vexpr();
      } else {
        n.kind = NodeKind::sqrt;
        n.lhs = expr();
      }
      expect(Tok::rparen, "')'");
      return make(std::move(n));
    }
    if (id.text == "x" || id.text == "y") {
      error(id, "vector '" + id.text + "' used in scalar context (wrap it in dot or norm2)");
    }
    const auto it = params_.find(id.text);
    if (it == params_.end()) error(id, "unbound parameter '" + id.text + "'");
    if (it->second.is_vector) error(id, "vector parameter '" + id.text + "' used in scalar context");
    Node n;
    n.kind = NodeKind::param;
    n.name = id.text;
    return make(std::move(n));
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
  const ParamTable& params_;
};

std::string number_text(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string vref_text(const VectorRef& r) {
  switch (r.kind) {
    case VectorRef::Kind::x: return "x";
    case VectorRef::Kind::y: return "y";
    case VectorRef::Kind::param: return r.name;
  }
  return "?";
}

}  // namespace

MetricExpr parse(const std::string& text, const ParamTable& params, DeclaredForm form) {
  for (const auto& [name, p] : params) {
    if (reserved(name)) throw std::invalid_argument("parameter name '" + name + "' is reserved");
    if (p.values.empty()) throw std::invalid_argument("parameter '" + name + "' has no value");
  }
  Parser parser(Lexer(text).run(), params);
  MetricExpr e;
  e.root = parser.run();
  e.form = form;
  e.params = params;
  e.source = text;
  return e;
}

std::string print(const Node& n) {
  switch (n.kind) {
    case NodeKind::number: return number_text(n.number);
    case NodeKind::param: return n.name;
    case NodeKind::dot: return "dot(" + vref_text(n.u) + ", " + vref_text(n.v) + ")";
    case NodeKind::norm2: return "norm2(" + vref_text(n.u) + ")";
    case NodeKind::sqrt: return "sqrt(" + print(*n.lhs) + ")";
    case NodeKind::add: return "(" + print(*n.lhs) + " + " + print(*n.rhs) + ")";
    case NodeKind::sub: return "(" + print(*n.lhs) + " - " + print(*n.rhs) + ")";
    case NodeKind::mul: return "(" + print(*n.lhs) + " * " + print(*n.rhs) + ")";
    case NodeKind::div: return "(" + print(*n.lhs) + " / " + print(*n.rhs) + ")";
    case NodeKind::neg: return "-" + print(*n.lhs);
    case NodeKind::pow: return "(" + print(*n.lhs) + ")^" + n.exponent.str();
  }
  return "?";
}

bool same_tree(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::number: return a.number == b.number;
    case NodeKind::param: return a.name == b.name;
    case NodeKind::dot: return a.u == b.u && a.v == b.v;
    case NodeKind::norm2: return a.u == b.u;
    case NodeKind::sqrt:
    case NodeKind::neg: return same_tree(*a.lhs, *b.lhs);
    case NodeKind::pow: return a.exponent == b.exponent && same_tree(*a.lhs, *b.lhs);
    default: return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
  }
}

EvalVars<Jet> jet_vars(const JetSpec& spec, const std::shared_ptr<const Point>& base) {
  EvalVars<Jet> v;
  for (int i = 0; i < spec.dim; ++i) {
    v.x.push_back(Jet::lift(spec, base, Block::x, i));
    v.y.push_back(Jet::lift(spec, base, Block::y, i));
  }
  v.constant = [spec, base](double c) { return Jet::constant(spec, base, c); };
  return v;
}

EvalVars<long double> plain_vars(const std::vector<double>& x, const std::vector<double>& y) {
  EvalVars<long double> v;
  for (double c : x) v.x.push_back(c);
  for (double c : y) v.y.push_back(c);
  v.constant = [](double c) { return static_cast<long double>(c); };
  return v;
}

EvalVars<long double> plain_vars(const std::vector<long double>& x, const std::vector<long double>& y) {
  EvalVars<long double> v{x, y, [](double c) { return static_cast<long double>(c); }};
  return v;
}

namespace {

void check_domain(const MetricExpr& e, const std::vector<double>& x) {
  if (!e.domain_radius) return;
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  if (!(std::sqrt(r2) < *e.domain_radius)) {
    std::ostringstream os;
    os << "point |x| = " << std::sqrt(r2) << " lies outside the chart domain |x| < " << *e.domain_radius;
    throw MetricDomainError(os.str());
  }
}

}  // namespace

Jet eval_raw_jet(const MetricExpr& e, const JetSpec& spec, const Point& base) {
  check_domain(e, base.x);
  auto b = std::make_shared<const Point>(base);
  try {
    return evaluate(e, jet_vars(spec, b));
  } catch (const JetDomainError& err) {
    throw MetricDomainError(err.what());
  }
}

Jet eval_as_jet(const MetricExpr& e, const JetSpec& spec, const Point& base) {
  Jet v = eval_raw_jet(e, spec, base);
  if (e.form == DeclaredForm::F_squared) {
    if (!(v.value() > 0.0)) throw MetricDomainError("F^2 is not positive at the base point");
    return v;
  }
  if (!(v.value() > 0.0)) throw MetricDomainError("F is not positive at the base point");
  return v * v;
}

double eval_F(const MetricExpr& e, const std::vector<double>& x, const std::vector<double>& y) {
  check_domain(e, x);
  long double v = 0;
  try {
    v = evaluate(e, plain_vars(x, y));
  } catch (const JetDomainError& err) {
    throw MetricDomainError(err.what());
  }
  if (e.form == DeclaredForm::F_squared) {
    if (!(v > 0.0L)) throw MetricDomainError("F^2 is not positive");
    return static_cast<double>(std::sqrt(v));
  }
  return static_cast<double>(v);
}

HomogeneityReport check_homogeneity(const MetricExpr& e, const SamplePlan& samples, double tol) {
  HomogeneityReport rep;
  rep.tol = tol;
  for (std::size_t s = 0; s < samples.points.size(); ++s) {
    const Point& p = samples.points[s];
    const double f = eval_F(e, p.x, p.y);
    for (double lambda : {0.5, 2.0, 3.0}) {
      std::vector<double> ly = p.y;
      for (double& c : ly) c *= lambda;
      const double r = std::abs(eval_F(e, p.x, ly) - lambda * f) / (lambda * std::abs(f));
      if (r > rep.residual) {
        rep.residual = r;
        rep.worst_sample = s;
      }
    }
  }
  rep.passed = rep.residual < tol;
  return rep;
}

}  // namespace finsler
