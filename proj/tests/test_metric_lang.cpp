#include <cmath>
#include <random>

#include "doctest.h"
#include "finsler/metric_lang.hpp"

using namespace finsler;

namespace {

const char* kFunk =
    "(sqrt(norm2(y) - (norm2(x)*norm2(y) - dot(x,y)^2)) + dot(x,y)) / (1 - norm2(x))";

SamplePlan plan(std::vector<Point> pts) { return {0, std::move(pts)}; }

// Random well-typed tree over the whole grammar.
NodePtr random_tree(std::mt19937_64& rng, int depth, const ParamTable& params) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 10);
  std::uniform_real_distribution<double> num(0.0, 3.0);
  auto vref = [&]() {
    switch (rng() % 3) {
      case 0: return VectorRef{VectorRef::Kind::x, ""};
      case 1: return VectorRef{VectorRef::Kind::y, ""};
      default: return VectorRef{VectorRef::Kind::param, "a"};
    }
  };
  Node n;
  switch (pick(rng)) {
    case 0: n.kind = NodeKind::number; n.number = num(rng); break;
    case 1: n.kind = NodeKind::param; n.name = "k"; break;
    case 2: n.kind = NodeKind::dot; n.u = vref(); n.v = vref(); break;
    case 3: n.kind = NodeKind::norm2; n.u = vref(); break;
    case 4: n.kind = NodeKind::sqrt; n.lhs = random_tree(rng, depth - 1, params); break;
    case 5: n.kind = NodeKind::neg; n.lhs = random_tree(rng, depth - 1, params); break;
    case 6: {
      n.kind = NodeKind::pow;
      n.lhs = random_tree(rng, depth - 1, params);
      const long p = static_cast<long>(rng() % 7) - 3;
      const long q = static_cast<long>(rng() % 3) + 1;
      n.exponent = Rational::make(p, q);
      if (n.exponent == Rational{1, 2}) n.exponent = Rational{2, 1};
      break;
    }
    default: {
      const NodeKind ks[] = {NodeKind::add, NodeKind::sub, NodeKind::mul, NodeKind::div};
      n.kind = ks[rng() % 4];
      n.lhs = random_tree(rng, depth - 1, params);
      n.rhs = random_tree(rng, depth - 1, params);
    }
  }
  return std::make_shared<const Node>(std::move(n));
}

}  // namespace

TEST_CASE("parse: catalog expressions") {
  const MetricExpr eu = parse("norm2(y)", {}, DeclaredForm::F_squared);
  CHECK(eu.root->kind == NodeKind::norm2);
  CHECK(eu.root->u.kind == VectorRef::Kind::y);

  const MetricExpr funk = parse(kFunk);
  CHECK(funk.root->kind == NodeKind::div);
  CHECK(funk.root->rhs->kind == NodeKind::sub);
  CHECK(funk.root->lhs->kind == NodeKind::add);
  CHECK(funk.root->lhs->lhs->kind == NodeKind::sqrt);
}

TEST_CASE("parse: diagnostics carry positions") {
  try {
    parse("dot(x y)");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 7);
    CHECK(e.message().find("','") != std::string::npos);
  }
  try {
    parse("norm2(y) +\n  3 * ) ");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
  }
  CHECK_THROWS_AS(parse("x + 1"), ParseError);
  CHECK_THROWS_AS(parse("sqrt(norm2(y)) * c"), ParseError);
  CHECK_THROWS_AS(parse("norm2(k)", {{"k", Param::scalar(1)}}), ParseError);
  CHECK_THROWS_AS(parse("a * norm2(y)", {{"a", Param::vector({1, 2})}}), ParseError);
  CHECK_THROWS_AS(parse("norm2(y)^(1/0)"), ParseError);
  CHECK_THROWS_AS(parse("norm2(y)^1.5"), ParseError);
  CHECK_THROWS_AS(parse("norm2(y) $"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("parse: half powers become sqrt, other rationals stay powers") {
  CHECK(parse("norm2(y)^(1/2)").root->kind == NodeKind::sqrt);
  CHECK(parse("norm2(y)^(2/4)").root->kind == NodeKind::sqrt);
  const MetricExpr p = parse("norm2(y)^(-3/6)");
  CHECK(p.root->kind == NodeKind::pow);
  CHECK(p.root->exponent == Rational{-1, 2});
  CHECK(parse("- -norm2(y)").root->lhs->kind == NodeKind::neg);
}

TEST_CASE("property: parse(print(ast)) reproduces the tree") {
  std::mt19937_64 rng(99);
  const ParamTable params{{"k", Param::scalar(0.5)}, {"a", Param::vector({0.1, 0.2})}};
  for (int i = 0; i < 300; ++i) {
    const NodePtr t = random_tree(rng, 5, params);
    const std::string text = print(*t);
    const MetricExpr back = parse(text, params);
    INFO(text);
    CHECK(same_tree(*t, *back.root));
    CHECK(print(*back.root) == text);
  }
}

TEST_CASE("eval_as_jet examples") {
  const JetSpec spec{2, 2, 4};
  const MetricExpr eu = parse("norm2(y)", {}, DeclaredForm::F_squared);
  const Jet j = eval_as_jet(eu, spec, {{0.1, 0.2}, {3, 4}});
  CHECK(j.value() == 25.0);
  CHECK(j.partial(MultiIndex{0, 0}, MultiIndex{2, 0}) == 2.0);
  CHECK(j.partial(MultiIndex{0, 0}, MultiIndex{0, 2}) == 2.0);
  CHECK(j.partial(MultiIndex{0, 0}, MultiIndex{1, 1}) == 0.0);

  MetricExpr funk = parse(kFunk);
  funk.domain_radius = 1.0;
  CHECK(eval_as_jet(funk, spec, {{0, 0}, {1, 0}}).value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(eval_as_jet(funk, spec, {{1.0, 0}, {1, 0}}), MetricDomainError);
  CHECK_THROWS_AS(eval_as_jet(funk, spec, {{1.2, 0}, {-1, 0}}), MetricDomainError);
  // Without a declared domain the pole at |x| = 1 still surfaces as a failure.
  funk.domain_radius.reset();
  try {
    eval_as_jet(funk, spec, {{1.0, 0}, {1, 0}});
    FAIL("expected a domain error");
  } catch (const MetricDomainError& e) {
    CHECK(std::string(e.what()).find("division by") != std::string::npos);
  }

  const MetricExpr bad = parse("sqrt(dot(x, y))");
  try {
    eval_as_jet(bad, spec, {{-1, 0}, {1, 0}});
    FAIL("expected a domain error");
  } catch (const MetricDomainError& e) {
    CHECK(std::string(e.what()).find("sqrt(dot(x, y))") != std::string::npos);
  }
}

TEST_CASE("check_homogeneity") {
  const SamplePlan pts = plan({{{0.1, 0.2}, {0.6, 0.8}}, {{-0.3, 0.4}, {1, 0}}, {{0.5, -0.1}, {0, -1}}});
  CHECK(check_homogeneity(parse("norm2(y)", {}, DeclaredForm::F_squared), pts, 1e-12).residual == 0.0);
  const HomogeneityReport f = check_homogeneity(parse(kFunk), pts, 1e-12);
  CHECK(f.passed);
  CHECK(f.residual < 1e-12);
  const HomogeneityReport wrong = check_homogeneity(parse("norm2(y)"), pts, 1e-6);
  CHECK_FALSE(wrong.passed);
  CHECK(wrong.residual == doctest::Approx(2.0));  // |l^2 - l| / l at l = 3
}

TEST_CASE("property: evaluation commutes with jet algebra") {
  std::mt19937_64 rng(5);
  const ParamTable params{{"k", Param::scalar(0.5)}, {"a", Param::vector({0.1, 0.2})}};
  const JetSpec spec{2, 1, 3};
  const auto base = std::make_shared<const Point>(Point{{0.3, -0.2}, {0.8, 0.6}});
  const EvalVars<Jet> vars = jet_vars(spec, base);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const NodePtr t = random_tree(rng, 3, params);
    if (!t->lhs || !t->rhs) continue;
    MetricExpr whole{t, DeclaredForm::F, params, "", {}};
    MetricExpr left{t->lhs, DeclaredForm::F, params, "", {}};
    MetricExpr right{t->rhs, DeclaredForm::F, params, "", {}};
    try {
      const Jet w = evaluate(whole, vars);
      const Jet a = evaluate(left, vars);
      const Jet b = evaluate(right, vars);
      Jet composed = a;
      switch (t->kind) {
        case NodeKind::add: composed = a + b; break;
        case NodeKind::sub: composed = a - b; break;
        case NodeKind::mul: composed = a * b; break;
        case NodeKind::div: composed = a / b; break;
        default: continue;
      }
      CHECK(w.coeffs() == composed.coeffs());
      ++checked;
    } catch (const MetricDomainError&) {
      // Random trees may leave the domain; those draws carry no information.
    }
  }
  CHECK(checked > 20);
}
