#include <cmath>

#include "doctest.h"
#include "finsler/metric_library.hpp"

using namespace finsler;

namespace {

MultiIndex e(int n, int i) { return MultiIndex::unit(n, i); }

// g_ij = 1/2 d^2 F^2 / dy^i dy^j, then a plain Cholesky.
bool hessian_positive(const MetricDef& d, const Point& p) {
  const int n = d.dim;
  const Jet f2 = d.f2_jet({n, 0, 2}, p);
  double g[kMaxDim][kMaxDim];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[i][j] = 0.5 * f2.partial(MultiIndex(n), e(n, i) + e(n, j));
  for (int j = 0; j < n; ++j) {
    double s = g[j][j];
    for (int k = 0; k < j; ++k) s -= g[j][k] * g[j][k];
    if (!(s > 0)) return false;
    g[j][j] = std::sqrt(s);
    for (int i = j + 1; i < n; ++i) {
      double t = g[i][j];
      for (int k = 0; k < j; ++k) t -= g[i][k] * g[j][k];
      g[i][j] = t / g[j][j];
    }
  }
  return true;
}

}  // namespace

TEST_CASE("catalog lookup") {
  CHECK(catalog_names().size() == 7);
  CHECK_THROWS_AS(catalog_get("nope"), CatalogError);
  CHECK_THROWS_AS(catalog_get("bryant", {std::nullopt, {{"k", Param::scalar(1)}}}), CatalogError);
  CHECK_THROWS_AS(catalog_get("shen_avector", {std::nullopt, {{"a", Param::vector({1, 2})}}}), CatalogError);
  CHECK_THROWS_AS(catalog_get("euclidean", {5, {}}), CatalogError);

  const MetricDef b = catalog_get("bryant", {2, {{"eps", Param::scalar(0.25)}}});
  CHECK(b.dim == 2);
  CHECK(b.params.at("eps").values[0] == 0.25);
  CHECK(b.expr->params.at("eps").values[0] == 0.25);

  for (int n = 2; n <= 4; ++n) {
    const MetricDef s = catalog_get("shen_avector", {n, {}});
    CHECK(s.params.at("a").values.size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("every catalog metric is homogeneous and strongly convex on its samples") {
  for (const auto& name : catalog_names()) {
    for (int n : {2, 3}) {
      CAPTURE(name);
      CAPTURE(n);
      const MetricDef d = catalog_get(name, {n, {}});
      const SamplePlan plan = sample_domain(d, 12, 11);
      for (const auto& p : plan.points) {
        const double f = d.F(p.x, p.y);
        for (double l : {0.5, 2.0, 3.0}) {
          std::vector<double> ly = p.y;
          for (double& c : ly) c *= l;
          CHECK(std::abs(d.F(p.x, ly) - l * f) <= 1e-12 * l * f);
        }
        CHECK(hessian_positive(d, p));
      }
    }
  }
}

TEST_CASE("native closed forms agree with the canonical text bit for bit") {
  for (const auto& name : catalog_names()) {
    const MetricDef d = catalog_get(name);
    if (!d.expr) continue;
    CAPTURE(name);
    const MetricExpr reparsed = parse(print(*d.expr->root), d.params, d.form);
    for (const auto& p : sample_domain(d, 4, 3).points) {
      const JetSpec spec{d.dim, 2, 7};
      const Jet a = d.raw_jet(spec, p);
      const Jet b = eval_raw_jet(reparsed, spec, p);
      CHECK(a.coeffs() == b.coeffs());
      const long double pa = d.native->plain(plain_vars(p.x, p.y), d.params);
      const long double pb = evaluate(*d.expr, plain_vars(p.x, p.y));
      CHECK(pa == pb);
    }
  }
}

TEST_CASE("Funk metric satisfies dF/dx^k = F dF/dy^k") {
  for (int n : {2, 3, 4}) {
    const MetricDef d = catalog_get("funk", {n, {}});
    double worst = 0.0;
    for (const auto& p : sample_domain(d, 20, 5).points) {
      const Jet f = d.f_jet({n, 1, 1}, p);
      for (int k = 0; k < n; ++k) {
        const double r = f.partial(e(n, k), MultiIndex(n)) - f.value() * f.partial(MultiIndex(n), e(n, k));
        worst = std::max(worst, std::abs(r));
      }
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("Funk value at the origin is the Euclidean norm") {
  const MetricDef d = catalog_get("funk");
  CHECK(d.F({0, 0, 0}, {0, 3, 4}) == doctest::Approx(5.0));
  CHECK_THROWS_AS(d.F({1, 0, 0}, {0, 1, 0}), MetricDomainError);
  CHECK_THROWS_AS(d.f2_jet({3, 2, 7}, Point{{0.7, 0.8, 0}, {1, 0, 0}}), MetricDomainError);
}

TEST_CASE("sample_domain") {
  const MetricDef funk = catalog_get("funk");
  const SamplePlan a = sample_domain(funk, 20, 7);
  const SamplePlan b = sample_domain(funk, 20, 7);
  REQUIRE(a.points.size() == 20);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const auto& p = a.points[i];
    CHECK(p.x == b.points[i].x);
    CHECK(p.y == b.points[i].y);
    double rx = 0, ry = 0;
    for (int k = 0; k < 3; ++k) {
      rx += p.x[k] * p.x[k];
      ry += p.y[k] * p.y[k];
    }
    CHECK(std::sqrt(rx) <= 0.9);
    CHECK(ry == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(sample_domain(funk, 20, 8).points[0].x != a.points[0].x);

  MetricDef never = catalog_get("euclidean");
  never.domain.extra = [](const std::vector<double>&) { return false; };
  CHECK_THROWS_AS(sample_domain(never, 1, 0), SamplingError);
}

TEST_CASE("config files") {
  const std::string text =
      "# Randers metric with a constant wind\n"
      "name = wind\n"
      "dim = 3\n"
      "form = F\n"
      "param b = 0.2, 0, 0\n"
      "param k = 0.5\n"
      "expr = sqrt(norm2(y)) + \\\n"
      "       k * dot(b, y)\n"
      "domain_radius = 2\n";
  const MetricDef d = parse_metric_config(text);
  CHECK(d.name == "wind");
  CHECK(d.dim == 3);
  CHECK(d.form == DeclaredForm::F);
  CHECK(d.domain.chart_radius == 2.0);
  CHECK(d.domain.sample_radius == doctest::Approx(1.8));
  CHECK(d.F({0, 0, 0}, {1, 0, 0}) == doctest::Approx(1.1));

  const MetricDef o = parse_metric_config(text, "<config>", {{"k", Param::scalar(1.0)}});
  CHECK(o.F({0, 0, 0}, {1, 0, 0}) == doctest::Approx(1.2));

  SUBCASE("expression errors point into the file") {
    const std::string bad = "dim = 2\nexpr = norm2(y) +\\\n  dot(x y)\n";
    try {
      parse_metric_config(bad, "m.cfg");
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(err.line() == 3);
      CHECK(err.column() == 9);
      CHECK(std::string(err.what()).rfind("m.cfg:3:9:", 0) == 0);
    }
    try {
      parse_metric_config("expr = norm2(q)\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
      CHECK(err.line() == 1);
      CHECK(err.column() == 14);
    }
  }
  SUBCASE("structural errors") {
    CHECK_THROWS_AS(parse_metric_config("dim = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_metric_config("colour = 3\nexpr = norm2(y)\n"), ConfigError);
    CHECK_THROWS_AS(parse_metric_config("dim = 2\nparam a = 1, 2, 3\nexpr = dot(a,y)\n"), ConfigError);
    CHECK_THROWS_AS(parse_metric_config("form = G\nexpr = norm2(y)\n"), ConfigError);
    CHECK_THROWS_AS(parse_metric_config("expr = norm2(y)\n", "c", {{"k", Param::scalar(1)}}), ConfigError);
  }
}

TEST_CASE("Busemann-Hausdorff volume gradient") {
  SUBCASE("Euclidean density is constant") {
    for (int n : {2, 3}) {
      const auto g = bh_log_volume_gradient(catalog_get("euclidean", {n, {}}), std::vector<double>(n, 0.2));
      for (double c : g) CHECK(std::abs(c) < 1e-13);
    }
  }
  SUBCASE("conformally flat metric") {
    for (int n : {2, 3}) {
      ParamTable p;
      std::vector<double> a0(n * n, 0.0), a1(n * n * n, 0.0), a2(n * n * n, 0.0);
      for (int i = 0; i < n; ++i) {
        a0[i * n + i] = 1.0;
        a1[(i * n + i) * n] = 0.15;
      }
      p["A0"] = Param::vector(a0);
      p["A1"] = Param::vector(a1);
      p["A2"] = Param::vector(a2);
      const MetricDef d = catalog_get("riemannian_quadratic", {n, p});
      std::vector<double> x(n, 0.1);
      const auto g = bh_log_volume_gradient(d, x);
      CHECK(g[0] == doctest::Approx(0.5 * n * 0.15 / (1 + 0.15 * x[0])).epsilon(1e-12));
      for (int m = 1; m < n; ++m) CHECK(std::abs(g[m]) < 1e-13);
    }
  }
}
