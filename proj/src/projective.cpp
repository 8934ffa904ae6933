#include "finsler/projective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finsler {

namespace {

Jet ylift(const Jet& like, int i) { return Jet::lift(like.spec(), like.base(), Block::y, i); }

}  // namespace

double ProjectiveFactor::value(const std::vector<double>& x, const std::vector<double>& y) const {
  return jet({static_cast<int>(x.size()), 0, 0}, Point{x, y}).value();
}

ProjectiveFactor zero_factor() {
  return {"zero", "P = 0", [](const JetSpec& spec, const Point& p) {
            return Jet::constant(spec, std::make_shared<const Point>(p), 0.0);
          }};
}

ProjectiveFactor metric_factor(const MetricDef& def, double c) {
  std::ostringstream os;
  os << "P = " << c << " F_" << def.name;
  return {"metric_" + def.name, os.str(), [def, c](const JetSpec& spec, const Point& p) { return c * def.f_jet(spec, p); }};
}

ProjectiveFactor hamel_factor(const MetricDef& def) {
  return {"hamel_" + def.name, "P = y^k dF/dx^k / (2F) for F = " + def.name, [def](const JetSpec& spec, const Point& p) {
            const Jet F = def.f_jet({spec.dim, spec.kx + 1, spec.ky}, p);
            Jet s = F.dx(0) * ylift(F.dx(0), 0);
            for (int k = 1; k < spec.dim; ++k) s = s + F.dx(k) * ylift(F.dx(k), k);
            return s / (2.0 * F);
          }};
}

ProjectiveFactor polynomial_factor(std::vector<double> b, double c0, std::vector<double> c1, double w) {
  std::ostringstream os;
  os << "P = <b, y> + (" << c0 << " + <c1, x>) |y| + " << w << " (x^2 y^1 - x^1 y^2)";
  return {"polynomial", os.str(), [b, c0, c1, w](const JetSpec& spec, const Point& p) {
            const auto base = std::make_shared<const Point>(p);
            const int n = spec.dim;
            std::vector<Jet> x, y;
            for (int i = 0; i < n; ++i) {
              x.push_back(Jet::lift(spec, base, Block::x, i));
              y.push_back(Jet::lift(spec, base, Block::y, i));
            }
            Jet P = Jet::constant(spec, base, 0.0);
            Jet c = Jet::constant(spec, base, c0);
            for (int i = 0; i < n; ++i) {
              if (i < static_cast<int>(b.size()) && b[i] != 0.0) P = P + b[i] * y[i];
              if (i < static_cast<int>(c1.size()) && c1[i] != 0.0) c = c + c1[i] * x[i];
            }
            if (c0 != 0.0 || std::any_of(c1.begin(), c1.end(), [](double v) { return v != 0.0; })) {
              P = P + c * sqrt(norm2(y));
            }
            if (w != 0.0) P = P + w * (x[1] * y[0] - x[0] * y[1]);
            return P;
          }};
}

SprayData apply_projective(const SprayData& s, const Jet& P) {
  std::vector<Jet> G;
  for (int i = 0; i < s.dim; ++i) G.push_back(s.G(i) + P * ylift(P, i));
  return spray_from_coefficients(std::move(G));
}

JetTensor projective_q(const SprayData& s, const Jet& P) {
  const int n = s.dim;
  JetTensor Q;
  Q.dim = n;
  Q.variance = {Variance::down};
  Q.y_degree = 2;
  Q.point = P.base();
  std::vector<Jet> dP;
  for (int m = 0; m < n; ++m) dP.push_back(P.dy(m));
  for (int i = 0; i < n; ++i) {
    Jet q = P.dx(i) - P * dP[i];
    for (int m = 0; m < n; ++m) q = q - s.N(m, i) * dP[m];
    Q.comps.push_back(std::move(q));
  }
  return Q;
}

JetTensor projective_q2(const JetTensor& Q) {
  const int n = Q.dim;
  JetTensor Q2;
  Q2.dim = n;
  Q2.variance = {Variance::down, Variance::down};
  Q2.y_degree = Q.y_degree - 1;
  Q2.point = Q.point;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q2.comps.push_back(Q(j).dy(i) - Q(i).dy(j));
  return Q2;
}

std::vector<std::string> fixture_names() {
  return {"funk_pair", "bryant_pair", "euclidean_self", "noncproj_control", "riemannian_generic"};
}

ProjectiveFixture fixture_get(const std::string& name, int dim) {
  ProjectiveFixture fx;
  fx.name = name;
  const CatalogOptions opts{dim, {}};
  if (name == "funk_pair") {
    fx.description = "Euclidean spray changed by P = F_funk / 2 gives the Funk spray";
    fx.source = catalog_get("euclidean", opts);
    fx.target = catalog_get("funk", opts);
    fx.factor = metric_factor(*fx.target, 0.5);
  } else if (name == "bryant_pair") {
    fx.description = "Euclidean spray changed by the Hamel factor of the projectively flat Bryant metric";
    fx.source = catalog_get("euclidean", opts);
    fx.target = catalog_get("bryant", opts);
    fx.factor = hamel_factor(*fx.target);
  } else if (name == "euclidean_self") {
    fx.description = "Euclidean spray with P = 0";
    fx.source = catalog_get("euclidean", opts);
    fx.target = fx.source;
    fx.factor = zero_factor();
  } else if (name == "noncproj_control") {
    fx.description = "Euclidean spray with the twisted 1-form P = 0.3 (x^2 y^1 - x^1 y^2); Q_12 = 0.6";
    fx.source = catalog_get("euclidean", opts);
    fx.factor = polynomial_factor({}, 0.0, {}, 0.3);
    fx.c_projective = false;
  } else if (name == "riemannian_generic") {
    fx.description = "riemannian_quadratic with P = <b, y> + (0.2 + 0.1 x^1) |y|";
    fx.source = catalog_get("riemannian_quadratic", opts);
    std::vector<double> b(dim, 0.0), c1(dim, 0.0);
    b[0] = 0.1;
    b[1] = -0.2;
    c1[0] = 0.1;
    fx.factor = polynomial_factor(b, 0.2, c1, 0.0);
    fx.c_projective = false;
  } else {
    std::string list;
    for (const auto& n : fixture_names()) list += (list.empty() ? "" : ", ") + n;
    throw CatalogError("unknown projective fixture '" + name + "' (known: " + list + ")");
  }
  return fx;
}

ProjectivePair make_pair(const ProjectiveFixture& fx, const Point& p, std::optional<JetSpec> spec) {
  const JetSpec s = spec.value_or(default_spec(fx.source.dim));
  Geometry src(fx.source, p, s);
  Jet P = fx.factor.jet(s, p);
  SprayData tilde = apply_projective(src.spray(), P);
  Jet F2 = fx.target ? fx.target->f2_jet(s, p) : src.F2();
  Geometry tr(std::move(F2), std::move(tilde));
  return {std::move(src), std::move(tr), std::move(P)};
}

double cproj_residual(const ProjectiveFixture& fx, const SamplePlan& plan) {
  double worst = 0.0;
  for (const auto& p : plan.points) {
    Geometry src(fx.source, p);
    const Jet P = fx.factor.jet(default_spec(fx.source.dim), p);
    worst = std::max(worst, max_abs(values(projective_q2(projective_q(src.spray(), P)))));
  }
  return worst;
}

FixtureIdentities fixture_identities(const ProjectiveFixture& fx, const SamplePlan& plan) {
  FixtureIdentities out;
  const int n = fx.source.dim;
  if (fx.target) out.target_spray = 0.0;
  for (const auto& p : plan.points) {
    ProjectivePair pr = make_pair(fx, p);
    const SprayData& s = pr.source.spray();
    const SprayData& st = pr.transformed.spray();
    const JetTensor Q2 = projective_q2(projective_q(s, pr.P));
    out.q2 = std::max(out.q2, max_abs(values(Q2)));
    out.douglas_difference =
        std::max(out.douglas_difference, max_abs_diff(values(pr.transformed.D()), values(pr.source.D())));

    JetTensor Pjk;
    Pjk.dim = n;
    Pjk.variance = {Variance::down, Variance::down};
    Pjk.y_degree = -1;
    Pjk.point = pr.P.base();
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) Pjk.comps.push_back(pr.P.dy(j).dy(k));

    const TensorValue B = values(s.B), Bt = values(st.B);
    for_each_index(n, 4, [&](const Index& x) {
      const int j = x[0], i = x[1], k = x[2], l = x[3];
      double rel = Pjk(j, k).dy(l).value() * p.y[i];
      if (i == l) rel += Pjk(j, k).value();
      if (i == k) rel += Pjk(j, l).value();
      if (i == j) rel += Pjk(k, l).value();
      out.berwald_relation = std::max(out.berwald_relation, std::abs(Bt[x] - B[x] - rel));
    });
    const TensorValue E = values(pr.source.E()), Et = values(pr.transformed.E());
    const TensorValue Pv = values(Pjk);
    for_each_index(n, 2, [&](const Index& x) {
      out.mean_berwald_relation =
          std::max(out.mean_berwald_relation, std::abs(Et[x] - E[x] - 0.5 * (n + 1) * Pv[x]));
    });

    const TensorValue P0 = values(hcov0(Pjk, s));
    for_each_index(n, 2, [&](const Index& x) {
      double yq = 0.0;
      for (int m = 0; m < n; ++m) yq += p.y[m] * Q2(x[0], m).dy(x[1]).value();
      out.p0_relation = std::max(out.p0_relation, std::abs(P0[x] + yq));
      out.p0_relation_plus = std::max(out.p0_relation_plus, std::abs(P0[x] - yq));
    });

    out.h_difference = std::max(out.h_difference, max_abs_diff(values(pr.transformed.H()), values(pr.source.H())));
    out.hcov_consistency = std::max(
        out.hcov_consistency, max_abs_diff(values(pr.transformed.H()), values(hcov0(pr.transformed.E(), s))));
    if (fx.target) {
      Geometry tg(*fx.target, p);
      *out.target_spray = std::max(*out.target_spray, max_abs_diff(values(st.G), values(tg.spray().G)));
    }
  }
  return out;
}

std::string to_string(InvarianceOutcome o) {
  switch (o) {
    case InvarianceOutcome::holds: return "invariance holds";
    case InvarianceOutcome::broken: return "invariance broken";
    case InvarianceOutcome::untested: return "untested";
    case InvarianceOutcome::skipped: return "skipped";
  }
  return "?";
}

InvarianceReport verify_invariance(const ProjectiveFixture& fx, Predicate p, const SamplePlan& plan, double tol) {
  InvarianceReport r;
  r.fixture = fx.name;
  r.predicate = predicate_id(p);
  r.cproj_residual = cproj_residual(fx, plan);
  r.c_projective = r.cproj_residual < tol;
  if (p == Predicate::gbw && !r.c_projective) {
    std::ostringstream os;
    os << "pair is not C-projective (max |Q_ij| = " << r.cproj_residual << "), GBW invariance is not claimed";
    r.outcome = InvarianceOutcome::skipped;
    r.detail = os.str();
    return r;
  }
  std::vector<Geometry> src, tr;
  for (const auto& pt : plan.points) {
    ProjectivePair pr = make_pair(fx, pt);
    src.push_back(std::move(pr.source));
    tr.push_back(std::move(pr.transformed));
  }
  r.source = evaluate_predicate(src, p, tol);
  r.transformed = evaluate_predicate(tr, p, tol);
  const Verdict a = r.source->verdict, b = r.transformed->verdict;
  if (a == Verdict::indeterminate || b == Verdict::indeterminate) {
    r.outcome = InvarianceOutcome::untested;
    r.detail = "a verdict is indeterminate at this tolerance";
  } else if (a == Verdict::holds && b == Verdict::holds) {
    r.outcome = InvarianceOutcome::holds;
    r.detail = "both sides hold";
  } else if (a == Verdict::fails && b == Verdict::fails) {
    const double ratio = r.transformed->residual / r.source->residual;
    std::ostringstream os;
    os << "both sides fail, residual ratio " << ratio;
    r.outcome = ratio >= 0.1 && ratio <= 10.0 ? InvarianceOutcome::holds : InvarianceOutcome::broken;
    r.detail = os.str();
  } else {
    r.outcome = InvarianceOutcome::broken;
    r.detail = "verdicts differ: source " + to_string(a) + ", transformed " + to_string(b);
  }
  return r;
}

namespace {

double segment_distance(const std::vector<double>& p, const std::vector<double>& a, const std::vector<double>& b) {
  double ab2 = 0.0, t = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ab2 += (b[i] - a[i]) * (b[i] - a[i]);
    t += (p[i] - a[i]) * (b[i] - a[i]);
  }
  t = ab2 > 0.0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = a[i] + t * (b[i] - a[i]) - p[i];
    d += c * c;
  }
  return std::sqrt(d);
}

double arc_length(const std::vector<GeodesicPoint>& path) {
  double s = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < path[k].x.size(); ++i) d += std::pow(path[k].x[i] - path[k - 1].x[i], 2);
    s += std::sqrt(d);
  }
  return s;
}

}  // namespace

double path_deviation(const std::vector<GeodesicPoint>& a, const std::vector<GeodesicPoint>& b) {
  const bool a_short = arc_length(a) <= arc_length(b);
  const auto& shortp = a_short ? a : b;
  const auto& longp = a_short ? b : a;
  double worst = 0.0;
  for (const auto& q : shortp) {
    double best = INFINITY;
    for (std::size_t k = 1; k < longp.size(); ++k) best = std::min(best, segment_distance(q.x, longp[k - 1].x, longp[k].x));
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<GeodesicPoint> integrate_projective_geodesic(const ProjectiveFixture& fx, std::vector<double> x0,
                                                         std::vector<double> y0, double t_end, int steps) {
  const Domain& dom = fx.target ? fx.target->domain : fx.source.domain;
  return integrate_geodesic(
      [&fx](const std::vector<double>& x, const std::vector<double>& v) {
        std::vector<double> g = spray_value(fx.source, x, v);
        const double P = fx.factor.value(x, v);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += P * v[i];
        return g;
      },
      dom, std::move(x0), std::move(y0), t_end, steps);
}

}  // namespace finsler
