#include <cmath>

#include "doctest.h"
#include "finsler/projective.hpp"

using namespace finsler;

namespace {

SamplePlan plan_for(const ProjectiveFixture& fx, int count, std::uint64_t seed) {
  return sample_domain(fx.target ? *fx.target : fx.source, count, seed);
}

}  // namespace

TEST_CASE("projective factors are 1-homogeneous") {
  for (const auto& name : fixture_names()) {
    CAPTURE(name);
    const ProjectiveFixture fx = fixture_get(name);
    for (const auto& p : plan_for(fx, 5, 1).points) {
      const double v = fx.factor.value(p.x, p.y);
      for (double l : {0.5, 2.0, 3.0}) {
        std::vector<double> ly = p.y;
        for (double& c : ly) c *= l;
        CHECK(std::abs(fx.factor.value(p.x, ly) - l * v) < 1e-12 * std::max(1.0, std::abs(l * v)));
      }
    }
  }
}

TEST_CASE("apply_projective") {
  SUBCASE("P = 0 is the identity") {
    const ProjectiveFixture fx = fixture_get("euclidean_self");
    const MetricDef rq = catalog_get("riemannian_quadratic");
    for (const auto& p : sample_domain(rq, 3, 2).points) {
      Geometry g(rq, p);
      const SprayData t = apply_projective(g.spray(), fx.factor.jet(default_spec(3), p));
      CHECK(max_abs_diff(values(t.G), values(g.spray().G)) == 0.0);
      CHECK(max_abs_diff(values(t.B), values(g.spray().B)) == 0.0);
    }
  }
  SUBCASE("Euclidean changed by half the Funk metric is the Funk spray") {
    for (int n : {2, 3}) {
      const ProjectiveFixture fx = fixture_get("funk_pair", n);
      const FixtureIdentities id = fixture_identities(fx, plan_for(fx, 8, 3));
      REQUIRE(id.target_spray.has_value());
      CHECK(*id.target_spray < 1e-8);
    }
  }
  SUBCASE("Bryant is projectively flat through its Hamel factor") {
    const ProjectiveFixture fx = fixture_get("bryant_pair");
    CHECK(*fixture_identities(fx, plan_for(fx, 5, 3)).target_spray < 1e-8);
  }
}

TEST_CASE("C-projective residual") {
  const ProjectiveFixture self = fixture_get("euclidean_self");
  CHECK(cproj_residual(self, plan_for(self, 3, 1)) == 0.0);

  const ProjectiveFixture funk = fixture_get("funk_pair");
  const SamplePlan plan = plan_for(funk, 10, 4);
  CHECK(cproj_residual(funk, plan) < 1e-7);
  // Q_i itself does not vanish: Q_i = F F_i / 4 for this pair.
  double qi = 0.0;
  for (const auto& p : plan.points) {
    ProjectivePair pr = make_pair(funk, p);
    const TensorValue Q = values(projective_q(pr.source.spray(), pr.P));
    const Jet F = funk.target->f_jet({3, 0, 1}, p);
    for (int i = 0; i < 3; ++i) {
      CHECK(Q(i) == doctest::Approx(0.25 * F.value() * F.dy(i).value()).epsilon(1e-10));
      qi = std::max(qi, std::abs(Q(i)));
    }
  }
  CHECK(qi > 1e-2);

  const ProjectiveFixture control = fixture_get("noncproj_control");
  const double r = cproj_residual(control, plan_for(control, 5, 4));
  CHECK(r > 10 * 1e-6);
  CHECK(r == doctest::Approx(0.6));
}

TEST_CASE("identities between the two sprays") {
  for (const auto& name : fixture_names()) {
    for (int n : {2, 3}) {
      CAPTURE(name);
      CAPTURE(n);
      const ProjectiveFixture fx = fixture_get(name, n);
      const FixtureIdentities id = fixture_identities(fx, plan_for(fx, 6, 5));
      CHECK(id.douglas_difference < 1e-7);
      CHECK(id.berwald_relation < 1e-8);
      CHECK(id.mean_berwald_relation < 1e-8);
      // the horizontal derivative of any tensor along y is the same for both sprays
      CHECK(id.hcov_consistency < 1e-8);
      // P_jk|0 = y^m Q_jm.k for every projective factor
      CHECK(id.p0_relation_plus < 1e-8);
      if (fx.c_projective) {
        CHECK(id.q2 < 1e-7);
        CHECK(id.p0_relation < 1e-6);
        CHECK(id.h_difference < 1e-6);
      }
    }
  }
  SUBCASE("the sign of the P0 relation is observable off the C-projective class") {
    const ProjectiveFixture fx = fixture_get("riemannian_generic");
    const FixtureIdentities id = fixture_identities(fx, plan_for(fx, 4, 5));
    CHECK(id.p0_relation > 1e-3);
    CHECK(id.h_difference > 1e-3);
  }
}

TEST_CASE("projectively related sprays share unparametrized geodesics") {
  SUBCASE("Euclidean lines are Funk geodesics") {
    const ProjectiveFixture fx = fixture_get("funk_pair");
    const std::vector<double> x0{0.1, 0.2, -0.1}, y0{0.6, -0.48, 0.64};
    const auto a = integrate_geodesic(fx.source, x0, y0, 0.5, 200);
    const auto b = integrate_projective_geodesic(fx, x0, y0, 0.5, 200);
    const auto c = integrate_geodesic(*fx.target, x0, y0, 0.5, 200);
    CHECK(path_deviation(a, b) < 1e-4);
    CHECK(path_deviation(b, c) < 1e-8);
  }
  SUBCASE("Riemannian source with a generic factor") {
    const ProjectiveFixture fx = fixture_get("riemannian_generic");
    const std::vector<double> x0{0.1, 0.0, 0.2}, y0{0.0, 0.8, 0.6};
    const auto a = integrate_geodesic(fx.source, x0, y0, 0.6, 300);
    const auto b = integrate_projective_geodesic(fx, x0, y0, 0.6, 300);
    CHECK(path_deviation(a, b) < 1e-4);
    // same paths, different speed
    double speed = 0.0;
    for (std::size_t i = 0; i < 3; ++i) speed += std::abs(a.back().v[i] - b.back().v[i]);
    CHECK(speed > 1e-3);
  }
}

TEST_CASE("verify_invariance") {
  SUBCASE("Funk pair") {
    const ProjectiveFixture fx = fixture_get("funk_pair");
    const SamplePlan plan = plan_for(fx, 6, 9);
    const InvarianceReport gbw = verify_invariance(fx, Predicate::gbw, plan);
    CHECK(gbw.c_projective);
    CHECK(gbw.outcome == InvarianceOutcome::holds);
    CHECK(gbw.source->verdict == Verdict::holds);
    CHECK(gbw.transformed->verdict == Verdict::holds);
    CHECK(verify_invariance(fx, Predicate::douglas, plan).outcome == InvarianceOutcome::holds);
    // Berwald is not projectively invariant
    const InvarianceReport b = verify_invariance(fx, Predicate::berwald, plan);
    CHECK(b.outcome == InvarianceOutcome::broken);
  }
  SUBCASE("non-C-projective control skips the GBW claim") {
    const ProjectiveFixture fx = fixture_get("noncproj_control");
    const InvarianceReport r = verify_invariance(fx, Predicate::gbw, plan_for(fx, 3, 9));
    CHECK(r.outcome == InvarianceOutcome::skipped);
    CHECK(!r.c_projective);
    CHECK(r.cproj_residual > 1e-5);
  }
  SUBCASE("generic factor preserves GDW") {
    const ProjectiveFixture fx = fixture_get("riemannian_generic");
    const SamplePlan plan = plan_for(fx, 4, 9);
    const InvarianceReport r = verify_invariance(fx, Predicate::gdw, plan);
    CHECK(r.outcome == InvarianceOutcome::holds);
  }
  SUBCASE("unknown fixture") { CHECK_THROWS_AS(fixture_get("nope"), CatalogError); }
}
