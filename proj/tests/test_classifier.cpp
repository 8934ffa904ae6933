#include <cmath>
#include <map>

#include "doctest.h"
#include "finsler/classifier.hpp"
#include "finsler/metric_lang.hpp"

using namespace finsler;

namespace {

// c F, written through a native wrapper around the original definition.
MetricDef scaled(const MetricDef& d, double c) {
  const double k = d.form == DeclaredForm::F ? c : c * c;
  MetricDef out = d;
  out.name = d.name + "_scaled";
  NativeForm nf;
  nf.jet = [d, k](const EvalVars<Jet>& v, const ParamTable& p) {
    return k * (d.native ? d.native->jet(v, p) : evaluate(*d.expr, v));
  };
  nf.plain = [d, k](const EvalVars<long double>& v, const ParamTable& p) {
    return static_cast<long double>(k) * (d.native ? d.native->plain(v, p) : evaluate(*d.expr, v));
  };
  out.native = nf;
  return out;
}

std::map<Predicate, PredicateResult> run_map(Classifier& c) {
  std::map<Predicate, PredicateResult> m;
  for (Predicate p : all_predicates()) m[p] = c.run(p);
  return m;
}

}  // namespace

TEST_CASE("judge bands") {
  CHECK(judge(0.0, 0.0, 1e-6) == Verdict::holds);
  CHECK(judge(0.9e-6, 0.0, 1e-6) == Verdict::holds);
  CHECK(judge(5e-6, 0.0, 1e-6) == Verdict::indeterminate);
  CHECK(judge(2e-5, 0.0, 1e-6) == Verdict::fails);
  CHECK(judge(5e-6, 10.0, 1e-6) == Verdict::holds);
  CHECK(judge(std::nan(""), 1.0, 1e-6) == Verdict::fails);
  for (Predicate p : all_predicates()) CHECK(parse_predicate(predicate_id(p)) == p);
}

TEST_CASE("Euclidean: every predicate holds with zero residual") {
  Classifier c(catalog_get("euclidean", {}), sample_domain(catalog_get("euclidean", {}), 4, 2));
  for (Predicate p : all_predicates()) {
    const PredicateResult r = c.run(p);
    INFO(r.name);
    CHECK(r.verdict == Verdict::holds);
    if (p != Predicate::constant_flag) CHECK(r.residual == 0.0);
  }
  const PredicateResult k = c.run(Predicate::constant_flag);
  bool found = false;
  for (const auto& [name, v] : k.details)
    if (name == "mean_flag_curvature") {
      found = true;
      CHECK(std::fabs(v) < 1e-12);
    }
  CHECK(found);
}

TEST_CASE("catalog verdicts and theorem checks at n = 3") {
  for (const std::string& name : catalog_names()) {
    const MetricDef def = catalog_get(name, {});
    Classifier c(def, sample_domain(def, 5, 21));
    for (Predicate p : all_predicates()) {
      const auto expected = def.expected_verdict(predicate_id(p));
      if (!expected) continue;
      const PredicateResult r = c.run(p);
      INFO(name << " " << r.name << " residual " << r.residual << " scale " << r.scale);
      CHECK(r.verdict == (*expected ? Verdict::holds : Verdict::fails));
    }
    const auto reports = run_theorem_checks(c);
    INFO(name);
    CHECK_FALSE(any_violated(reports));
  }
}

TEST_CASE("paper examples") {
  const MetricDef funk = catalog_get("funk", {});
  Classifier f(funk, sample_domain(funk, 5, 4));
  CHECK(f.run(Predicate::gbw).verdict == Verdict::holds);
  CHECK(f.run(Predicate::gdw).verdict == Verdict::holds);
  CHECK(f.run(Predicate::h_zero).verdict == Verdict::holds);
  CHECK(f.run(Predicate::berwald).verdict == Verdict::fails);
  CHECK(f.run(Predicate::rquadratic).verdict == Verdict::fails);
  for (const auto& r : run_theorem_checks(f))
    CHECK((r.status == ImplicationStatus::consistent || r.status == ImplicationStatus::vacuous));

  const MetricDef bryant = catalog_get("bryant", {});
  Classifier b(bryant, sample_domain(bryant, 5, 4));
  CHECK(b.run(Predicate::gbw).verdict == Verdict::holds);
  CHECK(b.run(Predicate::scalar_flag).verdict == Verdict::holds);
  const PredicateResult k = b.run(Predicate::constant_flag);
  CHECK(k.verdict == Verdict::holds);
  for (const auto& [name, v] : k.details)
    if (name == "mean_flag_curvature") CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

  const MetricDef shen = catalog_get("shen_avector", {});
  Classifier s(shen, sample_domain(shen, 5, 4));
  CHECK(s.run(Predicate::gdw).verdict == Verdict::holds);
  CHECK(s.run(Predicate::gbw).verdict == Verdict::fails);
  CHECK(s.run(Predicate::h_zero).verdict == Verdict::fails);
  CHECK(s.run(Predicate::scalar_flag).verdict == Verdict::holds);
  CHECK(s.run(Predicate::constant_flag).verdict == Verdict::fails);

  const MetricDef riem = catalog_get("riemannian_quadratic", {});
  Classifier r(riem, sample_domain(riem, 5, 4));
  CHECK(r.run(Predicate::rquadratic).verdict == Verdict::holds);
  CHECK(r.run(Predicate::gbw).verdict == Verdict::holds);
  CHECK_FALSE(any_violated(run_theorem_checks(r)));
}

TEST_CASE("negative control: perturbed quadratic fails GDW at n = 3 only") {
  const MetricDef p3 = catalog_get("perturbed_quadratic", {});
  const PredicateResult r = is_gdw(p3, sample_domain(p3, 5, 8));
  CHECK(r.verdict == Verdict::fails);
  CHECK(r.residual > 1e3 * 1e-6 * std::max(1.0, r.scale));
  CHECK(is_douglas(p3, sample_domain(p3, 5, 8)).verdict == Verdict::fails);
  // Every two-dimensional metric is GDW.
  const MetricDef p2 = catalog_get("perturbed_quadratic", {CatalogOptions{2, {}}});
  CHECK(is_gdw(p2, sample_domain(p2, 5, 8)).verdict == Verdict::holds);
}

TEST_CASE("theorem checks: lemma skipped in dimension 2, violations detected") {
  const MetricDef shen2 = catalog_get("shen_avector", {CatalogOptions{2, {}}});
  Classifier c(shen2, sample_domain(shen2, 4, 5));
  for (const auto& r : run_theorem_checks(c)) {
    if (r.id == "nonconstant_scalar_excludes_gbw") CHECK(r.status == ImplicationStatus::skipped);
    CHECK(r.status != ImplicationStatus::violated);
  }
  // gbw holding while gdw fails contradicts the first implication.
  auto fake = [](Predicate p, double residual) {
    PredicateResult r;
    r.name = predicate_id(p);
    r.residual = residual;
    r.tol = 1e-6;
    r.verdict = judge(residual, 0.0, 1e-6);
    return r;
  };
  std::map<Predicate, PredicateResult> m{{Predicate::gbw, fake(Predicate::gbw, 0.0)},
                                         {Predicate::gdw, fake(Predicate::gdw, 1.0)}};
  const auto reports = run_theorem_checks(m, 3);
  CHECK(any_violated(reports));
}

TEST_CASE("property: verdicts are monotone in tol") {
  const MetricDef shen = catalog_get("shen_avector", {});
  Classifier c(shen, sample_domain(shen, 4, 6));
  for (Predicate p : all_predicates()) {
    const PredicateResult r = c.run(p);
    int prev = 0;  // fails < indeterminate < holds
    for (double tol = 1e-14; tol < 1e2; tol *= 3.0) {
      const Verdict v = r.verdict_at(tol);
      const int rank = v == Verdict::fails ? 0 : v == Verdict::indeterminate ? 1 : 2;
      CHECK(rank >= prev);
      prev = rank;
    }
    CHECK(prev == 2);
  }
}

TEST_CASE("property: verdicts are unchanged by F -> 2F") {
  for (const std::string& name : catalog_names()) {
    const MetricDef def = catalog_get(name, {});
    const SamplePlan plan = sample_domain(def, 4, 17);
    Classifier a(def, plan);
    Classifier b(scaled(def, 2.0), plan);
    const auto ra = run_map(a);
    const auto rb = run_map(b);
    for (Predicate p : all_predicates()) {
      INFO(name << " " << predicate_id(p) << " " << ra.at(p).residual << " vs " << rb.at(p).residual);
      CHECK(ra.at(p).verdict == rb.at(p).verdict);
    }
    // The spray is unchanged, so the Berwald residual is identical.
    CHECK(ra.at(Predicate::berwald).residual == doctest::Approx(rb.at(Predicate::berwald).residual).epsilon(1e-9));
  }
}
