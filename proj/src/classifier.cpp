#include "finsler/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finsler {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

const std::pair<Predicate, const char*> kIds[] = {
    {Predicate::berwald, "berwald"},         {Predicate::weakly_berwald, "weakly_berwald"},
    {Predicate::douglas, "douglas"},         {Predicate::gdw, "gdw"},
    {Predicate::gbw, "gbw"},                 {Predicate::h_zero, "h_zero"},
    {Predicate::rquadratic, "rquadratic"},   {Predicate::scalar_flag, "scalar_flag"},
    {Predicate::constant_flag, "constant_flag"}, {Predicate::wtilde_zero, "wtilde_zero"},
};

double max_dy_abs(const JetTensor& t) {
  double m = 0.0;
  for (const Jet& c : t.comps)
    for (int k = 0; k < t.dim; ++k) m = std::max(m, std::abs(c.dy(k).value()));
  return m;
}

}  // namespace

std::string predicate_id(Predicate p) {
  for (const auto& [k, id] : kIds) {
    if (k == p) return id;
  }
  return "?";
}

std::optional<Predicate> parse_predicate(const std::string& id) {
  for (const auto& [k, s] : kIds) {
    if (id == s) return k;
  }
  return std::nullopt;
}

std::vector<Predicate> all_predicates() {
  std::vector<Predicate> out;
  for (const auto& kv : kIds) out.push_back(kv.first);
  return out;
}

Verdict judge(double residual, double scale, double tol) {
  const double threshold = tol * std::max(1.0, scale);
  if (residual < threshold) return Verdict::holds;
  if (residual <= 10.0 * threshold) return Verdict::indeterminate;
  return Verdict::fails;
}

double flag_curvature_estimate(Geometry& g) {
  const TensorValue R = values(g.R());
  double tr = 0.0;
  for (int m = 0; m < g.dim(); ++m) tr += R(m, m);
  return tr / ((g.dim() - 1) * g.F2().value());
}

std::pair<double, double> predicate_sample(Geometry& g, Predicate p) {
  switch (p) {
    case Predicate::berwald: return {max_abs(values(berwald_curvature(g.spray()))), max_abs(values(g.spray().N))};
    case Predicate::weakly_berwald: return {max_abs(values(g.E())), max_abs(values(g.spray().N))};
    case Predicate::douglas: return {max_abs(values(g.D())), max_abs(values(berwald_curvature(g.spray())))};
    case Predicate::gdw: {
      const TensorValue d0 = values(g.D0());
      return {max_abs(angular_projection(values(g.h()), d0)), max_abs(d0)};
    }
    case Predicate::gbw: {
      const TensorValue b0 = values(g.B0());
      return {max_abs(angular_projection(values(g.h()), b0)), max_abs(b0)};
    }
    case Predicate::h_zero: return {max_abs(values(g.H())), max_abs(values(g.E()))};
    case Predicate::rquadratic: return {max_dy_abs(g.Rfull()), max_abs(values(g.Rfull()))};
    case Predicate::scalar_flag: {
      const TensorValue R = values(g.R());
      const double k = flag_curvature_estimate(g);
      const double F2 = g.F2().value();
      const auto& y = g.point().y;
      const TensorValue yl = values(g.metric().y_lower);
      double r = 0.0;
      for_each_index(g.dim(), 2, [&](const Index& x) {
        const double model = k * ((x[0] == x[1] ? F2 : 0.0) - y[x[0]] * yl(x[1]));
        r = std::max(r, std::abs(R[x] - model));
      });
      return {r, max_abs(R)};
    }
    case Predicate::wtilde_zero: return {max_abs(values(g.Wtilde())), max_abs(values(g.R()))};
    case Predicate::constant_flag: break;
  }
  throw std::invalid_argument("predicate '" + predicate_id(p) + "' is not pointwise");
}

PredicateResult evaluate_predicate(std::vector<Geometry>& geos, Predicate p, double tol) {
  PredicateResult r;
  r.name = predicate_id(p);
  r.tol = tol;
  r.samples_used = static_cast<int>(geos.size());
  if (p == Predicate::constant_flag) {
    const PredicateResult scalar = evaluate_predicate(geos, Predicate::scalar_flag, tol);
    std::vector<double> K;
    for (auto& g : geos) K.push_back(flag_curvature_estimate(g));
    double mean = 0.0, var = 0.0;
    for (double k : K) mean += k;
    mean /= std::max<std::size_t>(1, K.size());
    for (double k : K) var += (k - mean) * (k - mean);
    var /= std::max<std::size_t>(1, K.size());
    const double denom = std::max(1.0, std::abs(mean));
    const double dispersion = std::sqrt(var) / denom;
    const double scalar_rel = scalar.residual / std::max(1.0, scalar.scale);
    r.residual = std::max(dispersion, scalar_rel);
    r.scale = 1.0;
    for (std::size_t s = 0; s < K.size(); ++s) {
      r.per_sample.push_back(std::abs(K[s] - mean) / denom);
      if (r.per_sample[s] > r.per_sample[r.worst_sample]) r.worst_sample = s;
    }
    r.details = {{"mean_flag_curvature", mean}, {"flag_curvature_dispersion", dispersion},
                 {"scalar_residual_relative", scalar_rel}};
    r.verdict = judge(r.residual, r.scale, tol);
    return r;
  }
  for (std::size_t s = 0; s < geos.size(); ++s) {
    const auto [res, scale] = predicate_sample(geos[s], p);
    r.per_sample.push_back(res);
    if (res > r.residual) {
      r.residual = res;
      r.worst_sample = s;
    }
    r.scale = std::max(r.scale, scale);
  }
  r.verdict = judge(r.residual, r.scale, tol);
  return r;
}

Classifier::Classifier(MetricDef def, SamplePlan plan, ClassifierOptions opts)
    : def_(std::move(def)), plan_(std::move(plan)), opts_(opts) {}

std::vector<Geometry>& Classifier::geometries() {
  if (geos_.empty()) {
    geos_.reserve(plan_.points.size());
    for (const auto& p : plan_.points) geos_.emplace_back(def_, p, opts_.spec);
  }
  return geos_;
}

PredicateResult Classifier::run(Predicate p) {
  auto it = cache_.find(p);
  if (it != cache_.end()) return it->second;
  PredicateResult r = evaluate_predicate(geometries(), p, opts_.tol);
  cache_[p] = r;
  return r;
}

std::vector<PredicateResult> Classifier::run_all() {
  std::vector<PredicateResult> out;
  for (Predicate p : all_predicates()) out.push_back(run(p));
  return out;
}

namespace {

PredicateResult run_one(const MetricDef& def, const SamplePlan& plan, double tol, Predicate p) {
  Classifier c(def, plan, {tol, std::nullopt});
  return c.run(p);
}

}  // namespace

PredicateResult is_berwald(const MetricDef& d, const SamplePlan& s, double tol) { return run_one(d, s, tol, Predicate::berwald); }
PredicateResult is_weakly_berwald(const MetricDef& d, const SamplePlan& s, double tol) {
  return run_one(d, s, tol, Predicate::weakly_berwald);
}
PredicateResult is_douglas(const MetricDef& d, const SamplePlan& s, double tol) { return run_one(d, s, tol, Predicate::douglas); }
PredicateResult is_gdw(const MetricDef& d, const SamplePlan& s, double tol) { return run_one(d, s, tol, Predicate::gdw); }
PredicateResult is_gbw(const MetricDef& d, const SamplePlan& s, double tol) { return run_one(d, s, tol, Predicate::gbw); }
PredicateResult h_vanishes(const MetricDef& d, const SamplePlan& s, double tol) { return run_one(d, s, tol, Predicate::h_zero); }
PredicateResult is_rquadratic(const MetricDef& d, const SamplePlan& s, double tol) {
  return run_one(d, s, tol, Predicate::rquadratic);
}
PredicateResult is_scalar_curvature(const MetricDef& d, const SamplePlan& s, double tol) {
  return run_one(d, s, tol, Predicate::scalar_flag);
}
PredicateResult is_constant_curvature(const MetricDef& d, const SamplePlan& s, double tol) {
  return run_one(d, s, tol, Predicate::constant_flag);
}
PredicateResult wtilde_vanishes(const MetricDef& d, const SamplePlan& s, double tol) {
  return run_one(d, s, tol, Predicate::wtilde_zero);
}

std::string to_string(ImplicationStatus s) {
  switch (s) {
    case ImplicationStatus::consistent: return "consistent";
    case ImplicationStatus::vacuous: return "vacuous";
    case ImplicationStatus::untested: return "untested";
    case ImplicationStatus::skipped: return "skipped";
    case ImplicationStatus::violated: return "violated";
  }
  return "?";
}

namespace {

struct Literal {
  Predicate p;
  bool positive = true;
};

ImplicationReport conditional(const std::map<Predicate, PredicateResult>& res, std::string id, std::string statement,
                              const std::vector<Literal>& premise, Literal conclusion) {
  ImplicationReport r{std::move(id), std::move(statement), ImplicationStatus::untested, ""};
  auto truth = [&](const Literal& l) -> std::optional<bool> {
    auto it = res.find(l.p);
    if (it == res.end()) return std::nullopt;
    if (it->second.verdict == Verdict::indeterminate) return std::nullopt;
    const bool h = it->second.verdict == Verdict::holds;
    return l.positive ? h : !h;
  };
  std::string missing;
  bool premise_false = false, premise_unknown = false;
  for (const auto& l : premise) {
    const auto t = truth(l);
    if (!t) {
      premise_unknown = true;
      missing += (missing.empty() ? "" : ", ") + predicate_id(l.p);
    } else if (!*t) {
      premise_false = true;
    }
  }
  if (premise_false) {
    r.status = ImplicationStatus::vacuous;
    r.detail = "premise false";
    return r;
  }
  const auto c = truth(conclusion);
  if (premise_unknown || !c) {
    if (!c) missing += (missing.empty() ? "" : ", ") + predicate_id(conclusion.p);
    r.status = ImplicationStatus::untested;
    r.detail = "implication untested at this tolerance (" + missing + " indeterminate or missing)";
    return r;
  }
  if (*c) {
    r.status = ImplicationStatus::consistent;
    r.detail = "premise and conclusion hold";
  } else {
    r.status = ImplicationStatus::violated;
    r.detail = "premise holds but conclusion fails";
  }
  return r;
}

}  // namespace

std::vector<ImplicationReport> run_theorem_checks(const std::map<Predicate, PredicateResult>& res, int dim) {
  using P = Predicate;
  std::vector<ImplicationReport> out;
  out.push_back(conditional(res, "gbw_implies_gdw", "GBW => GDW", {{P::gbw}}, {P::gdw}));
  out.push_back(conditional(res, "gbw_implies_h_zero", "GBW => H = 0", {{P::gbw}}, {P::h_zero}));
  out.push_back(conditional(res, "gdw_and_h_zero_implies_gbw", "GDW and H = 0 => GBW", {{P::gdw}, {P::h_zero}}, {P::gbw}));
  out.push_back(conditional(res, "rquadratic_implies_gbw", "R-quadratic => GBW", {{P::rquadratic}}, {P::gbw}));
  if (dim > 2) {
    out.push_back(conditional(res, "nonconstant_scalar_excludes_gbw", "scalar and not constant flag curvature (n > 2) => not GBW",
                              {{P::scalar_flag}, {P::constant_flag, false}}, {P::gbw, false}));
  } else {
    out.push_back({"nonconstant_scalar_excludes_gbw", "scalar and not constant flag curvature (n > 2) => not GBW",
                   ImplicationStatus::skipped, "needs n > 2"});
  }
  return out;
}

std::vector<ImplicationReport> run_theorem_checks(Classifier& c) {
  std::map<Predicate, PredicateResult> res;
  for (Predicate p : {Predicate::gbw, Predicate::gdw, Predicate::h_zero, Predicate::rquadratic, Predicate::scalar_flag,
                      Predicate::constant_flag}) {
    res[p] = c.run(p);
  }
  return run_theorem_checks(res, c.def().dim);
}

bool any_violated(const std::vector<ImplicationReport>& reports) {
  return std::any_of(reports.begin(), reports.end(),
                     [](const ImplicationReport& r) { return r.status == ImplicationStatus::violated; });
}

}  // namespace finsler
