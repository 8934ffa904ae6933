#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finsler/metric_library.hpp"
#include "finsler/tensor_engine.hpp"

namespace finsler {

enum class Verdict { holds, fails, indeterminate };
std::string to_string(Verdict v);

enum class Predicate {
  berwald,
  weakly_berwald,
  douglas,
  gdw,
  gbw,
  h_zero,
  rquadratic,
  scalar_flag,
  constant_flag,
  wtilde_zero,
};

std::string predicate_id(Predicate p);
std::optional<Predicate> parse_predicate(const std::string& id);
std::vector<Predicate> all_predicates();

/// holds if residual < tol max(1, scale); indeterminate up to ten times that.
Verdict judge(double residual, double scale, double tol);

struct PredicateResult {
  std::string name;
  double residual = 0.0;
  double scale = 0.0;
  double tol = 0.0;
  Verdict verdict = Verdict::indeterminate;
  int samples_used = 0;
  std::size_t worst_sample = 0;
  std::vector<double> per_sample;
  /// Extra named quantities, e.g. the mean flag curvature.
  std::vector<std::pair<std::string, double>> details;

  Verdict verdict_at(double other_tol) const { return judge(residual, scale, other_tol); }
};

/// Residual and scale of a predicate at one sample. constant_flag is not a
/// pointwise predicate and is rejected here.
std::pair<double, double> predicate_sample(Geometry& g, Predicate p);

/// K^ = R^m_m / ((n - 1) F^2).
double flag_curvature_estimate(Geometry& g);

/// Aggregates a predicate over a set of per-sample contexts.
PredicateResult evaluate_predicate(std::vector<Geometry>& geos, Predicate p, double tol);

struct ClassifierOptions {
  double tol = 1e-6;
  std::optional<JetSpec> spec;
};

/// Holds the per-sample contexts of one metric so that predicates share
/// their tensors.
class Classifier {
 public:
  Classifier(MetricDef def, SamplePlan plan, ClassifierOptions opts = {});

  const MetricDef& def() const { return def_; }
  const SamplePlan& plan() const { return plan_; }
  const ClassifierOptions& options() const { return opts_; }
  std::vector<Geometry>& geometries();

  PredicateResult run(Predicate p);
  std::vector<PredicateResult> run_all();

 private:
  MetricDef def_;
  SamplePlan plan_;
  ClassifierOptions opts_;
  std::vector<Geometry> geos_;
  std::map<Predicate, PredicateResult> cache_;
};

PredicateResult is_berwald(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_weakly_berwald(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_douglas(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_gdw(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_gbw(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult h_vanishes(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_rquadratic(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_scalar_curvature(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult is_constant_curvature(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);
PredicateResult wtilde_vanishes(const MetricDef& def, const SamplePlan& plan, double tol = 1e-6);

enum class ImplicationStatus { consistent, vacuous, untested, skipped, violated };
std::string to_string(ImplicationStatus s);

struct ImplicationReport {
  std::string id;
  std::string statement;
  ImplicationStatus status = ImplicationStatus::untested;
  std::string detail;
};

/// Material conditionals between verdicts. Indeterminate inputs give
/// "untested"; the lemma needing n > 2 is skipped in dimension 2.
std::vector<ImplicationReport> run_theorem_checks(const std::map<Predicate, PredicateResult>& results, int dim);
std::vector<ImplicationReport> run_theorem_checks(Classifier& c);

bool any_violated(const std::vector<ImplicationReport>& reports);

}  // namespace finsler
