#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "finsler/classifier.hpp"
#include "finsler/metric_library.hpp"
#include "finsler/tensor_engine.hpp"

namespace finsler {

/// Positively 1-homogeneous scalar P(x, y), evaluated as a jet.
struct ProjectiveFactor {
  std::string name;
  std::string description;
  std::function<Jet(const JetSpec&, const Point&)> jet;

  double value(const std::vector<double>& x, const std::vector<double>& y) const;
};

ProjectiveFactor zero_factor();
/// P = c F_def.
ProjectiveFactor metric_factor(const MetricDef& def, double c);
/// P = y^k dF/dx^k / (2F), the factor of a projectively flat metric.
ProjectiveFactor hamel_factor(const MetricDef& def);
/// P = <b, y> + (c0 + <c1, x>) |y| + w (x^2 y^1 - x^1 y^2).
ProjectiveFactor polynomial_factor(std::vector<double> b, double c0, std::vector<double> c1, double w);

class ProjectiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// G~^i = G^i + P y^i with every cached derivative recomputed.
SprayData apply_projective(const SprayData& s, const Jet& P);

/// Q_i = dP/dx^i - N^m_i dP/dy^m - P dP/dy^i.
JetTensor projective_q(const SprayData& s, const Jet& P);
/// Q_ij = dQ_j/dy^i - dQ_i/dy^j.
JetTensor projective_q2(const JetTensor& Q);

/// A projectively related pair with certification data.
struct ProjectiveFixture {
  std::string name;
  std::string description;
  MetricDef source;
  /// Metric whose spray the transformed spray should equal, when known.
  std::optional<MetricDef> target;
  ProjectiveFactor factor;
  bool c_projective = true;
};

std::vector<std::string> fixture_names();
ProjectiveFixture fixture_get(const std::string& name, int dim = 3);

/// Source and transformed contexts at one sample.
struct ProjectivePair {
  Geometry source;
  Geometry transformed;
  Jet P;
};

ProjectivePair make_pair(const ProjectiveFixture& fx, const Point& p, std::optional<JetSpec> spec = std::nullopt);

/// max |Q_ij| over indices and samples.
double cproj_residual(const ProjectiveFixture& fx, const SamplePlan& plan);

/// Residuals of the identities relating the two sprays, maximized over samples.
struct FixtureIdentities {
  double q2 = 0.0;                  // max |Q_ij|
  double douglas_difference = 0.0;  // max |D~ - D|
  double berwald_relation = 0.0;    // B~ - B - (P_jk d^i_l + ... + P_jkl y^i)
  double mean_berwald_relation = 0.0;  // E~ - E - (n+1)/2 P_jk
  double p0_relation = 0.0;         // P_jk|0 + y^m Q_jm.k
  double p0_relation_plus = 0.0;    // P_jk|0 - y^m Q_jm.k
  double h_difference = 0.0;        // max |E~_jk||0 - E_jk|0|
  double hcov_consistency = 0.0;    // max |E~_jk||0 - E~_jk|0|
  std::optional<double> target_spray = std::nullopt;  // max |G~ - G_target|
};

FixtureIdentities fixture_identities(const ProjectiveFixture& fx, const SamplePlan& plan);

enum class InvarianceOutcome { holds, broken, untested, skipped };
std::string to_string(InvarianceOutcome o);

struct InvarianceReport {
  std::string fixture;
  std::string predicate;
  double cproj_residual = 0.0;
  bool c_projective = false;
  std::optional<PredicateResult> source;
  std::optional<PredicateResult> transformed;
  InvarianceOutcome outcome = InvarianceOutcome::untested;
  std::string detail;
};

/// Evaluates the predicate on both sprays at shared samples. The GBW claim
/// is only made for C-projective pairs; otherwise the report is "skipped".
/// Both-fail verdicts count as invariant when the residual ratio is within
/// [0.1, 10].
InvarianceReport verify_invariance(const ProjectiveFixture& fx, Predicate p, const SamplePlan& plan, double tol = 1e-6);

/// Max distance from the points of the shorter path to the longer polyline.
double path_deviation(const std::vector<GeodesicPoint>& a, const std::vector<GeodesicPoint>& b);

/// Geodesic of G + P y.
std::vector<GeodesicPoint> integrate_projective_geodesic(const ProjectiveFixture& fx, std::vector<double> x0,
                                                         std::vector<double> y0, double t_end, int steps);

}  // namespace finsler
