#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/metric_lang.hpp"
#include "finsler/sample.hpp"

namespace finsler {

/// Closed-form evaluator written against the same scalar kernels as the
/// expression language, instantiated for jets and for plain long doubles.
struct NativeForm {
  std::function<Jet(const EvalVars<Jet>&, const ParamTable&)> jet;
  std::function<long double(const EvalVars<long double>&, const ParamTable&)> plain;
};

struct Domain {
  /// Samples are drawn from |x| <= sample_radius.
  double sample_radius = 1.0;
  /// Chart is |x| < chart_radius when set.
  std::optional<double> chart_radius;
  /// Additional chart constraint on x, e.g. a positive denominator.
  std::function<bool(const std::vector<double>&)> extra;
  std::string description;

  bool contains(const std::vector<double>& x) const;
};

/// Expected verdict of a classifier predicate, used by the acceptance suite.
struct ExpectedVerdict {
  std::string predicate;
  bool holds = true;
};

class MetricDef {
 public:
  std::string name;
  int dim = 3;
  DeclaredForm form = DeclaredForm::F;
  ParamTable params;
  /// Expression-language form; empty for native-only metrics.
  std::string canonical_text;
  std::optional<MetricExpr> expr;
  std::optional<NativeForm> native;
  Domain domain;
  std::vector<ExpectedVerdict> expected;

  /// Raw declared value (F or F^2) as a jet.
  Jet raw_jet(const JetSpec& spec, const Point& p) const;
  Jet f2_jet(const JetSpec& spec, const Point& p) const;
  Jet f_jet(const JetSpec& spec, const Point& p) const;
  long double f2_plain(const std::vector<double>& x, const std::vector<double>& y) const;
  /// Same, with coordinates kept in extended precision.
  long double f2_plain(const std::vector<long double>& x, const std::vector<long double>& y) const;
  double F(const std::vector<double>& x, const std::vector<double>& y) const;

  /// Domain predicate with a margin ball around x, plus a successful
  /// positive evaluation of F^2 at (x, y).
  bool admissible(const Point& p, double margin = 0.05) const;

  std::optional<bool> expected_verdict(const std::string& predicate) const;
};

class CatalogError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogOptions {
  std::optional<int> dim;
  ParamTable params;
};

std::vector<std::string> catalog_names();

/// Built-in metric by name. Unknown names, parameter names the metric does
/// not declare, and wrongly sized vector parameters throw CatalogError.
MetricDef catalog_get(const std::string& name, const CatalogOptions& opts = {});

/// Deterministic-for-seed sample of admissible points; |y| = 1.
SamplePlan sample_domain(const MetricDef& def, int count, std::uint64_t seed);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string origin, int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Line-oriented metric definition:
///
///     # comment
///     name          = my_randers
///     dim           = 3
///     form          = F            # F | F2
///     param b       = 0.2, 0, 0    # comma list -> vector parameter
///     param k       = 0.5
///     expr          = sqrt(norm2(y)) + k * dot(b, y)
///     domain_radius = 1.0          # optional, chart is |x| < radius
///     sample_radius = 0.9          # optional
///
/// A trailing backslash continues a line. Parameter overrides replace
/// values declared in the file.
MetricDef parse_metric_config(const std::string& text, const std::string& origin = "<config>",
                              const ParamTable& overrides = {});
MetricDef load_metric_config(const std::string& path, const ParamTable& overrides = {});

/// Parses "1.5" or "0.1,0,0" into a parameter.
Param parse_param_value(const std::string& text);

/// Gradient in x of log sigma_BH, the Busemann-Hausdorff volume density,
/// from sphere quadrature of F^{-n}. Supported for n = 2 and n = 3.
std::vector<double> bh_log_volume_gradient(const MetricDef& def, const std::vector<double>& x);

}  // namespace finsler
