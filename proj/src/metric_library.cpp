#include "finsler/metric_library.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace finsler {

namespace {

// Closed forms. Each one follows its canonical text operation by operation
// so that jets from either path agree coefficient for coefficient.

template <class T>
T euclidean_f2(const EvalVars<T>& v, const ParamTable&) {
  return norm2(v.y);
}

template <class T>
T funk_f(const EvalVars<T>& v, const ParamTable&) {
  T root = metric_sqrt(norm2(v.y) - (norm2(v.x) * norm2(v.y) - metric_pow(dot(v.x, v.y), {2, 1})));
  return metric_div(root + dot(v.x, v.y), v.constant(1) - norm2(v.x));
}

template <class T>
T bryant_f(const EvalVars<T>& v, const ParamTable& p) {
  const T eps = scalar_param(v, p, "eps");
  const T psi = v.constant(1) + v.constant(2) * eps * norm2(v.x) + metric_pow(norm2(v.x), {2, 1});
  const T phi = eps * norm2(v.y) + (norm2(v.x) * norm2(v.y) - metric_pow(dot(v.x, v.y), {2, 1}));
  const T c = v.constant(1) - metric_pow(eps, {2, 1});
  const T half = metric_div(v.constant(1), v.constant(2));
  const T inner = metric_sqrt(metric_pow(phi, {2, 1}) + c * metric_pow(norm2(v.y), {2, 1})) + phi;
  const T num = metric_sqrt(psi * (half * inner) + c * metric_pow(dot(v.x, v.y), {2, 1})) +
                metric_sqrt(v.constant(1) - metric_pow(eps, {2, 1})) * dot(v.x, v.y);
  return metric_div(num, psi);
}

template <class T>
T shen_f(const EvalVars<T>& v, const ParamTable& p) {
  const std::vector<T> a = vector_param(v, p, "a");
  const T q = norm2(v.x) * dot(a, v.y) - v.constant(2) * dot(a, v.x) * dot(v.x, v.y);
  const T d = v.constant(1) - norm2(a) * metric_pow(norm2(v.x), {2, 1});
  return metric_div(metric_sqrt(metric_pow(q, {2, 1}) + norm2(v.y) * d), d) - metric_div(q, d);
}

template <class T>
T perturbed_f2(const EvalVars<T>& v, const ParamTable& p) {
  const T e0 = scalar_param(v, p, "e0");
  const auto c = vector_param(v, p, "c");
  const auto u = vector_param(v, p, "u");
  const auto w = vector_param(v, p, "w");
  const auto z = vector_param(v, p, "z");
  const T quartic = metric_pow(dot(u, v.y), {2, 1}) * metric_pow(dot(w, v.y), {2, 1}) + metric_pow(dot(z, v.y), {4, 1});
  return norm2(v.y) + metric_div((e0 + dot(c, v.x)) * quartic, norm2(v.y));
}

// a_ij(x) = A0_ij + A1_ijm x^m + A2_ijm (x^m)^2, symmetrized.
template <class T>
T quadratic_form(const EvalVars<T>& v, const ParamTable& p) {
  const int n = v.dim();
  const auto& a0 = p.at("A0").values;
  const auto& a1 = p.at("A1").values;
  const auto& a2 = p.at("A2").values;
  T s = v.constant(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      T aij = v.constant(0.5 * (a0[i * n + j] + a0[j * n + i]));
      for (int m = 0; m < n; ++m) {
        const double c1 = 0.5 * (a1[(i * n + j) * n + m] + a1[(j * n + i) * n + m]);
        const double c2 = 0.5 * (a2[(i * n + j) * n + m] + a2[(j * n + i) * n + m]);
        if (c1 != 0.0) aij = aij + v.constant(c1) * v.x[m];
        if (c2 != 0.0) aij = aij + v.constant(c2) * (v.x[m] * v.x[m]);
      }
      s = s + aij * v.y[i] * v.y[j];
    }
  }
  return s;
}

template <class T>
T riemannian_f2(const EvalVars<T>& v, const ParamTable& p) {
  return quadratic_form(v, p);
}

template <class T>
T randers_f(const EvalVars<T>& v, const ParamTable& p) {
  const int n = v.dim();
  const auto& b = p.at("b").values;
  const auto& bx = p.at("B").values;
  T beta = v.constant(0);
  for (int i = 0; i < n; ++i) {
    T bi = v.constant(b[i]);
    for (int m = 0; m < n; ++m) {
      if (bx[i * n + m] != 0.0) bi = bi + v.constant(bx[i * n + m]) * v.x[m];
    }
    beta = beta + bi * v.y[i];
  }
  return metric_sqrt(quadratic_form(v, p)) + beta;
}

#define FINSLER_NATIVE(fn)                                                                    \
  NativeForm {                                                                                \
    [](const EvalVars<Jet>& v, const ParamTable& p) { return fn<Jet>(v, p); },                \
        [](const EvalVars<long double>& v, const ParamTable& p) { return fn<long double>(v, p); } \
  }

const char* const kFunkText =
    "(sqrt(norm2(y) - (norm2(x)*norm2(y) - dot(x,y)^2)) + dot(x,y)) / (1 - norm2(x))";

const char* const kBryantText =
    "(sqrt((1 + 2*eps*norm2(x) + norm2(x)^2)\n"
    "      * ((1/2) * (sqrt((eps*norm2(y) + (norm2(x)*norm2(y) - dot(x,y)^2))^2 + (1 - eps^2)*norm2(y)^2)\n"
    "                  + (eps*norm2(y) + (norm2(x)*norm2(y) - dot(x,y)^2))))\n"
    "      + (1 - eps^2)*dot(x,y)^2)\n"
    "  + sqrt(1 - eps^2)*dot(x,y))\n"
    " / (1 + 2*eps*norm2(x) + norm2(x)^2)";

const char* const kShenText =
    "sqrt((norm2(x)*dot(a,y) - 2*dot(a,x)*dot(x,y))^2 + norm2(y)*(1 - norm2(a)*norm2(x)^2))\n"
    "  / (1 - norm2(a)*norm2(x)^2)\n"
    "- (norm2(x)*dot(a,y) - 2*dot(a,x)*dot(x,y)) / (1 - norm2(a)*norm2(x)^2)";

const char* const kPerturbedText =
    "norm2(y) + (e0 + dot(c,x)) * (dot(u,y)^2*dot(w,y)^2 + dot(z,y)^4) / norm2(y)";

std::vector<double> unit_pattern(int n, double freq, double phase) {
  std::vector<double> v(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = std::cos(freq * (i + 1) + phase);
    s += v[i] * v[i];
  }
  for (double& c : v) c /= std::sqrt(s);
  return v;
}

ParamTable default_params(const std::string& name, int n) {
  ParamTable p;
  if (name == "bryant") {
    p["eps"] = Param::scalar(0.5);
  } else if (name == "shen_avector") {
    std::vector<double> a(n, 0.0);
    a[0] = 0.1;
    p["a"] = Param::vector(a);
  } else if (name == "perturbed_quadratic") {
    p["e0"] = Param::scalar(0.05);
    auto c = unit_pattern(n, 1.1, 0.2);
    for (double& v : c) v *= 0.04;
    p["c"] = Param::vector(c);
    p["u"] = Param::vector(unit_pattern(n, 0.9, 0.3));
    p["w"] = Param::vector(unit_pattern(n, 1.7, 0.5));
    p["z"] = Param::vector(unit_pattern(n, 2.3, 1.1));
  } else if (name == "riemannian_quadratic" || name == "randers_general") {
    std::vector<double> a0(n * n, 0.0), a1(n * n * n, 0.0), a2(n * n * n, 0.0);
    for (int i = 0; i < n; ++i) a0[i * n + i] = 1.0;
    for (int i = 0; i < n; ++i) {
      a1[(i * n + i) * n + 0] = 0.15;
      a2[(i * n + i) * n + 1] = 0.1;
    }
    a1[(0 * n + 1) * n + (2 % n)] = 0.1;
    a1[(1 * n + 0) * n + (2 % n)] = 0.1;
    p["A0"] = Param::vector(a0);
    p["A1"] = Param::vector(a1);
    p["A2"] = Param::vector(a2);
    if (name == "randers_general") {
      std::vector<double> b(n), bx(n * n);
      for (int i = 0; i < n; ++i) {
        b[i] = 0.1 * std::cos(0.7 * i + 0.3);
        for (int m = 0; m < n; ++m) bx[i * n + m] = 0.08 * std::sin(1.3 * i + 2.1 * m + 0.4);
      }
      p["b"] = Param::vector(b);
      p["B"] = Param::vector(bx);
    }
  }
  return p;
}

std::size_t expected_size(const std::string& metric, const std::string& param, int n) {
  if (metric == "riemannian_quadratic" || metric == "randers_general") {
    if (param == "A0" || param == "B") return n * n;
    if (param == "A1" || param == "A2") return n * n * n;
  }
  return n;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

}  // namespace

bool Domain::contains(const std::vector<double>& x) const {
  for (double c : x) {
    if (!std::isfinite(c)) return false;
  }
  if (chart_radius && !(norm(x) < *chart_radius)) return false;
  if (extra && !extra(x)) return false;
  return true;
}

Jet MetricDef::raw_jet(const JetSpec& spec, const Point& p) const {
  if (spec.dim != dim || p.dim() != dim) {
    throw JetSpecError("metric '" + name + "' has dimension " + std::to_string(dim));
  }
  if (!domain.contains(p.x)) throw MetricDomainError("point lies outside the domain of '" + name + "'");
  auto base = std::make_shared<const Point>(p);
  try {
    if (native) return native->jet(jet_vars(spec, base), params);
    return evaluate(*expr, jet_vars(spec, base));
  } catch (const JetDomainError& e) {
    throw MetricDomainError(e.what());
  }
}

Jet MetricDef::f2_jet(const JetSpec& spec, const Point& p) const {
  Jet v = raw_jet(spec, p);
  if (!(v.value() > 0.0)) throw MetricDomainError(form == DeclaredForm::F ? "F is not positive" : "F^2 is not positive");
  return form == DeclaredForm::F ? v * v : v;
}

Jet MetricDef::f_jet(const JetSpec& spec, const Point& p) const {
  Jet v = raw_jet(spec, p);
  if (!(v.value() > 0.0)) throw MetricDomainError(form == DeclaredForm::F ? "F is not positive" : "F^2 is not positive");
  return form == DeclaredForm::F ? v : sqrt(v);
}

long double MetricDef::f2_plain(const std::vector<double>& x, const std::vector<double>& y) const {
  return f2_plain(std::vector<long double>(x.begin(), x.end()), std::vector<long double>(y.begin(), y.end()));
}

long double MetricDef::f2_plain(const std::vector<long double>& x, const std::vector<long double>& y) const {
  if (!domain.contains(std::vector<double>(x.begin(), x.end())))
    throw MetricDomainError("point lies outside the domain of '" + name + "'");
  long double v = 0;
  try {
    const auto vars = plain_vars(x, y);
    v = native ? native->plain(vars, params) : evaluate(*expr, vars);
  } catch (const JetDomainError& e) {
    throw MetricDomainError(e.what());
  }
  if (!(v > 0.0L) || !std::isfinite(static_cast<double>(v))) {
    throw MetricDomainError(form == DeclaredForm::F ? "F is not positive" : "F^2 is not positive");
  }
  return form == DeclaredForm::F ? v * v : v;
}

double MetricDef::F(const std::vector<double>& x, const std::vector<double>& y) const {
  return static_cast<double>(std::sqrt(f2_plain(x, y)));
}

bool MetricDef::admissible(const Point& p, double margin) const {
  if (!domain.contains(p.x)) return false;
  std::vector<double> q = p.x;
  for (int i = 0; i < dim; ++i) {
    for (double s : {-margin, margin}) {
      q[i] = p.x[i] + s;
      if (!domain.contains(q)) return false;
    }
    q[i] = p.x[i];
  }
  const double r = norm(p.x);
  if (r > 0.0) {
    for (int i = 0; i < dim; ++i) q[i] = p.x[i] * (1.0 + margin / r);
    if (!domain.contains(q)) return false;
  }
  try {
    return f2_plain(p.x, p.y) > 0.0L;
  } catch (const std::exception&) {
    return false;
  }
}

std::optional<bool> MetricDef::expected_verdict(const std::string& predicate) const {
  for (const auto& e : expected) {
    if (e.predicate == predicate) return e.holds;
  }
  return std::nullopt;
}

std::vector<std::string> catalog_names() {
  return {"euclidean", "riemannian_quadratic", "randers_general", "funk", "bryant", "shen_avector", "perturbed_quadratic"};
}

MetricDef catalog_get(const std::string& name, const CatalogOptions& opts) {
  const auto names = catalog_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw CatalogError("unknown metric '" + name + "' (known: " + list + ")");
  }
  MetricDef d;
  d.name = name;
  d.dim = opts.dim.value_or(3);
  if (d.dim < 2 || d.dim > kMaxDim) {
    throw CatalogError("dimension must be between 2 and " + std::to_string(kMaxDim));
  }
  const int n = d.dim;
  d.params = default_params(name, n);
  for (const auto& [key, value] : opts.params) {
    auto it = d.params.find(key);
    if (it == d.params.end()) throw CatalogError("metric '" + name + "' has no parameter '" + key + "'");
    if (it->second.is_vector != value.is_vector) {
      throw CatalogError("parameter '" + key + "' is a " + (it->second.is_vector ? "vector" : "scalar"));
    }
    if (value.is_vector && value.values.size() != expected_size(name, key, n)) {
      throw CatalogError("parameter '" + key + "' needs " + std::to_string(expected_size(name, key, n)) + " components");
    }
    it->second = value;
  }

  using E = ExpectedVerdict;
  if (name == "euclidean") {
    d.form = DeclaredForm::F_squared;
    d.canonical_text = "norm2(y)";
    d.native = FINSLER_NATIVE(euclidean_f2);
    d.domain.description = "R^n";
    d.expected = {E{"berwald", true},   E{"weakly_berwald", true}, E{"douglas", true},
                  E{"gdw", true},       E{"gbw", true},            E{"h_zero", true},
                  E{"rquadratic", true}, E{"scalar_flag", true},   E{"constant_flag", true},
                  E{"wtilde_zero", true}};
  } else if (name == "riemannian_quadratic") {
    d.form = DeclaredForm::F_squared;
    d.native = FINSLER_NATIVE(riemannian_f2);
    d.domain.description = "R^n (sampled in |x| <= 1)";
    d.expected = {E{"berwald", true}, E{"douglas", true}, E{"gdw", true},
                  E{"gbw", true},     E{"h_zero", true},  E{"rquadratic", true}};
  } else if (name == "randers_general") {
    d.form = DeclaredForm::F;
    d.native = FINSLER_NATIVE(randers_f);
    d.domain.description = "R^n (sampled in |x| <= 1)";
    d.expected = {E{"berwald", false}};
  } else if (name == "funk") {
    d.form = DeclaredForm::F;
    d.canonical_text = kFunkText;
    d.native = FINSLER_NATIVE(funk_f);
    d.domain.chart_radius = 1.0;
    d.domain.sample_radius = 0.9;
    d.domain.description = "|x| < 1";
    d.expected = {E{"berwald", false},    E{"douglas", true},     E{"gdw", true},   E{"gbw", true},
                  E{"h_zero", true},      E{"rquadratic", false}, E{"scalar_flag", true},
                  E{"constant_flag", true}, E{"wtilde_zero", true}};
  } else if (name == "bryant") {
    d.form = DeclaredForm::F;
    d.canonical_text = kBryantText;
    d.native = FINSLER_NATIVE(bryant_f);
    d.domain.sample_radius = 1.5;
    d.domain.description = "R^n";
    d.expected = {E{"douglas", true},     E{"gdw", true},           E{"gbw", true},          E{"h_zero", true},
                  E{"scalar_flag", true}, E{"constant_flag", true}, E{"wtilde_zero", true}};
  } else if (name == "shen_avector") {
    d.form = DeclaredForm::F;
    d.canonical_text = kShenText;
    d.native = FINSLER_NATIVE(shen_f);
    const std::vector<double> a = d.params.at("a").values;
    d.domain.extra = [a](const std::vector<double>& x) {
      const double r2 = norm(x) * norm(x);
      const double a2 = norm(a) * norm(a);
      return 1.0 - a2 * r2 * r2 > 0.0;
    };
    d.domain.description = "1 - |a|^2 |x|^4 > 0";
    d.expected = {E{"gdw", true}, E{"scalar_flag", true}, E{"constant_flag", false}, E{"h_zero", false}};
    if (n > 2) d.expected.push_back(E{"gbw", false});
  } else if (name == "perturbed_quadratic") {
    d.form = DeclaredForm::F_squared;
    d.canonical_text = kPerturbedText;
    d.native = FINSLER_NATIVE(perturbed_f2);
    d.domain.description = "R^n (sampled in |x| <= 1)";
    d.expected = {E{"douglas", false}, E{"gbw", false}};
    // every surface metric is GDW
    if (n > 2) d.expected.push_back(E{"gdw", false});
  }
  if (!d.canonical_text.empty()) {
    d.expr = parse(d.canonical_text, d.params, d.form);
    if (d.domain.chart_radius) d.expr->domain_radius = d.domain.chart_radius;
  }
  return d;
}

SamplePlan sample_domain(const MetricDef& def, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample count must be non-negative");
  SamplePlan plan;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  const int n = def.dim;
  const double radius = def.domain.sample_radius;
  long rejections = 0;
  constexpr long kMaxRejections = 100000;
  while (static_cast<int>(plan.points.size()) < count) {
    Point p;
    p.x.resize(n);
    p.y.resize(n);
    for (double& c : p.x) c = radius * uniform();
    bool ok = norm(p.x) <= radius;
    double ny = 0.0;
    if (ok) {
      for (double& c : p.y) c = uniform();
      ny = norm(p.y);
      ok = ny <= 1.0 && ny > 0.1;
    }
    if (ok) {
      for (double& c : p.y) c /= ny;
      ok = def.admissible(p);
    }
    if (ok) {
      plan.points.push_back(std::move(p));
    } else if (++rejections > kMaxRejections) {
      throw SamplingError("no admissible sample for '" + def.name + "' after " + std::to_string(kMaxRejections) +
                          " rejections (domain: " + def.domain.description + ")");
    }
  }
  return plan;
}

// -- config files --------------------------------------------------------------

ConfigError::ConfigError(std::string origin, int line, int column, const std::string& message)
    : std::runtime_error(origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  const std::string t = trim(s);
  double v = std::stod(t, &used);
  if (used != t.size()) throw std::invalid_argument("trailing characters in number '" + t + "'");
  return v;
}

struct LogicalLine {
  int line = 0;
  int column = 1;
  std::string text;
};

}  // namespace

Param parse_param_value(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  int items = 0;
  while (std::getline(ss, item, ',')) {
    ++items;
    values.push_back(parse_number(item));
  }
  if (values.empty()) throw std::invalid_argument("empty parameter value");
  if (text.find(',') != std::string::npos) return Param::vector(values);
  return Param::scalar(values[0]);
}

MetricDef parse_metric_config(const std::string& text, const std::string& origin, const ParamTable& overrides) {
  std::vector<LogicalLine> lines;
  {
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    bool continuing = false;
    while (std::getline(ss, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw = raw.substr(0, hash);
      std::string t = trim(raw);
      const int col = t.empty() ? 1 : static_cast<int>(raw.find_first_not_of(" \t")) + 1;
      const bool cont = !t.empty() && t.back() == '\\';
      if (cont) t.pop_back();
      if (continuing) {
        std::string r = raw.substr(0, raw.find_last_not_of(" \t\r") + 1);
        if (cont) r.pop_back();
        lines.back().text += "\n" + r;
      } else if (!t.empty()) {
        lines.push_back({lineno, col, t});
      }
      continuing = cont;
    }
  }

  MetricDef d;
  d.name = "custom";
  std::optional<int> dim;
  std::optional<LogicalLine> expr_line;
  int expr_column = 1;
  std::optional<double> domain_radius, sample_radius;
  ParamTable params;
  std::map<std::string, int> param_lines;

  for (const auto& ll : lines) {
    const auto eq = ll.text.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, ll.line, 1, "expected 'key = value'");
    const std::string key = trim(ll.text.substr(0, eq));
    const std::string value = trim(ll.text.substr(eq + 1));
    const int vcol = static_cast<int>(ll.text.find_first_not_of(" \t", eq + 1)) + 1;
    try {
      if (key == "name") {
        d.name = value;
      } else if (key == "dim") {
        dim = static_cast<int>(parse_number(value));
        if (*dim < 2 || *dim > kMaxDim) throw std::invalid_argument("dim must be between 2 and " + std::to_string(kMaxDim));
      } else if (key == "form") {
        d.form = parse_declared_form(value);
      } else if (key.rfind("param", 0) == 0 && key.size() > 5 && (key[5] == ' ' || key[5] == '\t')) {
        const std::string pname = trim(key.substr(5));
        if (pname.empty() || !(std::isalpha(static_cast<unsigned char>(pname[0])) || pname[0] == '_')) {
          throw std::invalid_argument("bad parameter name '" + pname + "'");
        }
        if (pname == "x" || pname == "y") throw std::invalid_argument("'x' and 'y' are reserved");
        if (params.count(pname)) throw std::invalid_argument("parameter '" + pname + "' declared twice");
        params[pname] = parse_param_value(value);
        param_lines[pname] = ll.line;
      } else if (key == "expr") {
        expr_line = LogicalLine{ll.line, ll.column, value};
        expr_column = ll.column + vcol - 1;
      } else if (key == "domain_radius") {
        domain_radius = parse_number(value);
        if (!(*domain_radius > 0)) throw std::invalid_argument("domain_radius must be positive");
      } else if (key == "sample_radius") {
        sample_radius = parse_number(value);
        if (!(*sample_radius > 0)) throw std::invalid_argument("sample_radius must be positive");
      } else {
        throw ConfigError(origin, ll.line, 1, "unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(origin, ll.line, vcol, e.what());
    }
  }
  if (!expr_line) throw ConfigError(origin, lines.empty() ? 1 : lines.back().line, 1, "missing 'expr'");

  for (const auto& [key, value] : overrides) {
    auto it = params.find(key);
    if (it == params.end()) throw ConfigError(origin, 0, 0, "override of undeclared parameter '" + key + "'");
    if (it->second.is_vector != value.is_vector) {
      throw ConfigError(origin, param_lines[key], 1, "override of '" + key + "' changes its kind");
    }
    it->second = value;
  }

  d.dim = dim.value_or(3);
  for (const auto& [key, value] : params) {
    if (value.is_vector && static_cast<int>(value.values.size()) != d.dim) {
      throw ConfigError(origin, param_lines[key], 1,
                        "vector parameter '" + key + "' has " + std::to_string(value.values.size()) +
                            " components, dim is " + std::to_string(d.dim));
    }
  }
  d.params = params;
  d.canonical_text = expr_line->text;
  try {
    d.expr = parse(expr_line->text, params, d.form);
  } catch (const ParseError& e) {
    const int line = expr_line->line + e.line() - 1;
    const int column = e.line() == 1 ? expr_column + e.column() - 1 : e.column();
    throw ConfigError(origin, line, column, e.message());
  }
  d.domain.chart_radius = domain_radius;
  d.expr->domain_radius = domain_radius;
  d.domain.sample_radius = sample_radius.value_or(domain_radius ? 0.9 * *domain_radius : 1.0);
  d.domain.description = domain_radius ? "|x| < " + std::to_string(*domain_radius) : "R^n";
  return d;
}

MetricDef load_metric_config(const std::string& path, const ParamTable& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metric_config(ss.str(), path, overrides);
}

// -- volume form ---------------------------------------------------------------

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    nodes[i] = t;
    weights[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

std::vector<double> bh_log_volume_gradient(const MetricDef& def, const std::vector<double>& x) {
  const int n = def.dim;
  if (n != 2 && n != 3) throw std::invalid_argument("volume quadrature supports dimensions 2 and 3");
  const JetSpec spec{n, 1, 0};
  long double v = 0;
  std::vector<long double> dv(n, 0.0L);
  auto accumulate = [&](const std::vector<double>& dir, double w) {
    const Jet f2 = def.f2_jet(spec, Point{x, dir});
    const Jet g = pow(f2, Rational::make(-n, 2));
    v += w * g.value();
    for (int m = 0; m < n; ++m) dv[m] += w * g.partial(MultiIndex::unit(n, m), MultiIndex(n));
  };
  if (n == 2) {
    constexpr int kN = 256;
    for (int k = 0; k < kN; ++k) {
      const double t = 2.0 * std::numbers::pi * k / kN;
      accumulate({std::cos(t), std::sin(t)}, 1.0);
    }
  } else {
    std::vector<double> nodes, weights;
    gauss_legendre(48, nodes, weights);
    constexpr int kPhi = 96;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const double c = nodes[a], s = std::sqrt(1.0 - c * c);
      for (int k = 0; k < kPhi; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / kPhi;
        accumulate({s * std::cos(phi), s * std::sin(phi), c}, weights[a]);
      }
    }
  }
  std::vector<double> out(n);
  for (int m = 0; m < n; ++m) out[m] = static_cast<double>(-dv[m] / v);
  return out;
}

}  // namespace finsler
