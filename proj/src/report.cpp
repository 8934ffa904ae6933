#include "finsler/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <sstream>

#include "finsler/classifier.hpp"
#include "finsler/metric_lang.hpp"
#include "finsler/projective.hpp"
#include "finsler/tensor_engine.hpp"

namespace finsler {

using nlohmann::json;

namespace {

constexpr double kQThreshold = 1e-7;

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json header(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["command"] = cfg.command;
  j["timestamp"] = timestamp();
  j["config"] = config_echo(cfg);
  return j;
}

ParamTable param_overrides(const RunConfig& cfg) {
  ParamTable t;
  for (const std::string& s : cfg.params) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects NAME=VALUE, got '" + s + "'");
    try {
      t[s.substr(0, eq)] = parse_param_value(s.substr(eq + 1));
    } catch (const std::exception& e) {
      throw UsageError("--param " + s + ": " + e.what());
    }
  }
  return t;
}

std::optional<JetSpec> spec_of(const RunConfig& cfg, int dim) {
  if (!cfg.orders) return std::nullopt;
  return JetSpec{dim, cfg.orders->first, cfg.orders->second};
}

json point_json(const Point& p) { return {{"x", p.x}, {"y", p.y}}; }

json nested(const TensorValue& t, int pos, std::size_t& o) {
  if (pos == t.rank()) return t.comps[o++];
  json a = json::array();
  for (int i = 0; i < t.dim; ++i) a.push_back(nested(t, pos + 1, o));
  return a;
}

json tensor_json(const TensorValue& t) {
  json var = json::array();
  for (Variance v : t.variance) var.push_back(v == Variance::up ? "up" : "down");
  std::size_t o = 0;
  return {{"variance", var}, {"y_degree", t.y_degree}, {"values", nested(t, 0, o)}};
}

json predicate_json(const PredicateResult& r, const SamplePlan& plan) {
  json j = {{"name", r.name},
            {"residual", r.residual},
            {"scale", r.scale},
            {"tol", r.tol},
            {"verdict", to_string(r.verdict)},
            {"samples_used", r.samples_used},
            {"worst_sample", r.worst_sample},
            {"per_sample", r.per_sample}};
  if (r.worst_sample < plan.points.size()) j["worst_point"] = point_json(plan.points[r.worst_sample]);
  json d = json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  j["details"] = d;
  return j;
}

const std::vector<std::string>& eval_tensor_names() {
  static const std::vector<std::string> names{"g", "ginv", "C", "G", "N", "B", "E", "Ejkl",
                                              "H", "D", "R", "Rfull", "L", "Wtilde", "h"};
  return names;
}

TensorValue eval_tensor(Geometry& geo, const std::string& name) {
  if (name == "g") return values(geo.metric().g);
  if (name == "ginv") return values(geo.metric().ginv);
  if (name == "C") return values(geo.C());
  if (name == "G") return values(geo.spray().G);
  if (name == "N") return values(geo.spray().N);
  if (name == "B") return values(geo.spray().B);
  if (name == "E") return values(geo.E());
  if (name == "Ejkl") return values(geo.Ejkl());
  if (name == "H") return values(geo.H());
  if (name == "D") return values(geo.D());
  if (name == "R") return values(geo.R());
  if (name == "Rfull") return values(geo.Rfull());
  if (name == "L") return values(geo.L());
  if (name == "Wtilde") return values(geo.Wtilde());
  if (name == "h") return values(geo.h());
  throw UsageError("unknown tensor '" + name + "'");
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_point(const json& p) {
  std::string s;
  for (const char* k : {"x", "y"}) {
    s += ',';
    std::string part;
    for (const auto& c : p.at(k)) part += (part.empty() ? "" : " ") + csv_number(c.get<double>());
    s += part;
  }
  return s;
}

void flatten(const json& v, std::string prefix, std::vector<std::pair<std::string, double>>& out) {
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], prefix + (prefix.empty() ? "" : ".") + std::to_string(i), out);
  } else {
    out.emplace_back(prefix, v.is_number() ? v.get<double>() : std::nan(""));
  }
}

}  // namespace

MetricDef resolve_metric(const RunConfig& cfg) {
  if (cfg.metric && cfg.config_path) throw UsageError("--metric and --config are mutually exclusive");
  if (!cfg.metric && !cfg.config_path) throw UsageError("one of --metric or --config is required");
  const ParamTable overrides = param_overrides(cfg);
  if (cfg.metric) return catalog_get(*cfg.metric, CatalogOptions{cfg.dim, overrides});
  MetricDef def = load_metric_config(*cfg.config_path, overrides);
  if (cfg.dim && *cfg.dim != def.dim)
    throw UsageError("--dim " + std::to_string(*cfg.dim) + " conflicts with dim " + std::to_string(def.dim) + " in " +
                     *cfg.config_path);
  return def;
}

json config_echo(const RunConfig& cfg) {
  json j;
  j["metric"] = cfg.metric ? json(*cfg.metric) : json(nullptr);
  j["config"] = cfg.config_path ? json(*cfg.config_path) : json(nullptr);
  j["dim"] = cfg.dim ? json(*cfg.dim) : json(nullptr);
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["orders"] = cfg.orders ? json::array({cfg.orders->first, cfg.orders->second}) : json(nullptr);
  j["format"] = cfg.format;
  j["params"] = cfg.params;
  j["tensors"] = cfg.tensors;
  if (cfg.command == "verify") j["fixture"] = cfg.fixture;
  if (cfg.command == "oracle")
    j["oracle"] = {{"inner_h0", cfg.oracle.inner.h0},
                   {"inner_levels", cfg.oracle.inner.levels},
                   {"h0", cfg.oracle.outer.h0},
                   {"levels", cfg.oracle.outer.levels},
                   {"x_scale", cfg.oracle.x_scale}};
  return j;
}

json describe_metric(const MetricDef& def) {
  json params = json::object();
  for (const auto& [k, p] : def.params) params[k] = p.is_vector ? json(p.values) : json(p.values.front());
  json j = {{"name", def.name},
            {"dim", def.dim},
            {"form", to_string(def.form)},
            {"expression", def.canonical_text},
            {"params", params},
            {"domain", def.domain.description}};
  return j;
}

RunOutcome cmd_eval(const RunConfig& cfg) {
  const MetricDef def = resolve_metric(cfg);
  const std::vector<std::string> names = cfg.tensors.empty() ? std::vector<std::string>{"g"} : cfg.tensors;
  for (const std::string& n : names)
    if (std::find(eval_tensor_names().begin(), eval_tensor_names().end(), n) == eval_tensor_names().end())
      throw UsageError("unknown tensor '" + n + "'");
  const SamplePlan plan = sample_domain(def, cfg.samples, cfg.seed);
  json r = header(cfg);
  r["metric"] = describe_metric(def);
  json samples = json::array();
  for (const Point& p : plan.points) {
    Geometry geo(def, p, spec_of(cfg, def.dim));
    json s = point_json(p);
    s["F"] = def.F(p.x, p.y);
    json t = json::object();
    for (const std::string& n : names) t[n] = tensor_json(eval_tensor(geo, n));
    s["tensors"] = t;
    samples.push_back(s);
  }
  r["samples"] = samples;
  return {r, exit_ok};
}

RunOutcome cmd_classify(const RunConfig& cfg) {
  const MetricDef def = resolve_metric(cfg);
  Classifier c(def, sample_domain(def, cfg.samples, cfg.seed), ClassifierOptions{cfg.tol, spec_of(cfg, def.dim)});
  json r = header(cfg);
  r["metric"] = describe_metric(def);
  json preds = json::array();
  for (const PredicateResult& p : c.run_all()) {
    json j = predicate_json(p, c.plan());
    if (const auto e = def.expected_verdict(p.name)) {
      j["expected"] = *e ? "holds" : "fails";
      j["matches_expected"] = (p.verdict == (*e ? Verdict::holds : Verdict::fails));
    }
    preds.push_back(j);
  }
  r["predicates"] = preds;
  const auto checks = run_theorem_checks(c);
  json th = json::array();
  for (const auto& t : checks)
    th.push_back({{"id", t.id}, {"statement", t.statement}, {"status", to_string(t.status)}, {"detail", t.detail}});
  r["theorem_checks"] = th;
  json pts = json::array();
  for (const Point& p : c.plan().points) pts.push_back(point_json(p));
  r["samples"] = pts;
  const bool violated = any_violated(checks);
  r["violation"] = violated;
  return {r, violated ? exit_violation : exit_ok};
}

RunOutcome cmd_verify(const RunConfig& cfg) {
  const ProjectiveFixture fx = fixture_get(cfg.fixture, cfg.dim.value_or(3));
  const SamplePlan plan = sample_domain(fx.target ? *fx.target : fx.source, cfg.samples, cfg.seed);
  json r = header(cfg);
  r["fixture"] = {{"name", fx.name},
                  {"description", fx.description},
                  {"factor", fx.factor.name},
                  {"factor_description", fx.factor.description},
                  {"source", describe_metric(fx.source)},
                  {"target", fx.target ? describe_metric(*fx.target) : json(nullptr)},
                  {"claimed_c_projective", fx.c_projective}};
  const FixtureIdentities id = fixture_identities(fx, plan);
  const bool certified = id.q2 < kQThreshold;
  r["c_projectivity"] = {{"q_residual", id.q2}, {"threshold", kQThreshold}, {"c_projective", certified}};
  r["identities"] = {{"douglas_difference", id.douglas_difference},
                     {"berwald_relation", id.berwald_relation},
                     {"mean_berwald_relation", id.mean_berwald_relation},
                     {"p0_relation", id.p0_relation_plus},
                     {"h_difference", id.h_difference},
                     {"hcov_consistency", id.hcov_consistency},
                     {"target_spray", id.target_spray ? json(*id.target_spray) : json(nullptr)}};
  bool failed = fx.c_projective && !certified;
  json inv = json::array();
  for (Predicate p : {Predicate::douglas, Predicate::gdw, Predicate::gbw, Predicate::h_zero}) {
    const InvarianceReport rep = verify_invariance(fx, p, plan, cfg.tol);
    json j = {{"predicate", rep.predicate}, {"outcome", to_string(rep.outcome)}, {"detail", rep.detail}};
    if (rep.source) j["source"] = predicate_json(*rep.source, plan);
    if (rep.transformed) j["transformed"] = predicate_json(*rep.transformed, plan);
    if (rep.outcome == InvarianceOutcome::broken && (p != Predicate::gbw || certified)) failed = true;
    inv.push_back(j);
  }
  r["invariance"] = inv;
  r["violation"] = failed;
  return {r, failed ? exit_violation : exit_ok};
}

RunOutcome cmd_oracle(const RunConfig& cfg) {
  const MetricDef def = resolve_metric(cfg);
  std::vector<OracleTensor> ts;
  if (cfg.tensors.empty()) ts = all_oracle_tensors();
  for (const std::string& n : cfg.tensors) {
    const auto t = parse_oracle_tensor(n);
    if (!t) throw UsageError("unknown oracle tensor '" + n + "'");
    ts.push_back(*t);
  }
  const SamplePlan plan = sample_domain(def, cfg.samples, cfg.seed);
  json r = header(cfg);
  r["metric"] = describe_metric(def);
  json checks = json::array();
  bool failed = false;
  for (OracleTensor t : ts) {
    const FDTensorCheck c = fd_tensor_check(def, t, plan, cfg.oracle);
    failed = failed || !c.passed;
    checks.push_back({{"tensor", c.tensor},
                      {"max_rel_deviation", c.max_rel_deviation},
                      {"gate", c.gate},
                      {"passed", c.passed},
                      {"worst_sample", c.worst_sample},
                      {"worst_point", point_json(plan.points.at(c.worst_sample))},
                      {"max_error_estimate", c.max_error_estimate},
                      {"per_sample", c.per_sample}});
  }
  r["checks"] = checks;
  r["violation"] = failed;
  return {r, failed ? exit_violation : exit_ok};
}

RunOutcome run_command(const RunConfig& cfg) {
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    json r = header(cfg);
    r["error"] = {{"kind", kind}, {"message", msg}};
    return RunOutcome{r, code};
  };
  try {
    if (cfg.format != "json" && cfg.format != "csv") throw UsageError("--format must be json or csv");
    if (cfg.samples < 1) throw UsageError("--samples must be positive");
    if (cfg.command == "eval") return cmd_eval(cfg);
    if (cfg.command == "classify") return cmd_classify(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command == "oracle") return cmd_oracle(cfg);
    throw UsageError("unknown command '" + cfg.command + "'");
  } catch (const ConfigError& e) {
    return fail(exit_usage, "config", e.what());
  } catch (const ParseError& e) {
    return fail(exit_usage, "parse", std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.message());
  } catch (const CatalogError& e) {
    return fail(exit_usage, "catalog", e.what());
  } catch (const UsageError& e) {
    return fail(exit_usage, "usage", e.what());
  } catch (const JetSpecError& e) {
    return fail(exit_usage, "orders", e.what());
  } catch (const NotPositiveDefinite& e) {
    return fail(exit_numerical, "not_positive_definite", e.what());
  } catch (const MetricDomainError& e) {
    return fail(exit_numerical, "domain", e.what());
  } catch (const FDDomainError& e) {
    return fail(exit_numerical, "domain", e.what());
  } catch (const FDRefused& e) {
    return fail(exit_numerical, "fd_refused", e.what());
  } catch (const GeodesicError& e) {
    return fail(exit_numerical, "geodesic", e.what());
  } catch (const SamplingError& e) {
    return fail(exit_numerical, "sampling", e.what());
  } catch (const JetDomainError& e) {
    return fail(exit_numerical, "domain", e.what());
  } catch (const std::system_error& e) {
    return fail(exit_usage, "io", e.what());
  }
}

std::string render(const json& report, const std::string& format) {
  if (format == "json") return report.dump(2) + "\n";
  std::ostringstream os;
  const std::string cmd = report.value("command", "");
  if (report.contains("error")) {
    os << "error_kind,message\n" << report["error"]["kind"].get<std::string>() << ",\""
       << report["error"]["message"].get<std::string>() << "\"\n";
  } else if (cmd == "eval") {
    os << "sample,x,y,tensor,index,value\n";
    const auto& s = report["samples"];
    for (std::size_t i = 0; i < s.size(); ++i)
      for (const auto& [name, t] : s[i]["tensors"].items()) {
        std::vector<std::pair<std::string, double>> flat;
        flatten(t["values"], "", flat);
        for (const auto& [idx, v] : flat)
          os << i << csv_point(s[i]) << ',' << name << ',' << (idx.empty() ? "-" : idx) << ',' << csv_number(v) << '\n';
      }
  } else if (cmd == "classify") {
    os << "predicate,sample,x,y,residual,scale,verdict\n";
    const auto& pts = report["samples"];
    for (const auto& p : report["predicates"]) {
      const auto& per = p["per_sample"];
      for (std::size_t i = 0; i < per.size(); ++i)
        os << p["name"].get<std::string>() << ',' << i << (i < pts.size() ? csv_point(pts[i]) : ",,") << ','
           << csv_number(per[i].is_number() ? per[i].get<double>() : std::nan("")) << ','
           << csv_number(p["scale"].get<double>()) << ',' << p["verdict"].get<std::string>() << '\n';
    }
  } else if (cmd == "verify") {
    os << "predicate,side,residual,verdict,outcome\n";
    for (const auto& inv : report["invariance"])
      for (const char* side : {"source", "transformed"})
        if (inv.contains(side))
          os << inv["predicate"].get<std::string>() << ',' << side << ','
             << csv_number(inv[side]["residual"].get<double>()) << ',' << inv[side]["verdict"].get<std::string>()
             << ',' << inv["outcome"].get<std::string>() << '\n';
  } else if (cmd == "oracle") {
    os << "tensor,sample,rel_deviation,gate,passed\n";
    for (const auto& c : report["checks"]) {
      const auto& per = c["per_sample"];
      for (std::size_t i = 0; i < per.size(); ++i)
        os << c["tensor"].get<std::string>() << ',' << i << ','
           << csv_number(per[i].is_number() ? per[i].get<double>() : std::nan("")) << ','
           << csv_number(c["gate"].get<double>()) << ',' << (c["passed"].get<bool>() ? "true" : "false") << '\n';
    }
  }
  return os.str();
}

json without_timestamp(json report) {
  report.erase("timestamp");
  return report;
}

}  // namespace finsler
