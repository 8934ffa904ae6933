#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "finsler/report.hpp"

using namespace finsler;

namespace {

void add_common(CLI::App* sub, RunConfig& cfg, std::string& orders, bool metric_options) {
  if (metric_options) {
    sub->add_option("--metric", cfg.metric, "catalog metric name");
    sub->add_option("--config", cfg.config_path, "metric config file");
    sub->add_option("--param", cfg.params, "NAME=VALUE override, vectors as comma lists")->allow_extra_args(false);
  }
  sub->add_option("--dim", cfg.dim, "dimension override")->check(CLI::Range(2, 4));
  sub->add_option("--samples", cfg.samples, "number of samples")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
  sub->add_option("--tol", cfg.tol, "predicate tolerance")->capture_default_str();
  sub->add_option("--orders", orders, "jet orders KX,KY");
  sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  sub->add_option("--out", cfg.out, "output path (default stdout)");
}

std::pair<int, int> parse_orders(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    std::size_t a = 0, b = 0;
    const int kx = std::stoi(s.substr(0, comma), &a);
    const int ky = std::stoi(s.substr(comma + 1), &b);
    if (a != comma || b != s.size() - comma - 1 || kx < 0 || ky < 0) throw std::invalid_argument(s);
    return {kx, ky};
  } catch (const std::exception&) {
    throw UsageError("--orders expects KX,KY, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler curvature and projective-invariant workbench"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string orders;

  CLI::App* eval = app.add_subcommand("eval", "tensor values at samples");
  add_common(eval, cfg, orders, true);
  eval->add_option("--tensors", cfg.tensors, "comma list of tensors (default g)")->delimiter(',');

  CLI::App* classify = app.add_subcommand("classify", "predicates and theorem checks");
  add_common(classify, cfg, orders, true);

  CLI::App* verify = app.add_subcommand("verify", "projective fixture invariance");
  add_common(verify, cfg, orders, false);
  verify->add_option("--fixture", cfg.fixture, "fixture name")->capture_default_str();

  CLI::App* oracle = app.add_subcommand("oracle", "finite-difference audit of the jet engine");
  add_common(oracle, cfg, orders, true);
  oracle->add_option("--tensors", cfg.tensors, "comma list of tensors (default all)")->delimiter(',');
  oracle->add_option("--h0", cfg.oracle.outer.h0, "outer step")->capture_default_str();
  oracle->add_option("--levels", cfg.oracle.outer.levels, "outer Richardson levels")->capture_default_str();
  oracle->add_option("--inner-h0", cfg.oracle.inner.h0, "inner step")->capture_default_str();
  oracle->add_option("--inner-levels", cfg.oracle.inner.levels, "inner Richardson levels")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  RunOutcome out;
  try {
    if (!orders.empty()) cfg.orders = parse_orders(orders);
    out = run_command(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  if (out.report.contains("error")) std::cerr << "error: " << out.report["error"]["message"].get<std::string>() << "\n";

  const std::string text = render(out.report, cfg.format);
  if (cfg.out) {
    std::ofstream f(*cfg.out, std::ios::binary);
    if (!f || !(f << text)) {
      std::cerr << "error: cannot write " << *cfg.out << "\n";
      return exit_usage;
    }
  } else if (!out.report.contains("error")) {
    std::cout << text;
  }
  return out.exit_code;
}
