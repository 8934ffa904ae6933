#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "finsler/fd_oracle.hpp"
#include "finsler/metric_library.hpp"

namespace finsler {

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "finsler 0.1.0";

enum ExitCode { exit_ok = 0, exit_violation = 1, exit_usage = 2, exit_numerical = 3 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command;  // eval | classify | verify | oracle
  std::optional<std::string> metric;
  std::optional<std::string> config_path;
  std::optional<int> dim;
  int samples = 10;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  std::optional<std::pair<int, int>> orders;
  std::string format = "json";
  std::optional<std::string> out;
  /// NAME=VALUE as given on the command line.
  std::vector<std::string> params;
  std::vector<std::string> tensors;
  std::string fixture = "funk_pair";
  OracleConfig oracle;
};

struct RunOutcome {
  nlohmann::json report;
  int exit_code = exit_ok;
};

/// Catalog metric or config file with parameter overrides applied.
MetricDef resolve_metric(const RunConfig& cfg);

nlohmann::json config_echo(const RunConfig& cfg);
nlohmann::json describe_metric(const MetricDef& def);

RunOutcome cmd_eval(const RunConfig& cfg);
RunOutcome cmd_classify(const RunConfig& cfg);
RunOutcome cmd_verify(const RunConfig& cfg);
RunOutcome cmd_oracle(const RunConfig& cfg);

/// Dispatches on cfg.command. Errors become a report with an "error" member
/// and exit code 2 (usage, config, parse) or 3 (numerical failure).
RunOutcome run_command(const RunConfig& cfg);

/// JSON (canonical) or the flattened CSV projection.
std::string render(const nlohmann::json& report, const std::string& format);

/// Copy of the report with the timestamp removed.
nlohmann::json without_timestamp(nlohmann::json report);

}  // namespace finsler
