#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/metric_library.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

struct FDConfig {
  /// Base step, scaled per coordinate by max(1, |coordinate|).
  double h0 = 1e-2;
  /// Richardson levels; the step halves per level.
  int levels = 3;
};

struct FDResult {
  double value = 0.0;
  /// |difference of the last two tableau diagonal entries|.
  double error = 0.0;
};

class FDRefused : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FDDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

constexpr int kMaxFDOrder = 7;

/// Vector-valued function of k real variables.
using VectorFunction = std::function<std::vector<long double>(const std::vector<long double>&)>;

/// Central-difference derivative of every component, orders[v] times in
/// variable v, with Richardson extrapolation. steps[v] is the base step.
std::vector<FDResult> fd_derivative(const VectorFunction& f, const std::vector<long double>& base,
                                    const std::vector<int>& orders, const std::vector<long double>& steps, int levels);

using ScalarField = std::function<long double(const std::vector<double>& x, const std::vector<double>& y)>;

/// d^{|alpha|+|beta|} f / dx^alpha dy^beta at base.
FDResult fd_partial(const ScalarField& f, const Point& base, const MultiIndex& alpha, const MultiIndex& beta,
                    const FDConfig& cfg = {});

enum class OracleTensor { g, C, G, N, B, E, H, D, R, L, Wtilde };
std::string to_string(OracleTensor t);
std::optional<OracleTensor> parse_oracle_tensor(const std::string& s);
std::vector<OracleTensor> all_oracle_tensors();
/// Relative engine-versus-oracle gate.
double oracle_gate(OracleTensor t);

/// Steps of the two finite-difference passes. The inner pass builds G from
/// F^2 and runs more levels so that G is smooth enough to be differentiated
/// again by the outer pass. x-steps are scaled by x_scale.
struct OracleConfig {
  FDConfig inner{1e-1, 5};
  FDConfig outer{1e-1, 4};
  double x_scale = 0.3;
};

/// Recomputes tensors at one point from finite differences of plain
/// F^2 evaluations only. The spray is itself a finite-difference field;
/// its derivatives are taken by a second finite-difference pass.
class FDOracle {
 public:
  FDOracle(const MetricDef& def, const Point& p, OracleConfig cfg = {});

  TensorValue tensor(OracleTensor t);
  /// Largest Richardson error estimate among the derivatives used so far,
  /// relative to max(1, |derivative|).
  double error_estimate() const { return error_; }

 private:
  using Key = std::pair<int, std::vector<int>>;

  std::vector<long double> spray_at(const std::vector<long double>& x, const std::vector<long double>& y) const;
  const std::vector<double>& f2_partial_y(const std::vector<int>& beta);
  /// Derivative of G: space 0 is (x, y); space 1 is (t, y) with x = x0 + t y0.
  const std::vector<double>& g_deriv(int space, const std::vector<int>& orders);
  std::vector<double> gy(std::initializer_list<int> ys);
  std::vector<double> gxy(int xk, std::initializer_list<int> ys);
  std::vector<double> gty(std::initializer_list<int> ys);

  TensorValue make(std::vector<Variance> var, int degree) const;
  TensorValue compute_g();
  TensorValue compute_R();
  std::vector<std::vector<double>> dR();

  const MetricDef& def_;
  Point p_;
  OracleConfig cfg_;
  int n_;
  std::vector<long double> inner_steps_;
  double error_ = 0.0;
  std::map<Key, std::vector<double>> cache_;
  std::map<std::vector<int>, std::vector<double>> f2_cache_;
  std::map<OracleTensor, TensorValue> tensors_;
};

struct FDTensorCheck {
  std::string tensor;
  double max_rel_deviation = 0.0;
  double gate = 0.0;
  bool passed = false;
  std::size_t worst_sample = 0;
  double max_error_estimate = 0.0;
  std::vector<double> per_sample;
};

/// Engine versus oracle, max over samples of max|T_fd - T_jet| / max(1, max|T_jet|).
FDTensorCheck fd_tensor_check(const MetricDef& def, OracleTensor t, const SamplePlan& samples,
                              const OracleConfig& cfg = {});

}  // namespace finsler
