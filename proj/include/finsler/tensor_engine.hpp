#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/metric_library.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(int pivot, double value);
  int pivot() const { return pivot_; }
  /// Cholesky pivot that went non-positive; an estimate of the smallest eigenvalue.
  double value() const { return value_; }

 private:
  int pivot_;
  double value_;
};

struct MetricData {
  Jet F2;
  JetTensor g;        // g_ij
  JetTensor ginv;     // g^ij
  JetTensor y_lower;  // y_i = g_ij y^j
};

/// g_ij = 1/2 d^2 F^2 / dy^i dy^j with its inverse from a jet Cholesky factor.
MetricData fundamental_tensor(const Jet& F2);

/// C_ijk = 1/4 d^3 F^2 / dy^i dy^j dy^k.
JetTensor cartan_torsion(const Jet& F2);

/// Spray coefficients and their y-derivatives up to order 4.
struct SprayData {
  int dim = 0;
  JetTensor G;    // G^i
  JetTensor N;    // N^i_j
  JetTensor Gjk;  // G^i_jk
  JetTensor B;    // B_j^i_kl
  JetTensor G4;   // d^4 G^i / dy^j dy^k dy^l dy^m, stored [j][i][k][l][m]
};

/// Builds the y-derivative cache from the coefficient jets G^i.
SprayData spray_from_coefficients(std::vector<Jet> G);
SprayData spray(const MetricData& m);
SprayData spray(const Jet& F2);

JetTensor berwald_curvature(const SprayData& s);
/// E_jk = 1/2 B_j^m_km.
JetTensor mean_berwald(const JetTensor& B);
/// E_jkl = dE_jk / dy^l.
JetTensor mean_berwald_derivative(const JetTensor& E);

/// T_|0 for the Berwald connection.
JetTensor hcov0(const JetTensor& T, const SprayData& s);
/// T_|m for the Berwald connection; the derivative index is appended last.
JetTensor hcov(const JetTensor& T, const SprayData& s);

JetTensor h_curvature(const SprayData& s);

enum class DouglasMode { definition, eq_D2 };
JetTensor douglas_tensor(const SprayData& s, DouglasMode mode);

/// R^i_k.
JetTensor riemann_curvature(const SprayData& s);
/// R_j^i_kl = 1/3 (d^2 R^i_k / dy^j dy^l - d^2 R^i_l / dy^j dy^k).
JetTensor riemann_full(const JetTensor& Rik);

/// Max-norm of B_j^i_ml|k - B_j^i_km|l - R_j^i_kl.m over all indices.
double ricci_identity_residual(const SprayData& s);

/// L_jkl = -1/2 y_i B_j^i_kl.
JetTensor landsberg_curvature(const JetTensor& B, const JetTensor& y_lower);

/// W~^i_k from R^i_k, with K_jk the Ricci contraction R_j^m_mk.
JetTensor wtilde_from_riemann(const JetTensor& Rik);
JetTensor wtilde_curvature(const SprayData& s);

/// h^i_k = delta^i_k - y^i y_k / F^2.
JetTensor angular_metric(const MetricData& m);

/// h^i_r T_j^r_kl, projecting the up index (position 1) of a rank-4 tensor.
TensorValue angular_projection(const TensorValue& h, const TensorValue& T);

JetSpec default_spec(int dim);

/// Per-sample evaluation context. Owns its jets; everything is computed on
/// first use and cached.
class Geometry {
 public:
  Geometry(const MetricDef& def, const Point& p, std::optional<JetSpec> spec = std::nullopt);
  explicit Geometry(Jet F2);
  /// Metric quantities from F2, spray supplied separately (projective changes).
  Geometry(Jet F2, SprayData spray);

  int dim() const { return F2_.dim(); }
  const Point& point() const { return *F2_.base(); }
  const Jet& F2() const { return F2_; }
  const MetricData& metric();
  const SprayData& spray();

  const JetTensor& C();
  const JetTensor& E();
  const JetTensor& Ejkl();
  const JetTensor& H();
  const JetTensor& D(DouglasMode mode = DouglasMode::definition);
  const JetTensor& R();
  const JetTensor& Rfull();
  const JetTensor& L();
  const JetTensor& Wtilde();
  const JetTensor& h();
  /// B_j^i_kl|0 and D_j^i_kl|0.
  const JetTensor& B0();
  const JetTensor& D0();
  /// S = dG^m/dy^m.
  Jet S();

 private:
  Jet F2_;
  std::optional<MetricData> metric_;
  std::optional<SprayData> spray_;
  std::optional<JetTensor> C_, E_, Ejkl_, H_, D_, Deq_, R_, Rfull_, L_, W_, h_, B0_, D0_;
};

// -- geodesics -----------------------------------------------------------------

struct GeodesicPoint {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> v;
};

class GeodesicError : public std::runtime_error {
 public:
  GeodesicError(const std::string& what, double t);
  double time() const { return t_; }

 private:
  double t_;
};

/// G^i at a plain point.
std::vector<double> spray_value(const MetricDef& def, const std::vector<double>& x, const std::vector<double>& y);

using SprayField = std::function<std::vector<double>(const std::vector<double>&, const std::vector<double>&)>;

/// Fixed-step RK4 on c' = v, v' = -2 G(c, v). Returns steps + 1 samples;
/// throws GeodesicError when a stage leaves the domain or turns non-finite.
std::vector<GeodesicPoint> integrate_geodesic(const SprayField& G, const Domain& domain, std::vector<double> x0,
                                              std::vector<double> y0, double t_end, int steps);
std::vector<GeodesicPoint> integrate_geodesic(const MetricDef& def, std::vector<double> x0, std::vector<double> y0,
                                              double t_end, int steps);

}  // namespace finsler
