#include "finsler/tensor_engine.hpp"

#include <cmath>
#include <sstream>

namespace finsler {

namespace {

using V = Variance;

MultiIndex zero(int n) { return MultiIndex(n); }

Jet ylift(const Jet& like, int i) { return Jet::lift(like.spec(), like.base(), Block::y, i); }

JetTensor make(int n, std::vector<Variance> var, int y_degree, const std::shared_ptr<const Point>& p) {
  JetTensor t;
  t.dim = n;
  t.variance = std::move(var);
  t.y_degree = y_degree;
  t.point = p;
  t.comps.reserve(tensor_size(n, t.rank()));
  return t;
}

/// Appends a down index m holding d/dy^m of every component.
JetTensor dy_tensor(const JetTensor& t) {
  auto var = t.variance;
  var.push_back(V::down);
  JetTensor out = make(t.dim, var, t.y_degree - 1, t.point);
  for (const Jet& c : t.comps)
    for (int m = 0; m < t.dim; ++m) out.comps.push_back(c.dy(m));
  return out;
}

Index with(Index idx, int pos, int value) {
  idx[pos] = value;
  return idx;
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(int pivot, double value)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "fundamental tensor is not positive definite (Cholesky pivot " << pivot << " = " << value << ")";
        return os.str();
      }()),
      pivot_(pivot),
      value_(value) {}

MetricData fundamental_tensor(const Jet& F2) {
  const int n = F2.dim();
  if (F2.spec().ky < 2) throw JetSpecError("fundamental tensor needs y-order 2");
  MetricData m{F2, make(n, {V::down, V::down}, 0, F2.base()), make(n, {V::up, V::up}, 0, F2.base()),
               make(n, {V::down}, 1, F2.base())};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.g.comps.push_back(0.5 * F2.dy(i).dy(j));

  // g = L L^T, then g^-1 = M^T M with M = L^-1.
  std::vector<std::optional<Jet>> L(n * n), M(n * n);
  for (int j = 0; j < n; ++j) {
    Jet s = m.g(j, j);
    for (int k = 0; k < j; ++k) s = s - *L[j * n + k] * *L[j * n + k];
    if (!(s.value() > 0.0)) throw NotPositiveDefinite(j, s.value());
    L[j * n + j] = sqrt(s);
    for (int i = j + 1; i < n; ++i) {
      Jet t = m.g(i, j);
      for (int k = 0; k < j; ++k) t = t - *L[i * n + k] * *L[j * n + k];
      L[i * n + j] = t / *L[j * n + j];
    }
  }
  for (int i = 0; i < n; ++i) {
    M[i * n + i] = 1.0 / *L[i * n + i];
    for (int j = 0; j < i; ++j) {
      Jet s = *L[i * n + j] * *M[j * n + j];
      for (int k = j + 1; k < i; ++k) s = s + *L[i * n + k] * *M[k * n + j];
      M[i * n + j] = -s * *M[i * n + i];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int lo = std::max(i, j);
      Jet s = *M[lo * n + i] * *M[lo * n + j];
      for (int k = lo + 1; k < n; ++k) s = s + *M[k * n + i] * *M[k * n + j];
      m.ginv.comps.push_back(std::move(s));
    }
  }
  for (int i = 0; i < n; ++i) {
    Jet s = m.g(i, 0) * ylift(m.g(i, 0), 0);
    for (int j = 1; j < n; ++j) s = s + m.g(i, j) * ylift(m.g(i, j), j);
    m.y_lower.comps.push_back(std::move(s));
  }
  return m;
}

JetTensor cartan_torsion(const Jet& F2) {
  const int n = F2.dim();
  JetTensor c = make(n, {V::down, V::down, V::down}, -1, F2.base());
  for_each_index(n, 3, [&](const Index& i) { c.comps.push_back(0.25 * F2.dy(i[0]).dy(i[1]).dy(i[2])); });
  return c;
}

SprayData spray_from_coefficients(std::vector<Jet> G) {
  const int n = static_cast<int>(G.size());
  const auto p = G.at(0).base();
  const int ky = G[0].spec().ky;
  SprayData s;
  s.dim = n;
  s.G = make(n, {V::up}, 2, p);
  s.G.comps = std::move(G);
  s.N = make(n, {V::up, V::down}, 1, p);
  s.Gjk = make(n, {V::up, V::down, V::down}, 0, p);
  s.B = make(n, {V::down, V::up, V::down, V::down}, -1, p);
  s.G4 = make(n, {V::down, V::up, V::down, V::down, V::down}, -2, p);
  // Levels beyond the available y-order stay empty.
  if (ky >= 1) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s.N.comps.push_back(s.G(i).dy(j));
  }
  if (ky >= 2) for_each_index(n, 3, [&](const Index& i) { s.Gjk.comps.push_back(s.N(i[0], i[1]).dy(i[2])); });
  if (ky >= 3) for_each_index(n, 4, [&](const Index& i) { s.B.comps.push_back(s.Gjk(i[1], i[0], i[2]).dy(i[3])); });
  if (ky >= 4) {
    for (const Jet& b : s.B.comps)
      for (int m = 0; m < n; ++m) s.G4.comps.push_back(b.dy(m));
  }
  return s;
}

namespace {

const SprayData& require(const SprayData& s, int level) {
  const JetTensor* t[] = {&s.G, &s.N, &s.Gjk, &s.B, &s.G4};
  if (t[level]->comps.empty()) {
    throw JetSpecError("spray jets carry y-order " + std::to_string(s.G.comps[0].spec().ky) + ", " +
                       std::to_string(level) + " y-derivatives are needed");
  }
  return s;
}

}  // namespace

SprayData spray(const MetricData& m) {
  const Jet& F2 = m.F2;
  const int n = F2.dim();
  if (F2.spec().kx < 1 || F2.spec().ky < 2) throw JetSpecError("spray needs x-order 1 and y-order 2");
  std::vector<Jet> w;
  for (int l = 0; l < n; ++l) {
    const Jet Fl = F2.dy(l);
    Jet s = -F2.dx(l);
    for (int k = 0; k < n; ++k) s = s + Fl.dx(k) * ylift(Fl, k);
    w.push_back(std::move(s));
  }
  std::vector<Jet> G;
  for (int i = 0; i < n; ++i) {
    Jet s = m.ginv(i, 0) * w[0];
    for (int l = 1; l < n; ++l) s = s + m.ginv(i, l) * w[l];
    G.push_back(0.25 * s);
  }
  return spray_from_coefficients(std::move(G));
}

SprayData spray(const Jet& F2) { return spray(fundamental_tensor(F2)); }

JetTensor berwald_curvature(const SprayData& s) { return require(s, 3).B; }

JetTensor mean_berwald(const JetTensor& B) {
  const int n = B.dim;
  JetTensor e = make(n, {V::down, V::down}, B.y_degree, B.point);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Jet s = B(j, 0, k, 0);
      for (int m = 1; m < n; ++m) s = s + B(j, m, k, m);
      e.comps.push_back(0.5 * s);
    }
  }
  return e;
}

JetTensor mean_berwald_derivative(const JetTensor& E) { return dy_tensor(E); }

JetTensor hcov0(const JetTensor& T, const SprayData& s) {
  require(s, 1);
  const int n = T.dim;
  const int r = T.rank();
  JetTensor out = make(n, T.variance, T.y_degree + 1, T.point);
  for_each_index(n, r, [&](const Index& idx) {
    const Jet& c = T[idx];
    Jet acc = c.dx(0) * ylift(c, 0) - 2.0 * (s.G(0) * c.dy(0));
    for (int m = 1; m < n; ++m) acc = acc + c.dx(m) * ylift(c, m) - 2.0 * (s.G(m) * c.dy(m));
    for (int p = 0; p < r; ++p) {
      for (int q = 0; q < n; ++q) {
        if (T.variance[p] == V::up) {
          acc = acc + s.N(idx[p], q) * T[with(idx, p, q)];
        } else {
          acc = acc - s.N(q, idx[p]) * T[with(idx, p, q)];
        }
      }
    }
    out.comps.push_back(std::move(acc));
  });
  return out;
}

JetTensor hcov(const JetTensor& T, const SprayData& s) {
  const int n = T.dim;
  const int r = T.rank();
  if (r + 1 > kMaxRank) throw TensorError("rank too large for a covariant derivative");
  require(s, 2);
  auto var = T.variance;
  var.push_back(V::down);
  JetTensor out = make(n, var, T.y_degree, T.point);
  for_each_index(n, r, [&](const Index& idx) {
    const Jet& c = T[idx];
    std::vector<Jet> dy;
    for (int q = 0; q < n; ++q) dy.push_back(c.dy(q));
    for (int m = 0; m < n; ++m) {
      Jet acc = c.dx(m);
      for (int q = 0; q < n; ++q) acc = acc - s.N(q, m) * dy[q];
      for (int p = 0; p < r; ++p) {
        for (int q = 0; q < n; ++q) {
          if (T.variance[p] == V::up) {
            acc = acc + s.Gjk(idx[p], q, m) * T[with(idx, p, q)];
          } else {
            acc = acc - s.Gjk(q, idx[p], m) * T[with(idx, p, q)];
          }
        }
      }
      out.comps.push_back(std::move(acc));
    }
  });
  return out;
}

JetTensor h_curvature(const SprayData& s) { return hcov0(mean_berwald(require(s, 3).B), s); }

JetTensor douglas_tensor(const SprayData& s, DouglasMode mode) {
  require(s, 3);
  const int n = s.dim;
  JetTensor d = make(n, {V::down, V::up, V::down, V::down}, -1, s.B.point);
  const double c = 1.0 / (n + 1);
  if (mode == DouglasMode::definition) {
    Jet S = s.N(0, 0);
    for (int m = 1; m < n; ++m) S = S + s.N(m, m);
    std::vector<Jet> Sy;
    for (int i = 0; i < n; ++i) Sy.push_back(S * ylift(S, i));
    for_each_index(n, 4, [&](const Index& i) {
      d.comps.push_back(s.B[i] - c * Sy[i[1]].dy(i[0]).dy(i[2]).dy(i[3]));
    });
  } else {
    const JetTensor E = mean_berwald(s.B);
    const JetTensor E3 = mean_berwald_derivative(E);
    for_each_index(n, 4, [&](const Index& x) {
      const int j = x[0], i = x[1], k = x[2], l = x[3];
      Jet t = E3(j, k, l) * ylift(E3(j, k, l), i);
      if (i == l) t = t + E(j, k);
      if (i == k) t = t + E(j, l);
      if (i == j) t = t + E(k, l);
      d.comps.push_back(s.B[x] - 2.0 * c * t);
    });
  }
  return d;
}

JetTensor riemann_curvature(const SprayData& s) {
  require(s, 2);
  const int n = s.dim;
  JetTensor R = make(n, {V::up, V::down}, 2, s.G.point);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      Jet acc = 2.0 * s.G(i).dx(k);
      for (int j = 0; j < n; ++j) {
        const Jet t = s.N(i, k).dx(j);
        acc = acc - t * ylift(t, j) + 2.0 * (s.G(j) * s.Gjk(i, j, k)) - s.N(i, j) * s.N(j, k);
      }
      R.comps.push_back(std::move(acc));
    }
  }
  return R;
}

JetTensor riemann_full(const JetTensor& Rik) {
  const int n = Rik.dim;
  JetTensor R = make(n, {V::down, V::up, V::down, V::down}, 0, Rik.point);
  for_each_index(n, 4, [&](const Index& x) {
    const int j = x[0], i = x[1], k = x[2], l = x[3];
    R.comps.push_back((Rik(i, k).dy(j).dy(l) - Rik(i, l).dy(j).dy(k)) / 3.0);
  });
  return R;
}

double ricci_identity_residual(const SprayData& s) {
  require(s, 3);
  const int n = s.dim;
  const JetTensor hB = hcov(s.B, s);
  const JetTensor dR = dy_tensor(riemann_full(riemann_curvature(s)));
  double worst = 0.0;
  for_each_index(n, 5, [&](const Index& x) {
    const int j = x[0], i = x[1], k = x[2], l = x[3], m = x[4];
    const double r = hB(j, i, m, l, k).value() - hB(j, i, k, m, l).value() - dR(j, i, k, l, m).value();
    worst = std::max(worst, std::abs(r));
  });
  return worst;
}

JetTensor landsberg_curvature(const JetTensor& B, const JetTensor& y_lower) {
  const int n = B.dim;
  JetTensor L = make(n, {V::down, V::down, V::down}, 0, B.point);
  for_each_index(n, 3, [&](const Index& x) {
    Jet s = y_lower(0) * B(x[0], 0, x[1], x[2]);
    for (int i = 1; i < n; ++i) s = s + y_lower(i) * B(x[0], i, x[1], x[2]);
    L.comps.push_back(-0.5 * s);
  });
  return L;
}

JetTensor wtilde_from_riemann(const JetTensor& Rik) {
  const int n = Rik.dim;
  if (n < 2) throw TensorError("W~ needs n >= 2");
  const JetTensor Rf = riemann_full(Rik);
  JetTensor K = make(n, {V::down, V::down}, 0, Rik.point);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Jet s = Rf(j, 0, 0, k);
      for (int m = 1; m < n; ++m) s = s + Rf(j, m, m, k);
      K.comps.push_back(std::move(s));
    }
  }
  // Kt_jk = n K_jk + K_kj + y^r dK_kr/dy^j
  std::vector<Jet> Kt;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Jet s = static_cast<double>(n) * K(j, k) + K(k, j);
      for (int r = 0; r < n; ++r) {
        const Jet d = K(k, r).dy(j);
        s = s + d * ylift(d, r);
      }
      Kt.push_back(std::move(s));
    }
  }
  std::vector<Jet> Kt0;
  for (int k = 0; k < n; ++k) {
    Jet s = Kt[k] * ylift(Kt[k], 0);
    for (int j = 1; j < n; ++j) s = s + Kt[j * n + k] * ylift(Kt[j * n + k], j);
    Kt0.push_back(std::move(s));
  }
  Jet Kt00 = Kt0[0] * ylift(Kt0[0], 0);
  for (int k = 1; k < n; ++k) Kt00 = Kt00 + Kt0[k] * ylift(Kt0[k], k);
  const double c = 1.0 / (1.0 - static_cast<double>(n) * n);
  JetTensor W = make(n, {V::up, V::down}, 2, Rik.point);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      Jet t = ylift(Kt0[k], i) * Kt0[k];
      if (i == k) t = t - Kt00;
      W.comps.push_back(Rik(i, k) - c * t);
    }
  }
  return W;
}

JetTensor wtilde_curvature(const SprayData& s) { return wtilde_from_riemann(riemann_curvature(s)); }

JetTensor angular_metric(const MetricData& m) {
  const int n = m.F2.dim();
  JetTensor h = make(n, {V::up, V::down}, 0, m.F2.base());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      Jet t = -(ylift(m.y_lower(k), i) * m.y_lower(k)) / m.F2;
      if (i == k) t += 1.0;
      h.comps.push_back(std::move(t));
    }
  }
  return h;
}

TensorValue angular_projection(const TensorValue& h, const TensorValue& T) {
  if (T.rank() != 4 || T.variance[1] != V::up) throw TensorError("angular projection expects T_j^i_kl");
  TensorValue out = T;
  const int n = T.dim;
  for_each_index(n, 4, [&](const Index& x) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += h(x[1], r) * T(x[0], r, x[2], x[3]);
    out[x] = s;
  });
  return out;
}

JetSpec default_spec(int dim) { return {dim, 2, 7}; }

// -- Geometry ------------------------------------------------------------------

Geometry::Geometry(const MetricDef& def, const Point& p, std::optional<JetSpec> spec)
    : F2_(def.f2_jet(spec.value_or(default_spec(def.dim)), p)) {}

Geometry::Geometry(Jet F2) : F2_(std::move(F2)) {}

Geometry::Geometry(Jet F2, SprayData s) : F2_(std::move(F2)), spray_(std::move(s)) {}

const MetricData& Geometry::metric() {
  if (!metric_) metric_ = fundamental_tensor(F2_);
  return *metric_;
}

const SprayData& Geometry::spray() {
  if (!spray_) spray_ = finsler::spray(metric());
  return *spray_;
}

const JetTensor& Geometry::C() {
  if (!C_) C_ = cartan_torsion(F2_);
  return *C_;
}

const JetTensor& Geometry::E() {
  if (!E_) E_ = mean_berwald(berwald_curvature(spray()));
  return *E_;
}

const JetTensor& Geometry::Ejkl() {
  if (!Ejkl_) Ejkl_ = mean_berwald_derivative(E());
  return *Ejkl_;
}

const JetTensor& Geometry::H() {
  if (!H_) H_ = hcov0(E(), spray());
  return *H_;
}

const JetTensor& Geometry::D(DouglasMode mode) {
  auto& slot = mode == DouglasMode::definition ? D_ : Deq_;
  if (!slot) slot = douglas_tensor(spray(), mode);
  return *slot;
}

const JetTensor& Geometry::R() {
  if (!R_) R_ = riemann_curvature(spray());
  return *R_;
}

const JetTensor& Geometry::Rfull() {
  if (!Rfull_) Rfull_ = riemann_full(R());
  return *Rfull_;
}

const JetTensor& Geometry::L() {
  if (!L_) L_ = landsberg_curvature(berwald_curvature(spray()), metric().y_lower);
  return *L_;
}

const JetTensor& Geometry::Wtilde() {
  if (!W_) W_ = wtilde_from_riemann(R());
  return *W_;
}

const JetTensor& Geometry::h() {
  if (!h_) h_ = angular_metric(metric());
  return *h_;
}

const JetTensor& Geometry::B0() {
  if (!B0_) B0_ = hcov0(berwald_curvature(spray()), spray());
  return *B0_;
}

const JetTensor& Geometry::D0() {
  if (!D0_) D0_ = hcov0(D(), spray());
  return *D0_;
}

Jet Geometry::S() {
  const SprayData& s = require(spray(), 1);
  Jet t = s.N(0, 0);
  for (int m = 1; m < s.dim; ++m) t = t + s.N(m, m);
  return t;
}

// -- geodesics -----------------------------------------------------------------

GeodesicError::GeodesicError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}

std::vector<double> spray_value(const MetricDef& def, const std::vector<double>& x, const std::vector<double>& y) {
  const SprayData s = spray(def.f2_jet({def.dim, 1, 2}, Point{x, y}));
  std::vector<double> g;
  for (const Jet& j : s.G.comps) g.push_back(j.value());
  return g;
}

std::vector<GeodesicPoint> integrate_geodesic(const SprayField& G, const Domain& domain, std::vector<double> x0,
                                              std::vector<double> y0, double t_end, int steps) {
  if (steps <= 0) throw std::invalid_argument("geodesic needs at least one step");
  const std::size_t n = x0.size();
  const double dt = t_end / steps;
  using State = std::vector<double>;  // (x, v)
  State u(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = x0[i];
    u[n + i] = y0[i];
  }
  auto rhs = [&](const State& s, double t) {
    std::vector<double> x(s.begin(), s.begin() + n), v(s.begin() + n, s.end());
    for (double c : s) {
      if (!std::isfinite(c)) throw GeodesicError("geodesic state became non-finite", t);
    }
    if (!domain.contains(x)) {
      std::ostringstream os;
      os << "geodesic left the domain (" << domain.description << ") near t = " << t;
      throw GeodesicError(os.str(), t);
    }
    std::vector<double> g;
    try {
      g = G(x, v);
    } catch (const GeodesicError&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "spray evaluation failed near t = " << t << ": " << e.what();
      throw GeodesicError(os.str(), t);
    }
    State d(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = v[i];
      d[n + i] = -2.0 * g[i];
    }
    return d;
  };
  auto axpy = [](const State& a, double h, const State& b) {
    State r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += h * b[i];
    return r;
  };
  std::vector<GeodesicPoint> out;
  out.push_back({0.0, x0, y0});
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const State k1 = rhs(u, t);
    const State k2 = rhs(axpy(u, dt / 2, k1), t + dt / 2);
    const State k3 = rhs(axpy(u, dt / 2, k2), t + dt / 2);
    const State k4 = rhs(axpy(u, dt, k3), t + dt);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    GeodesicPoint gp{(k + 1) * dt, {u.begin(), u.begin() + n}, {u.begin() + n, u.end()}};
    for (double c : u) {
      if (!std::isfinite(c)) throw GeodesicError("geodesic state became non-finite", gp.t);
    }
    if (!domain.contains(gp.x)) {
      std::ostringstream os;
      os << "geodesic left the domain (" << domain.description << ") at t = " << gp.t;
      throw GeodesicError(os.str(), gp.t);
    }
    out.push_back(std::move(gp));
  }
  return out;
}

std::vector<GeodesicPoint> integrate_geodesic(const MetricDef& def, std::vector<double> x0, std::vector<double> y0,
                                              double t_end, int steps) {
  return integrate_geodesic([&def](const std::vector<double>& x, const std::vector<double>& v) { return spray_value(def, x, v); },
                            def.domain, std::move(x0), std::move(y0), t_end, steps);
}

}  // namespace finsler
