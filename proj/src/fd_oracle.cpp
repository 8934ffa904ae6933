#include "finsler/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "finsler/metric_lang.hpp"
#include "finsler/tensor_engine.hpp"

namespace finsler {

namespace {

using V = Variance;
using LD = long double;

std::vector<LD> scaled_steps(const std::vector<LD>& base, double h, std::size_t nx, double x_scale) {
  std::vector<LD> steps;
  for (std::size_t q = 0; q < base.size(); ++q)
    steps.push_back(static_cast<LD>(h) * (q < nx ? x_scale : 1.0) * std::max(1.0L, std::fabs(base[q])));
  return steps;
}

std::vector<LD> widen(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::vector<LD> concat(std::vector<LD> a, const std::vector<LD>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Central weights for the m-th derivative on offsets -p..p, p = ceil(m/2).
const std::vector<LD>& central_weights(int m) {
  static std::mutex mu;
  static std::map<int, std::vector<LD>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  const int p = (m + 1) / 2;
  const int s = 2 * p + 1;
  std::vector<std::vector<LD>> a(s, std::vector<LD>(s + 1, 0.0L));
  LD fact = 1.0L;
  for (int k = 2; k <= m; ++k) fact *= k;
  for (int k = 0; k < s; ++k) {
    for (int j = 0; j < s; ++j) a[k][j] = std::pow(static_cast<LD>(j - p), static_cast<LD>(k));
    a[k][s] = k == m ? fact : 0.0L;
  }
  for (int c = 0; c < s; ++c) {
    int piv = c;
    for (int r = c + 1; r < s; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < s; ++r) {
      if (r == c) continue;
      const LD f = a[r][c] / a[c][c];
      for (int j = c; j <= s; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<LD> w(s);
  for (int j = 0; j < s; ++j) {
    w[j] = a[j][s] / a[j][j];
    if (std::fabs(w[j]) < 1e-15L) w[j] = 0.0L;
  }
  return cache.emplace(m, std::move(w)).first->second;
}

std::vector<LD> one_level(const VectorFunction& f, const std::vector<LD>& base, const std::vector<int>& orders,
                          const std::vector<LD>& h) {
  std::vector<int> active;
  for (std::size_t v = 0; v < orders.size(); ++v)
    if (orders[v] > 0) active.push_back(static_cast<int>(v));
  std::vector<const std::vector<LD>*> ws;
  for (int v : active) ws.push_back(&central_weights(orders[v]));
  std::vector<std::size_t> pos(active.size(), 0);
  std::vector<LD> acc;
  std::vector<LD> pt = base;
  while (true) {
    LD w = 1.0L;
    for (std::size_t a = 0; a < active.size(); ++a) w *= (*ws[a])[pos[a]];
    if (w != 0.0L) {
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int v = active[a];
        const long off = static_cast<long>(pos[a]) - static_cast<long>(ws[a]->size() / 2);
        pt[v] = base[v] + static_cast<LD>(off) * h[v];
      }
      const std::vector<LD> val = f(pt);
      if (acc.empty()) acc.assign(val.size(), 0.0L);
      for (std::size_t c = 0; c < val.size(); ++c) acc[c] += w * val[c];
    }
    std::size_t a = 0;
    for (; a < active.size(); ++a) {
      if (++pos[a] < ws[a]->size()) break;
      pos[a] = 0;
    }
    if (a == active.size()) break;
  }
  LD scale = 1.0L;
  for (int v : active) scale *= std::pow(h[v], static_cast<LD>(orders[v]));
  for (LD& c : acc) c /= scale;
  return acc;
}

}  // namespace

std::vector<FDResult> fd_derivative(const VectorFunction& f, const std::vector<LD>& base,
                                    const std::vector<int>& orders, const std::vector<LD>& steps, int levels) {
  if (orders.size() != base.size() || steps.size() != base.size())
    throw std::invalid_argument("fd_derivative: orders, steps and base differ in size");
  if (levels < 1) throw std::invalid_argument("fd_derivative: levels must be >= 1");
  int total = 0;
  for (int o : orders) {
    if (o < 0) throw std::invalid_argument("fd_derivative: negative order");
    total += o;
  }
  if (total > kMaxFDOrder)
    throw FDRefused("finite-difference order " + std::to_string(total) + " exceeds the limit " +
                    std::to_string(kMaxFDOrder));
  try {
    if (total == 0) {
      std::vector<FDResult> out;
      for (LD v : f(base)) out.push_back({static_cast<double>(v), 0.0});
      return out;
    }
    // tableau[l][k]: level l, k eliminations of the even error terms
    std::vector<std::vector<std::vector<LD>>> tab(levels);
    for (int l = 0; l < levels; ++l) {
      std::vector<LD> h(base.size());
      for (std::size_t v = 0; v < base.size(); ++v) h[v] = steps[v] / std::ldexp(1.0L, l);
      tab[l].push_back(one_level(f, base, orders, h));
      for (int k = 1; k <= l; ++k) {
        const LD r = std::ldexp(1.0L, 2 * k) - 1.0L;
        std::vector<LD> e(tab[l][k - 1].size());
        for (std::size_t c = 0; c < e.size(); ++c)
          e[c] = tab[l][k - 1][c] + (tab[l][k - 1][c] - tab[l - 1][k - 1][c]) / r;
        tab[l].push_back(std::move(e));
      }
    }
    const auto& best = tab[levels - 1][levels - 1];
    std::vector<FDResult> out(best.size());
    for (std::size_t c = 0; c < best.size(); ++c) {
      out[c].value = static_cast<double>(best[c]);
      out[c].error = levels > 1 ? static_cast<double>(std::fabs(best[c] - tab[levels - 1][levels - 2][c]))
                                : std::numeric_limits<double>::infinity();
    }
    return out;
  } catch (const MetricDomainError& e) {
    throw FDDomainError(std::string("finite-difference stencil left the domain: ") + e.what());
  }
}

FDResult fd_partial(const ScalarField& f, const Point& base, const MultiIndex& alpha, const MultiIndex& beta,
                    const FDConfig& cfg) {
  const int n = base.dim();
  if (alpha.dim() != n || beta.dim() != n) throw std::invalid_argument("fd_partial: multi-index dimension");
  const std::vector<LD> b = concat(widen(base.x), widen(base.y));
  std::vector<int> orders;
  for (int i = 0; i < n; ++i) orders.push_back(alpha[i]);
  for (int i = 0; i < n; ++i) orders.push_back(beta[i]);
  const std::vector<LD> steps = scaled_steps(b, cfg.h0, 0, 1.0);
  const VectorFunction g = [&](const std::vector<LD>& v) {
    return std::vector<LD>{f(std::vector<double>(v.begin(), v.begin() + n), std::vector<double>(v.begin() + n, v.end()))};
  };
  return fd_derivative(g, b, orders, steps, cfg.levels).front();
}

// -- tensors -------------------------------------------------------------------

std::string to_string(OracleTensor t) {
  switch (t) {
    case OracleTensor::g: return "g";
    case OracleTensor::C: return "C";
    case OracleTensor::G: return "G";
    case OracleTensor::N: return "N";
    case OracleTensor::B: return "B";
    case OracleTensor::E: return "E";
    case OracleTensor::H: return "H";
    case OracleTensor::D: return "D";
    case OracleTensor::R: return "R";
    case OracleTensor::L: return "L";
    case OracleTensor::Wtilde: return "Wtilde";
  }
  return "?";
}

std::vector<OracleTensor> all_oracle_tensors() {
  return {OracleTensor::g, OracleTensor::C, OracleTensor::G, OracleTensor::N, OracleTensor::B, OracleTensor::E,
          OracleTensor::H, OracleTensor::D, OracleTensor::R, OracleTensor::L, OracleTensor::Wtilde};
}

std::optional<OracleTensor> parse_oracle_tensor(const std::string& s) {
  for (OracleTensor t : all_oracle_tensors())
    if (to_string(t) == s) return t;
  if (s == "W" || s == "wtilde") return OracleTensor::Wtilde;
  return std::nullopt;
}

double oracle_gate(OracleTensor t) {
  switch (t) {
    case OracleTensor::g:
    case OracleTensor::C:
    case OracleTensor::G: return 1e-8;
    case OracleTensor::N:
    case OracleTensor::B:
    case OracleTensor::E: return 1e-6;
    case OracleTensor::D:
    case OracleTensor::R: return 1e-5;
    case OracleTensor::H:
    case OracleTensor::L:
    case OracleTensor::Wtilde: return 1e-3;
  }
  return 0.0;
}

FDOracle::FDOracle(const MetricDef& def, const Point& p, OracleConfig cfg)
    : def_(def), p_(p), cfg_(cfg), n_(p.dim()) {
  if (static_cast<int>(p.y.size()) != n_ || n_ != def.dim) throw std::invalid_argument("FDOracle: point dimension");
  // Fixed at the base point: steps that vary with the stencil point would
  // make the inner truncation error non-smooth.
  inner_steps_ = scaled_steps(concat(widen(p.x), widen(p.y)), cfg_.inner.h0, static_cast<std::size_t>(n_), cfg_.x_scale);
}

TensorValue FDOracle::make(std::vector<Variance> var, int degree) const {
  TensorValue t;
  t.dim = n_;
  t.variance = std::move(var);
  t.y_degree = degree;
  t.point = std::make_shared<const Point>(p_);
  t.comps.assign(tensor_size(n_, t.rank()), 0.0);
  return t;
}

std::vector<long double> FDOracle::spray_at(const std::vector<LD>& x, const std::vector<LD>& y) const {
  const int n = n_;
  const std::vector<LD> b = concat(x, y);
  const std::vector<LD>& steps = inner_steps_;
  const VectorFunction f = [&](const std::vector<LD>& v) {
    return std::vector<LD>{
        def_.f2_plain(std::vector<LD>(v.begin(), v.begin() + n), std::vector<LD>(v.begin() + n, v.end()))};
  };
  auto d = [&](int a, int c) {
    std::vector<int> o(2 * n, 0);
    if (a >= 0) ++o[a];
    if (c >= 0) ++o[c];
    return static_cast<LD>(fd_derivative(f, b, o, steps, cfg_.inner.levels).front().value);
  };
  // g_il G'^i = y^k d2F2/dx^k dy^l - dF2/dx^l, G = G'/4
  std::vector<std::vector<LD>> a(n, std::vector<LD>(n + 1, 0.0L));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a[i][j] = a[j][i] = 0.5L * d(n + i, n + j);
  for (int l = 0; l < n; ++l) {
    LD w = -d(l, -1);
    for (int k = 0; k < n; ++k) w += y[k] * d(k, n + l);
    a[l][n] = w;
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    if (a[c][c] == 0.0L) throw NotPositiveDefinite(c, 0.0);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const LD q = a[r][c] / a[c][c];
      for (int j = c; j <= n; ++j) a[r][j] -= q * a[c][j];
    }
  }
  std::vector<LD> G(n);
  for (int i = 0; i < n; ++i) G[i] = 0.25L * a[i][n] / a[i][i];
  return G;
}

const std::vector<double>& FDOracle::f2_partial_y(const std::vector<int>& beta) {
  auto it = f2_cache_.find(beta);
  if (it != f2_cache_.end()) return it->second;
  const std::vector<LD> x = widen(p_.x), y0 = widen(p_.y);
  const VectorFunction f = [&](const std::vector<LD>& y) { return std::vector<LD>{def_.f2_plain(x, y)}; };
  const FDResult r = fd_derivative(f, y0, beta, scaled_steps(y0, cfg_.inner.h0, 0, 1.0), cfg_.inner.levels).front();
  error_ = std::max(error_, r.error / std::max(1.0, std::fabs(r.value)));
  return f2_cache_.emplace(beta, std::vector<double>{r.value}).first->second;
}

const std::vector<double>& FDOracle::g_deriv(int space, const std::vector<int>& orders) {
  const Key key{space, orders};
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const int n = n_;
  VectorFunction f;
  std::vector<LD> base;
  if (space == 0) {
    base = concat(widen(p_.x), widen(p_.y));
    f = [this, n](const std::vector<LD>& v) {
      return spray_at(std::vector<LD>(v.begin(), v.begin() + n), std::vector<LD>(v.begin() + n, v.end()));
    };
  } else {
    base = concat({0.0L}, widen(p_.y));
    f = [this, n](const std::vector<LD>& v) {
      std::vector<LD> x = widen(p_.x);
      for (int i = 0; i < n; ++i) x[i] += v[0] * p_.y[i];
      return spray_at(x, std::vector<LD>(v.begin() + 1, v.end()));
    };
  }
  const std::vector<LD> steps =
      scaled_steps(base, cfg_.outer.h0, static_cast<std::size_t>(space == 0 ? n : 1), cfg_.x_scale);
  std::vector<double> vals;
  for (const FDResult& r : fd_derivative(f, base, orders, steps, cfg_.outer.levels)) {
    vals.push_back(r.value);
    error_ = std::max(error_, r.error / std::max(1.0, std::fabs(r.value)));
  }
  return cache_.emplace(key, std::move(vals)).first->second;
}

std::vector<double> FDOracle::gy(std::initializer_list<int> ys) {
  std::vector<int> o(2 * n_, 0);
  for (int y : ys) ++o[n_ + y];
  return g_deriv(0, o);
}

std::vector<double> FDOracle::gxy(int xk, std::initializer_list<int> ys) {
  std::vector<int> o(2 * n_, 0);
  ++o[xk];
  for (int y : ys) ++o[n_ + y];
  return g_deriv(0, o);
}

std::vector<double> FDOracle::gty(std::initializer_list<int> ys) {
  std::vector<int> o(n_ + 1, 0);
  o[0] = 1;
  for (int y : ys) ++o[1 + y];
  return g_deriv(1, o);
}

TensorValue FDOracle::compute_g() {
  TensorValue g = make({V::down, V::down}, 0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      std::vector<int> b(n_, 0);
      ++b[i];
      ++b[j];
      g(i, j) = 0.5 * f2_partial_y(b).front();
    }
  return g;
}

TensorValue FDOracle::compute_R() {
  const int n = n_;
  const TensorValue G = tensor(OracleTensor::G);
  const TensorValue N = tensor(OracleTensor::N);
  TensorValue R = make({V::up, V::down}, 2);
  for (int k = 0; k < n; ++k) {
    const std::vector<double> dxk = gxy(k, {});
    const std::vector<double> dty = gty({k});
    for (int i = 0; i < n; ++i) {
      double s = 2.0 * dxk[i] - dty[i];
      for (int j = 0; j < n; ++j) s += 2.0 * G(j) * gy({j, k})[i] - N(i, j) * N(j, k);
      R(i, k) = s;
    }
  }
  return R;
}

// dR[l][i*n+k] = dR^i_k / dy^l
std::vector<std::vector<double>> FDOracle::dR() {
  const int n = n_;
  const TensorValue G = tensor(OracleTensor::G);
  const TensorValue N = tensor(OracleTensor::N);
  std::vector<std::vector<double>> out(n, std::vector<double>(n * n, 0.0));
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) {
      const std::vector<double> a = gxy(k, {l});
      const std::vector<double> b = gxy(l, {k});
      const std::vector<double> c = gty({k, l});
      for (int i = 0; i < n; ++i) {
        double s = 2.0 * a[i] - b[i] - c[i];
        for (int j = 0; j < n; ++j) {
          s += 2.0 * N(j, l) * gy({j, k})[i] + 2.0 * G(j) * gy({j, k, l})[i];
          s -= gy({j, l})[i] * N(j, k) + N(i, j) * gy({k, l})[j];
        }
        out[l][i * n + k] = s;
      }
    }
  return out;
}

TensorValue FDOracle::tensor(OracleTensor t) {
  auto it = tensors_.find(t);
  if (it != tensors_.end()) return it->second;
  const int n = n_;
  TensorValue out;
  switch (t) {
    case OracleTensor::g: out = compute_g(); break;
    case OracleTensor::C: {
      out = make({V::down, V::down, V::down}, -1);
      for_each_index(n, 3, [&](const Index& x) {
        std::vector<int> b(n, 0);
        ++b[x[0]];
        ++b[x[1]];
        ++b[x[2]];
        out[x] = 0.25 * f2_partial_y(b).front();
      });
      break;
    }
    case OracleTensor::G: {
      out = make({V::up}, 2);
      out.comps = g_deriv(0, std::vector<int>(2 * n, 0));
      break;
    }
    case OracleTensor::N: {
      out = make({V::up, V::down}, 1);
      for (int j = 0; j < n; ++j) {
        const std::vector<double> d = gy({j});
        for (int i = 0; i < n; ++i) out(i, j) = d[i];
      }
      break;
    }
    case OracleTensor::B: {
      out = make({V::down, V::up, V::down, V::down}, -1);
      for_each_index(n, 4, [&](const Index& x) { out[x] = gy({x[0], x[2], x[3]})[x[1]]; });
      break;
    }
    case OracleTensor::E: {
      out = make({V::down, V::down}, -1);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += gy({j, k, m})[m];
          out(j, k) = 0.5 * s;
        }
      break;
    }
    case OracleTensor::D: {
      const TensorValue B = tensor(OracleTensor::B);
      const TensorValue E = tensor(OracleTensor::E);
      out = make({V::down, V::up, V::down, V::down}, -1);
      const double c = 1.0 / (n + 1);
      for_each_index(n, 4, [&](const Index& x) {
        const int j = x[0], i = x[1], k = x[2], l = x[3];
        double Sjkl = 0.0;
        for (int m = 0; m < n; ++m) Sjkl += gy({m, j, k, l})[m];
        double s = Sjkl * p_.y[i];
        if (i == l) s += 2.0 * E(j, k);
        if (i == k) s += 2.0 * E(j, l);
        if (i == j) s += 2.0 * E(k, l);
        out[x] = B[x] - c * s;
      });
      break;
    }
    case OracleTensor::H: {
      const TensorValue G = tensor(OracleTensor::G);
      const TensorValue N = tensor(OracleTensor::N);
      const TensorValue E = tensor(OracleTensor::E);
      out = make({V::down, V::down}, 0);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) {
            s += 0.5 * gty({j, k, m})[m];
            double dE = 0.0;
            for (int i = 0; i < n; ++i) dE += gy({m, j, k, i})[i];
            s -= G(m) * dE;  // 2 G^m dE_jk/dy^m
            s -= E(m, k) * N(m, j) + E(j, m) * N(m, k);
          }
          out(j, k) = s;
        }
      break;
    }
    case OracleTensor::R: out = compute_R(); break;
    case OracleTensor::L: {
      const TensorValue g = tensor(OracleTensor::g);
      const TensorValue B = tensor(OracleTensor::B);
      out = make({V::down, V::down, V::down}, 0);
      std::vector<double> yl(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) yl[i] += g(i, j) * p_.y[j];
      for_each_index(n, 3, [&](const Index& x) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += yl[i] * B(x[0], i, x[1], x[2]);
        out[x] = -0.5 * s;
      });
      break;
    }
    case OracleTensor::Wtilde: {
      // Homogeneity reduces Kt_0k and Kt_00 to first y-derivatives of R^i_k.
      const TensorValue R = tensor(OracleTensor::R);
      const auto d = dR();
      double rho = 0.0;
      for (int m = 0; m < n; ++m) rho += R(m, m);
      std::vector<double> K0(n);
      for (int k = 0; k < n; ++k) {
        double drho = 0.0, div = 0.0;
        for (int m = 0; m < n; ++m) {
          drho += d[k][m * n + m];
          div += d[m][m * n + k];
        }
        K0[k] = ((n + 2) * drho - (n - 1) * div) / 3.0;
      }
      const double K00 = (n + 1) * rho;
      const double c = 1.0 / (1.0 - static_cast<double>(n) * n);
      out = make({V::up, V::down}, 2);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out(i, k) = R(i, k) - c * (p_.y[i] * K0[k] - (i == k ? K00 : 0.0));
      break;
    }
  }
  return tensors_.emplace(t, std::move(out)).first->second;
}

namespace {

TensorValue engine_tensor(Geometry& geo, OracleTensor t) {
  switch (t) {
    case OracleTensor::g: return values(geo.metric().g);
    case OracleTensor::C: return values(geo.C());
    case OracleTensor::G: return values(geo.spray().G);
    case OracleTensor::N: return values(geo.spray().N);
    case OracleTensor::B: return values(geo.spray().B);
    case OracleTensor::E: return values(geo.E());
    case OracleTensor::H: return values(geo.H());
    case OracleTensor::D: return values(geo.D());
    case OracleTensor::R: return values(geo.R());
    case OracleTensor::L: return values(geo.L());
    case OracleTensor::Wtilde: return values(geo.Wtilde());
  }
  throw std::invalid_argument("unknown tensor");
}

}  // namespace

FDTensorCheck fd_tensor_check(const MetricDef& def, OracleTensor t, const SamplePlan& samples,
                              const OracleConfig& cfg) {
  FDTensorCheck out;
  out.tensor = to_string(t);
  out.gate = oracle_gate(t);
  for (std::size_t s = 0; s < samples.points.size(); ++s) {
    const Point& p = samples.points[s];
    Geometry geo(def, p);
    const TensorValue ref = engine_tensor(geo, t);
    FDOracle oracle(def, p, cfg);
    const TensorValue fd = oracle.tensor(t);
    const double dev = max_abs_diff(fd, ref) / std::max(1.0, max_abs(ref));
    out.per_sample.push_back(dev);
    if (s == 0 || !(dev <= out.max_rel_deviation)) {
      out.max_rel_deviation = dev;
      out.worst_sample = s;
    }
    out.max_error_estimate = std::max(out.max_error_estimate, oracle.error_estimate());
  }
  out.passed = !samples.points.empty() && out.max_rel_deviation < out.gate && std::isfinite(out.max_rel_deviation);
  return out;
}

}  // namespace finsler
