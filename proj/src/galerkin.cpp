#include "galerkin.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace slipstokes {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

// ---------------------------------------------------------------------------
// Convection tensor

QuadratureSpec galerkin_quadrature(const EigenBasis& b) {
  const int K = b.cutoffs.kappa, n = b.cutoffs.n;
  if (b.domain.kind == DomainKind::Channel) return {3 * K + 2, 3 * K + 2, 16 + 8 * n + 4 * K};
  return {24 + 6 * n, 3 * K + 8, 3 * K + 8};
}

bool selection_allowed(const EigenBasis& b, int k, int i, int j) {
  if (b.domain.kind != DomainKind::Channel) return true;
  const auto &mk = b.modes[k], &mi = b.modes[i], &mj = b.modes[j];
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1})
      if (mk.m1 == s1 * mi.m1 + s2 * mj.m1 && mk.m2 == s1 * mi.m2 + s2 * mj.m2) return true;
  return false;
}

double ConvectionTensor::get(int k, int i, int j) const {
  auto lo = entries.begin() + row_start[k], hi = entries.begin() + row_start[k + 1];
  auto it = std::lower_bound(lo, hi, std::make_pair(i, j), [](const TensorEntry& e, const std::pair<int, int>& p) {
    return std::make_pair(e.i, e.j) < p;
  });
  return it != hi && it->i == i && it->j == j ? it->v : 0.0;
}

ConvectionTensor assemble_convection_tensor(const EigenBasis& b) {
  return assemble_convection_tensor(b, galerkin_quadrature(b));
}

ConvectionTensor assemble_convection_tensor(const EigenBasis& b, const QuadratureSpec& q) {
  const int N = b.size();
  auto nodes = volume_grid(b.domain, q);
  const int nv = static_cast<int>(nodes.size());
  // A(3n + c, k) = w_n a_k^c(x_n); G[k](3n + c, d) = d_d a_k^c(x_n)
  Eigen::MatrixXd A(3 * nv, N), U(3 * nv, N);
  std::vector<Eigen::MatrixXd> grad(N, Eigen::MatrixXd(3 * nv, 3));
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int n = 0; n < nv; ++n) {
        VecJet<1> a;
        eval_mode<1>(b.domain, b.modes[k], nodes[n].x, a);
        for (int c = 0; c < 3; ++c) {
          U(3 * n + c, k) = a[c].value();
          A(3 * n + c, k) = nodes[n].w * a[c].value();
          for (int d = 0; d < 3; ++d) grad[k](3 * n + c, d) = a[c].c[1 + d];
        }
      }
  });
  // dense[k][i][j]
  std::vector<double> dense(static_cast<size_t>(N) * N * N, 0.0);
  auto at = [&](int k, int i, int j) -> double& { return dense[(static_cast<size_t>(k) * N + i) * N + j]; };
  parallel_for(N, [&](int lo, int hi) {
    Eigen::MatrixXd V(3 * nv, N);
    for (int i = lo; i < hi; ++i) {
      for (int j = 0; j < N; ++j)
        for (int n = 0; n < nv; ++n)
          for (int c = 0; c < 3; ++c) {
            double s = 0;
            for (int d = 0; d < 3; ++d) s += U(3 * n + d, i) * grad[j](3 * n + c, d);
            V(3 * n + c, j) = s;
          }
      Eigen::MatrixXd blk = A.transpose() * V;  // (k, j)
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) at(k, i, j) = blk(k, j);
    }
  });
  ConvectionTensor T;
  T.n = N;
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        double v = at(k, i, j);
        if (!selection_allowed(b, k, i, j)) v = 0;
        T.scale = std::max(T.scale, std::abs(v));
        T.skew_defect = std::max(T.skew_defect, std::abs(v + (selection_allowed(b, j, i, k) ? at(j, i, k) : 0.0)));
      }
  if (!(T.skew_defect <= 1e-8))
    throw NumericError("convection tensor skew-symmetry defect " + std::to_string(T.skew_defect) +
                       " exceeds 1e-8 (quadrature under-resolved)");
  // Project onto the exact antisymmetric structure in (k, j).
  const double drop = 1e-14 * std::max(1.0, T.scale);
  T.row_start.assign(N + 1, 0);
  for (int k = 0; k < N; ++k) {
    T.row_start[k] = static_cast<int>(T.entries.size());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        if (!selection_allowed(b, k, i, j)) continue;
        double v = 0.5 * (at(k, i, j) - at(j, i, k));
        if (std::abs(v) > drop) T.entries.push_back({k, i, j, v});
      }
  }
  T.row_start[N] = static_cast<int>(T.entries.size());
  return T;
}

void galerkin_rhs(const std::vector<double>& c, const ConvectionTensor& B, const std::vector<double>& lambda,
                  double mu, std::vector<double>& out) {
  const int N = B.n;
  if (static_cast<int>(c.size()) != N || static_cast<int>(lambda.size()) != N)
    throw ConfigError("coefficient vector does not match the tensor");
  out.assign(N, 0.0);
  for (int k = 0; k < N; ++k) {
    double s = 0;
    for (int e = B.row_start[k]; e < B.row_start[k + 1]; ++e) {
      const auto& t = B.entries[e];
      s += c[t.i] * c[t.j] * t.v;
    }
    out[k] = mu * lambda[k] * c[k] - s;
  }
}

double nonlinear_contraction(const std::vector<double>& c, const ConvectionTensor& B) {
  double s = 0;
  for (const auto& t : B.entries) s += c[t.k] * c[t.i] * c[t.j] * t.v;
  return s;
}

std::vector<double> eigenvalues(const EigenBasis& b) {
  std::vector<double> l(b.size());
  for (int k = 0; k < b.size(); ++k) l[k] = b.modes[k].lambda;
  return l;
}

QuadraticForms assemble_quadratic_forms(const EigenBasis& b, const QuadratureSpec& q) {
  const int N = b.size();
  const Domain& d = b.domain;
  auto nodes = volume_grid(d, q);
  const int nv = static_cast<int>(nodes.size());
  Eigen::MatrixXd Gm(9 * nv, N), Cm(3 * nv, N), Lm(3 * nv, N);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int n = 0; n < nv; ++n) {
        VecJet<2> a;
        eval_mode<2>(d, b.modes[k], nodes[n].x, a);
        double sw = std::sqrt(nodes[n].w);
        for (int c = 0; c < 3; ++c) {
          for (int e = 0; e < 3; ++e) {
            int ex[3] = {0, 0, 0};
            ex[e] = 1;
            Gm(9 * n + 3 * c + e, k) = sw * a[c].d(ex[0], ex[1], ex[2]);
          }
          Lm(3 * n + c, k) = sw * (a[c].d(2, 0, 0) + a[c].d(0, 2, 0) + a[c].d(0, 0, 2));
        }
        Cm(3 * n + 0, k) = sw * (a[2].d(0, 1, 0) - a[1].d(0, 0, 1));
        Cm(3 * n + 1, k) = sw * (a[0].d(0, 0, 1) - a[2].d(1, 0, 0));
        Cm(3 * n + 2, k) = sw * (a[1].d(1, 0, 0) - a[0].d(0, 1, 0));
      }
  });
  QuadraticForms Q;
  Q.grad = Gm.transpose() * Gm;
  Q.curl = Cm.transpose() * Cm;
  Q.lap = Lm.transpose() * Lm;

  SurfaceGrid sg(d, d.kind == DomainKind::Channel ? q.n1 : q.n2, d.kind == DomainKind::Channel ? q.n2 : q.n3);
  const int ns = sg.size();
  Eigen::MatrixXd Bm(3 * ns, N), Pm(3 * ns, N);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int n = 0; n < ns; ++n) {
        const Frame& f = sg.node(n).frame;
        VecJet<0> a;
        eval_mode<0>(d, b.modes[k], f.x, a);
        Vec3 u{a[0].value(), a[1].value(), a[2].value()};
        Vec3 pu = f.to_ambient(sg.sff().apply(f.tangent(u)));
        double sw = std::sqrt(sg.node(n).w);
        for (int c = 0; c < 3; ++c) {
          Bm(3 * n + c, k) = sw * u[c];
          Pm(3 * n + c, k) = sw * pu[c];
        }
      }
  });
  Q.boundary = Bm.transpose() * Bm;
  // pi is symmetric; symmetrize the rounding.
  Eigen::MatrixXd P = Bm.transpose() * Pm;
  Q.boundary_pi = 0.5 * (P + P.transpose());
  return Q;
}

// ---------------------------------------------------------------------------
// Integration

Integrator integrator_from_name(const std::string& s) {
  if (s == "rk4") return Integrator::RK4;
  if (s == "exp" || s == "exponential") return Integrator::Exponential;
  if (s == "adaptive") return Integrator::Adaptive;
  throw ConfigError("unknown integrator '" + s + "' (rk4, exp, adaptive)");
}

const char* integrator_name(Integrator i) {
  switch (i) {
    case Integrator::RK4: return "rk4";
    case Integrator::Exponential: return "exp";
    default: return "adaptive";
  }
}

void SimConfig::validate(int n) const {
  if (!(T > 0)) throw ConfigError("T must be positive");
  if (!(mu >= 0)) throw ConfigError("mu must be nonnegative");
  if (integrator == Integrator::Adaptive) {
    if (!(rtol > 0) || !(atol > 0)) throw ConfigError("tolerances must be positive");
  } else if (!(dt > 0)) {
    throw ConfigError("dt must be positive");
  }
  if (output_every < 1) throw ConfigError("output cadence must be positive");
  if (static_cast<int>(c0.size()) != n) throw ConfigError("initial coefficients do not match the basis");
  for (double v : c0)
    if (!std::isfinite(v)) throw ConfigError("initial coefficients must be finite");
}

double stable_dt(const EigenBasis& b, double mu, double dt, double T) {
  double lmax = 0;
  for (const auto& m : b.modes) lmax = std::max(lmax, std::abs(m.lambda));
  double h = dt;
  if (mu * lmax * h > 0.5) h = 0.5 / (mu * lmax);
  long steps = std::max(1L, static_cast<long>(std::ceil(T / h - 1e-9)));
  return T / steps;
}

namespace {

double norm2(const State& c) {
  double s = 0;
  for (double v : c) s += v * v;
  return s;
}

struct GuardTrip {};

}  // namespace

Trajectory integrate(const EigenBasis& b, const ConvectionTensor& B, const SimConfig& cfg) {
  cfg.validate(b.size());
  if (B.n != b.size()) throw ConfigError("tensor does not match the basis");
  const auto lambda = eigenvalues(b);
  const double mu = cfg.mu;
  const double limit = cfg.guard * std::max(norm2(cfg.c0), std::numeric_limits<double>::min());
  Trajectory tr;
  tr.t.push_back(0);
  tr.c.push_back(cfg.c0);
  auto full = [&](const State& c, State& dc, double) { galerkin_rhs(c, B, lambda, mu, dc); };
  auto record = [&](const State& c, double t) {
    tr.t.push_back(t);
    tr.c.push_back(c);
    if (!std::isfinite(norm2(c)) || norm2(c) > limit) {
      tr.status = RunStatus::Blowup;
      return false;
    }
    return true;
  };
  State c = cfg.c0;

  if (cfg.integrator == Integrator::Adaptive) {
    auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, odeint::runge_kutta_dopri5<State>());
    double h0 = std::min(cfg.T, cfg.dt > 0 ? cfg.dt : cfg.T / 100);
    try {
      odeint::integrate_adaptive(stepper, full, c, 0.0, cfg.T, h0, [&](const State& x, double t) {
        if (t == 0) return;
        if (!record(x, t)) throw GuardTrip{};
      });
    } catch (const GuardTrip&) {
    }
    return tr;
  }

  const double h = stable_dt(b, mu, cfg.dt, cfg.T);
  const long steps = std::lround(cfg.T / h);
  tr.dt = h;
  if (cfg.integrator == Integrator::RK4) {
    odeint::runge_kutta4<State> rk;
    for (long s = 1; s <= steps; ++s) {
      rk.do_step(full, c, (s - 1) * h, h);
      if (!record(c, s == steps ? cfg.T : s * h)) break;
    }
    return tr;
  }

  // Lawson (integrating-factor) RK4: the diagonal linear part is exact.
  const int N = b.size();
  State e1(N), e2(N), k1, k2, k3, k4, tmp(N);
  for (int k = 0; k < N; ++k) {
    e1[k] = std::exp(mu * lambda[k] * h);
    e2[k] = std::exp(mu * lambda[k] * h / 2);
  }
  auto nonlinear = [&](const State& x, State& out) {
    galerkin_rhs(x, B, lambda, 0.0, out);
  };
  for (long s = 1; s <= steps; ++s) {
    nonlinear(c, k1);
    for (int k = 0; k < N; ++k) tmp[k] = e2[k] * (c[k] + 0.5 * h * k1[k]);
    nonlinear(tmp, k2);
    for (int k = 0; k < N; ++k) tmp[k] = e2[k] * c[k] + 0.5 * h * k2[k];
    nonlinear(tmp, k3);
    for (int k = 0; k < N; ++k) tmp[k] = e1[k] * c[k] + e2[k] * h * k3[k];
    nonlinear(tmp, k4);
    for (int k = 0; k < N; ++k)
      c[k] = e1[k] * c[k] + h / 6 * (e1[k] * k1[k] + 2 * e2[k] * (k2[k] + k3[k]) + k4[k]);
    if (!record(c, s == steps ? cfg.T : s * h)) break;
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Time stencils

std::vector<double> derivative_weights(const std::vector<double>& x, double at) {
  const int n = static_cast<int>(x.size());
  std::vector<double> w(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // L_i'(at) = sum_{m != i} 1/(x_i - x_m) prod_{l != i, m} (at - x_l)/(x_i - x_l)
    double s = 0;
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      double p = 1 / (x[i] - x[m]);
      for (int l = 0; l < n; ++l)
        if (l != i && l != m) p *= (at - x[l]) / (x[i] - x[l]);
      s += p;
    }
    w[i] = s;
  }
  return w;
}

std::vector<double> interval_weights(const std::vector<double>& x, double a, double b) {
  // Gauss-Legendre with enough points to integrate the interpolant exactly.
  const int n = static_cast<int>(x.size());
  auto g = gauss_legendre((n + 1) / 2 + 1, a, b);
  std::vector<double> w(n, 0.0);
  for (size_t q = 0; q < g.x.size(); ++q)
    for (int i = 0; i < n; ++i) {
      double L = 1;
      for (int l = 0; l < n; ++l)
        if (l != i) L *= (g.x[q] - x[l]) / (x[i] - x[l]);
      w[i] += g.w[q] * L;
    }
  return w;
}

std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& f) {
  const int n = static_cast<int>(t.size());
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  const int width = std::min(n, 5);
  for (int i = 0; i < n; ++i) {
    int lo = std::clamp(i - width / 2, 0, n - width);
    std::vector<double> x(t.begin() + lo, t.begin() + lo + width);
    auto w = derivative_weights(x, t[i]);
    double s = 0;
    for (int m = 0; m < width; ++m) s += w[m] * f[lo + m];
    d[i] = s;
  }
  return d;
}

std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f) {
  const int n = static_cast<int>(t.size());
  std::vector<double> I(n, 0.0);
  const int width = std::min(n, 4);
  for (int i = 0; i + 1 < n; ++i) {
    int lo = std::clamp(i - 1, 0, n - width);
    std::vector<double> x(t.begin() + lo, t.begin() + lo + width);
    auto w = interval_weights(x, t[i], t[i + 1]);
    double s = 0;
    for (int m = 0; m < width; ++m) s += w[m] * f[lo + m];
    I[i + 1] = I[i] + s;
  }
  return I;
}

// ---------------------------------------------------------------------------
// Ledger, weak form, strong monitor

namespace {

double quad_form(const Eigen::MatrixXd& G, const std::vector<double>& c) {
  Eigen::Map<const Eigen::VectorXd> v(c.data(), static_cast<Eigen::Index>(c.size()));
  return v.dot(G * v);
}
double bilinear(const Eigen::MatrixXd& G, const std::vector<double>& a, const std::vector<double>& b) {
  Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Eigen::Index>(a.size())),
      y(b.data(), static_cast<Eigen::Index>(b.size()));
  return x.dot(G * y);
}

}  // namespace

EnergyLedger energy_ledger(const EigenBasis& b, const QuadraticForms& Q, const Trajectory& tr, double mu) {
  const double th = b.zeta.inverse();
  const int n = static_cast<int>(tr.t.size());
  EnergyLedger L;
  L.rows.resize(n);
  std::vector<double> K(n), D(n), bl2(n);
  for (int s = 0; s < n; ++s) {
    auto& r = L.rows[s];
    const auto& c = tr.c[s];
    r.t = tr.t[s];
    r.kinetic = norm2(c);
    r.grad_norm = quad_form(Q.grad, c);
    r.boundary_l2 = quad_form(Q.boundary, c);
    r.boundary_pi = quad_form(Q.boundary_pi, c);
    r.F = r.rho = std::numeric_limits<double>::quiet_NaN();
    K[s] = r.kinetic;
    // Dissipation: 2 mu (||grad u||^2 + (1/zeta) int_G |u|^2 - int_G pi(u, u)).
    D[s] = 2 * mu * (r.grad_norm + th * r.boundary_l2 - r.boundary_pi);
    bl2[s] = r.boundary_l2;
  }
  auto dK = time_derivative(tr.t, K);
  auto ID = cumulative_integral(tr.t, D);
  auto IB = cumulative_integral(tr.t, bl2);
  for (int s = 0; s < n; ++s) {
    L.rows[s].identity_residual = rel_residual(dK[s], -D[s]);
    L.max_identity_residual = std::max(L.max_identity_residual, L.rows[s].identity_residual);
    L.integrated_gap = std::max(L.integrated_gap, std::abs(K[s] + ID[s] - K[0]));
  }
  L.boundary_time_integral = n ? IB.back() : 0.0;
  return L;
}

double weak_form_residual(const EigenBasis& b, const QuadraticForms& Q, const Trajectory& tr, double mu,
                          const std::vector<std::vector<double>>& d, const QuadratureSpec& q) {
  const int n = static_cast<int>(tr.t.size()), N = b.size();
  if (d.empty()) return 0.0;
  if (static_cast<int>(d.size()) != n) throw ConfigError("test field must be sampled at the trajectory times");
  for (const auto& v : d)
    if (static_cast<int>(v.size()) != N) throw ConfigError("test field does not match the basis");
  const double th = b.zeta.inverse();
  // Mode values and curls at the volume nodes, weights folded in by sqrt.
  auto nodes = volume_grid(b.domain, q);
  const int nv = static_cast<int>(nodes.size());
  Eigen::MatrixXd U(3 * nv, N), W(3 * nv, N);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int m = 0; m < nv; ++m) {
        VecJet<1> a;
        eval_mode<1>(b.domain, b.modes[k], nodes[m].x, a);
        for (int c = 0; c < 3; ++c) U(3 * m + c, k) = a[c].value();
        W(3 * m + 0, k) = a[2].d(0, 1, 0) - a[1].d(0, 0, 1);
        W(3 * m + 1, k) = a[0].d(0, 0, 1) - a[2].d(1, 0, 0);
        W(3 * m + 2, k) = a[1].d(1, 0, 0) - a[0].d(0, 1, 0);
      }
  });
  // Time derivative of the test coefficients.
  std::vector<std::vector<double>> dd(n, std::vector<double>(N));
  for (int k = 0; k < N; ++k) {
    std::vector<double> col(n);
    for (int s = 0; s < n; ++s) col[s] = d[s][k];
    auto dc = time_derivative(tr.t, col);
    for (int s = 0; s < n; ++s) dd[s][k] = dc[s];
  }
  std::vector<double> integrand(n);
  double scale = 0;
  for (int s = 0; s < n; ++s) {
    Eigen::Map<const Eigen::VectorXd> c(tr.c[s].data(), N), p(d[s].data(), N);
    Eigen::VectorXd u = U * c, w = W * c, ph = U * p;
    double conv = 0;  // int curl u . (u x phi)
    for (int m = 0; m < nv; ++m) {
      Vec3 uu{u(3 * m), u(3 * m + 1), u(3 * m + 2)}, ww{w(3 * m), w(3 * m + 1), w(3 * m + 2)},
          pp{ph(3 * m), ph(3 * m + 1), ph(3 * m + 2)};
      conv += nodes[m].w * dot(ww, cross(uu, pp));
    }
    double ut = 0;
    for (int k = 0; k < N; ++k) ut += tr.c[s][k] * dd[s][k];
    double visc = mu * bilinear(Q.curl, tr.c[s], d[s]);
    double bnd = mu * th * bilinear(Q.boundary, tr.c[s], d[s]), bpi = 2 * mu * bilinear(Q.boundary_pi, tr.c[s], d[s]);
    integrand[s] = ut - conv - visc - bnd + bpi;
    scale = std::max({scale, std::abs(ut), std::abs(conv), std::abs(visc), std::abs(bnd), std::abs(bpi)});
  }
  auto I = cumulative_integral(tr.t, integrand);
  double lhs = 0, rhs0 = 0;
  for (int k = 0; k < N; ++k) {
    lhs += tr.c.back()[k] * d.back()[k];
    rhs0 += tr.c.front()[k] * d.front()[k];
  }
  double rhs = rhs0 + I.back();
  return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs), scale * tr.t.back()});
}

double riccati_solution(double M1, double M2, double rho0, double t) {
  if (M2 == 0 || rho0 == 0) return rho0 * std::exp(M1 * t);
  if (M1 == 0) {
    double den = 1 - M2 * rho0 * t;
    return den > 0 ? rho0 / den : std::numeric_limits<double>::infinity();
  }
  double e = std::exp(M1 * t);
  double den = M1 + M2 * rho0 * (1 - e);
  return den > 0 ? M1 * rho0 * e / den : std::numeric_limits<double>::infinity();
}

double riccati_blowup_time(double M1, double M2, double rho0) {
  if (M2 <= 0 || rho0 <= 0) return std::numeric_limits<double>::infinity();
  if (M1 == 0) return 1 / (M2 * rho0);
  return std::log1p(M1 / (M2 * rho0)) / M1;
}

StrongMonitor strong_monitor(const EigenBasis& b, const ConvectionTensor& B, const QuadraticForms& Q,
                             const Trajectory& tr, double mu) {
  const auto lambda = eigenvalues(b);
  const int n = static_cast<int>(tr.t.size()), N = b.size();
  StrongMonitor M;
  M.F.resize(n);
  M.dF.resize(n);
  M.rho.resize(n);
  State r, Jr(N);
  for (int s = 0; s < n; ++s) {
    const auto& c = tr.c[s];
    galerkin_rhs(c, B, lambda, mu, r);
    // J r with J = d(rhs)/dc.
    for (int k = 0; k < N; ++k) {
      double acc = 0;
      for (int e = B.row_start[k]; e < B.row_start[k + 1]; ++e) {
        const auto& t = B.entries[e];
        acc += (r[t.i] * c[t.j] + c[t.i] * r[t.j]) * t.v;
      }
      Jr[k] = mu * lambda[k] * r[k] - acc;
    }
    double cr = 0, rr = 0, rJr = 0;
    for (int k = 0; k < N; ++k) {
      cr += c[k] * r[k];
      rr += r[k] * r[k];
      rJr += r[k] * Jr[k];
    }
    M.F[s] = quad_form(Q.lap, c) + norm2(c) + rr;
    M.dF[s] = 2 * bilinear(Q.lap, c, r) + 2 * cr + 2 * rJr;
    double denom = M.F[s] + M.F[s] * M.F[s];
    if (denom > 0) M.M = std::max(M.M, M.dF[s] / denom);
  }
  M.rho0 = n ? M.F[0] : 0.0;
  M.blowup_time = riccati_blowup_time(M.M, M.M, M.rho0);
  M.bounded = true;
  for (int s = 0; s < n; ++s) {
    M.rho[s] = riccati_solution(M.M, M.M, M.rho0, tr.t[s]);
    if (tr.t[s] < M.blowup_time && M.F[s] > M.rho[s] * (1 + 1e-9) + 1e-300) M.bounded = false;
  }
  return M;
}

void attach_monitor(EnergyLedger& led, const StrongMonitor& m) {
  for (size_t s = 0; s < led.rows.size() && s < m.F.size(); ++s) {
    led.rows[s].F = m.F[s];
    led.rows[s].rho = m.rho[s];
  }
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& tr, int every) {
  auto f = open_out(path);
  const int N = tr.c.empty() ? 0 : static_cast<int>(tr.c[0].size());
  f << "t";
  for (int k = 0; k < N; ++k) f << ",c_" << k;
  f << "\n";
  const int n = static_cast<int>(tr.t.size());
  for (int s = 0; s < n; ++s) {
    if (s % std::max(1, every) != 0 && s != n - 1) continue;
    f << num(tr.t[s]);
    for (double v : tr.c[s]) f << "," << num(v);
    f << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

void write_ledger_csv(const std::string& path, const EnergyLedger& led) {
  auto f = open_out(path);
  f << "t,kinetic,grad_norm,boundary_l2,boundary_pi,identity_residual,F,rho\n";
  for (const auto& r : led.rows)
    f << num(r.t) << "," << num(r.kinetic) << "," << num(r.grad_norm) << "," << num(r.boundary_l2) << ","
      << num(r.boundary_pi) << "," << num(r.identity_residual) << "," << num(r.F) << "," << num(r.rho) << "\n";
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace slipstokes
