#include "stokes_spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chebyshev.hpp"
#include "json.hpp"

namespace slipstokes {

namespace {

constexpr int kBasisFormatVersion = 1;

// Weights of the Robin condition written as a f' + b f = 0 with a + b = 1,
// so that complete slip (a = 1, b = 0) needs no special casing.
void robin_weights(const SlipLength& z, double* a, double* b) {
  if (z.is_infinite()) {
    *a = 1;
    *b = 0;
    return;
  }
  *a = z.value() / (1 + z.value());
  *b = 1 / (1 + z.value());
}

template <class F>
double bracket_root(F f, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0)) throw NumericError("root bracket has no sign change");
  boost::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (r.first + r.second);
}

// Scan (lo, ...) in steps h for sign changes of f, refining each.
template <class F>
std::vector<double> scan_roots(F f, double lo, double h, int count, double hmax) {
  std::vector<double> out;
  double x0 = lo, f0 = f(x0);
  while (static_cast<int>(out.size()) < count) {
    double x1 = x0 + h, f1 = f(x1);
    if (f1 == 0 || (f0 > 0) != (f1 > 0)) out.push_back(bracket_root(f, x0, x1));
    if (f1 == 0) {
      x1 += 1e-3 * h;
      f1 = f(x1);
    }
    x0 = x1;
    f0 = f1;
    if (x0 > hmax) throw NumericError("root scan did not find enough roots");
  }
  return out;
}

// g_n(s) = j_n(s) / s^n, with the power series near the origin.
double bessel_g(int n, double s) {
  if (s < 1.0) {
    double df = 1;
    for (int i = 1; i <= 2 * n + 1; i += 2) df *= i;
    double term = 1 / df, sum = term, x = -0.5 * s * s;
    for (int k = 1; k < 30; ++k) {
      term *= x / (k * (2.0 * n + 2 * k + 1));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::sph_bessel(static_cast<unsigned>(n), s) / std::pow(s, n);
}

// Vertical profile: sum of c * {cos, sin, cosh, sinh}(w s), s = z - 1/2.
struct Profile {
  enum Type { Cos, Sin, Cosh, Sinh };
  struct Term {
    double c;
    Type type;
    double w;
  };
  std::vector<Term> terms;

  double deriv(int j, double s) const {
    double v = 0;
    for (const auto& t : terms) {
      double wj = std::pow(t.w, j), x = t.w * s, b = 0;
      switch (t.type) {
        case Cos: {
          const double cyc[4] = {std::cos(x), -std::sin(x), -std::cos(x), std::sin(x)};
          b = cyc[j % 4];
          break;
        }
        case Sin: {
          const double cyc[4] = {std::sin(x), std::cos(x), -std::sin(x), -std::cos(x)};
          b = cyc[j % 4];
          break;
        }
        case Cosh: b = j % 2 ? std::sinh(x) : std::cosh(x); break;
        case Sinh: b = j % 2 ? std::cosh(x) : std::sinh(x); break;
      }
      v += t.c * wj * b;
    }
    return v;
  }
  Profile derivative() const {
    Profile p;
    for (const auto& t : terms) {
      switch (t.type) {
        case Cos: p.terms.push_back({-t.c * t.w, Sin, t.w}); break;
        case Sin: p.terms.push_back({t.c * t.w, Cos, t.w}); break;
        case Cosh: p.terms.push_back({t.c * t.w, Sinh, t.w}); break;
        case Sinh: p.terms.push_back({t.c * t.w, Cosh, t.w}); break;
      }
    }
    return p;
  }
  template <int P>
  Jet<P> jet(const Jet<P>& s) const {
    double d[P + 1];
    for (int j = 0; j <= P; ++j) d[j] = deriv(j, s.value());
    return compose(s, d);
  }
};

double kappa_x(const Domain& d, const EigenMode& m) { return 2 * M_PI * m.m1 / d.Lx; }
double kappa_y(const Domain& d, const EigenMode& m) { return 2 * M_PI * m.m2 / d.Ly; }

Profile shear_profile(const EigenMode& m) {
  Profile p;
  p.terms.push_back({1.0, m.parity ? Profile::Sin : Profile::Cos, m.k});
  return p;
}

// Poloidal w(s), scaled so the hyperbolic part stays O(1).
Profile poloidal_profile(double q, double kappa, int parity) {
  Profile p;
  if (parity == 0) {
    p.terms.push_back({1.0, Profile::Cos, q});
    p.terms.push_back({-std::cos(q / 2) / std::cosh(kappa / 2), Profile::Cosh, kappa});
  } else {
    p.terms.push_back({1.0, Profile::Sin, q});
    p.terms.push_back({-std::sin(q / 2) / std::sinh(kappa / 2), Profile::Sinh, kappa});
  }
  return p;
}

// Pressure profile (w''' + q^2 w') / kappa^2 of the poloidal mode.
Profile poloidal_pressure(double q, double kappa, int parity) {
  Profile p;
  double s = -(kappa * kappa + q * q) / kappa;
  if (parity == 0)
    p.terms.push_back({s * std::cos(q / 2) / std::cosh(kappa / 2), Profile::Sinh, kappa});
  else
    p.terms.push_back({s * std::sin(q / 2) / std::sinh(kappa / 2), Profile::Cosh, kappa});
  return p;
}

double profile_l2(const Profile& p, double wmax) {
  GaussRule g = gauss_legendre(48 + 4 * static_cast<int>(std::ceil(wmax)), -0.5, 0.5);
  double s = 0;
  for (size_t i = 0; i < g.x.size(); ++i) {
    double v = p.deriv(0, g.x[i]);
    s += g.w[i] * v * v;
  }
  return s;
}

// Coefficients b_j of r^(l-m) P_l^(m)(z/r) = sum_j b_j z^(l-m-2j) r^(2j).
std::vector<double> legendre_derivative_coeffs(int l, int m) {
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  auto binom = [&](int n, int k) { return fact(n) / (fact(k) * fact(n - k)); };
  std::vector<double> b;
  for (int j = 0; 2 * j <= l - m; ++j) {
    double c = std::ldexp(1.0, -l) * (j % 2 ? -1.0 : 1.0) * binom(l, j) * binom(2 * l - 2 * j, l);
    c *= fact(l - 2 * j) / fact(l - 2 * j - m);
    b.push_back(c);
  }
  return b;
}

double ylm_norm(int l, int m) {
  int am = std::abs(m);
  double n = std::sqrt((2 * l + 1) / (4 * M_PI) * std::tgamma(l - am + 1.0) / std::tgamma(l + am + 1.0));
  return am ? n * std::sqrt(2.0) : n;
}

template <int Q>
Jet<Q> ball_potential(const EigenMode& md, const Vec3& x) {
  Jet<Q> X = Jet<Q>::variable(0, x[0]), Y = Jet<Q>::variable(1, x[1]), Z = Jet<Q>::variable(2, x[2]);
  Jet<Q> rho = X * X + Y * Y + Z * Z;
  Jet<Q> G(1.0);
  if (md.k > 0) {
    double d[Q + 1], r0 = std::sqrt(rho.value()), f = 1;
    for (int j = 0; j <= Q; ++j) {
      d[j] = f * bessel_g(md.l + j, md.k * r0);
      f *= -0.5 * md.k * md.k;
    }
    G = compose(rho, d);
  }
  const int am = std::abs(md.m);
  Jet<Q> re(1.0), im(0.0);
  for (int i = 0; i < am; ++i) {
    Jet<Q> nr = re * X - im * Y;
    im = re * Y + im * X;
    re = nr;
  }
  auto b = legendre_derivative_coeffs(md.l, am);
  Jet<Q> pi;
  Jet<Q> rj(1.0);
  for (size_t j = 0; j < b.size(); ++j) {
    Jet<Q> t = rj;
    for (int e = 0; e < md.l - am - 2 * static_cast<int>(j); ++e) t = t * Z;
    pi.axpy(b[j], t);
    rj = rj * rho;
  }
  Jet<Q> S = (md.m >= 0 ? re : im) * pi;
  return (md.amp * ylm_norm(md.l, md.m)) * (G * S);
}

double ball_radial_l2(const EigenMode& md, double R) {
  GaussRule g = gauss_legendre(64, 0.0, R);
  double s = 0;
  for (size_t i = 0; i < g.x.size(); ++i) {
    double r = g.x[i];
    double f = md.k > 0 ? std::pow(r, md.l) * bessel_g(md.l, md.k * r) : r;
    s += g.w[i] * f * f * r * r;
  }
  return md.l * (md.l + 1) * s;
}

bool mode_less(const EigenMode& a, const EigenMode& b) {
  long long ka = std::llround(a.lambda * 1e9), kb = std::llround(b.lambda * 1e9);
  if (ka != kb) return ka > kb;
  auto key = [](const EigenMode& m) {
    return std::make_tuple(static_cast<int>(m.family), m.m1, m.m2, m.variant, m.parity, m.n, m.l, m.m);
  };
  return key(a) < key(b);
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::Shear: return "shear";
    case Family::Toroidal: return "toroidal";
    case Family::Poloidal: return "poloidal";
    case Family::BallToroidal: return "ball_toroidal";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  for (Family f : {Family::Shear, Family::Toroidal, Family::Poloidal, Family::BallToroidal})
    if (s == family_name(f)) return f;
  throw IoError("unknown mode family '" + s + "'");
}

std::vector<double> shear_mode_roots(const SlipLength& zeta, Parity parity, int count) {
  double a, b;
  robin_weights(zeta, &a, &b);
  std::vector<double> out;
  for (int j = 0; j < count; ++j) {
    if (parity == Parity::Even) {
      if (b == 0) {
        out.push_back(2 * j * M_PI);
        continue;
      }
      auto f = [&](double k) { return a * k * std::sin(k / 2) - b * std::cos(k / 2); };
      out.push_back(bracket_root(f, 2 * j * M_PI, (2 * j + 1) * M_PI));
    } else {
      if (b == 0) {
        out.push_back((2 * j + 1) * M_PI);
        continue;
      }
      auto f = [&](double k) { return a * k * std::cos(k / 2) + b * std::sin(k / 2); };
      out.push_back(bracket_root(f, (2 * j + 1) * M_PI, (2 * j + 2) * M_PI));
    }
  }
  return out;
}

double shear_root(const SlipLength& zeta, int n, Parity* parity) {
  Parity p = n % 2 ? Parity::Odd : Parity::Even;
  if (parity) *parity = p;
  return shear_mode_roots(zeta, p, n / 2 + 1).back();
}

double poloidal_dispersion(double q, double kappa, const SlipLength& zeta, Parity parity) {
  double a, b;
  robin_weights(zeta, &a, &b);
  double c = std::cos(q / 2), s = std::sin(q / 2), k2 = q * q + kappa * kappa;
  if (parity == Parity::Even) return -a * k2 * c - b * (q * s + kappa * std::tanh(kappa / 2) * c);
  return -a * k2 * s + b * (q * c - kappa / std::tanh(kappa / 2) * s);
}

std::vector<double> poloidal_collocation_eigenvalues(double kappa, const SlipLength& zeta, int m,
                                                     bool noslip) {
  if (m < 8) throw ConfigError("poloidal collocation needs at least 8 intervals");
  double a, b;
  robin_weights(zeta, &a, &b);
  const int n = m + 1;
  Eigen::MatrixXd D = cheb::diff_matrix(m), D2 = D * D;
  Eigen::MatrixXd L = D2 - kappa * kappa * Eigen::MatrixXd::Identity(n, n);
  // Unknowns (w, phi) with phi = (D^2 - kappa^2) w and (D^2 - kappa^2) phi = lambda phi.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n), B = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  A.topLeftCorner(n, n) = -L;
  A.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  A.bottomRightCorner(n, n) = L;
  B.bottomRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  // w = 0 at both walls.
  for (int r : {0, m}) {
    A.row(r).setZero();
    A(r, r) = 1;
  }
  // Slip rows: a phi +- b w' = 0 (top +, bottom -); w'' = phi on the wall.
  for (int r : {0, m}) {
    int row = n + r;
    A.row(row).setZero();
    B.row(row).setZero();
    double sgn = r == m ? 1.0 : -1.0;
    if (noslip) {
      A.block(row, 0, 1, n) = D.row(r);
    } else {
      A.block(row, 0, 1, n) = sgn * b * D.row(r);
      A(row, n + r) = a;
    }
  }
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, B, false);
  if (ges.info() != Eigen::Success) throw NumericError("generalized eigensolver failed");
  std::vector<double> out;
  auto al = ges.alphas();
  auto be = ges.betas();
  for (int i = 0; i < al.size(); ++i) {
    if (std::abs(be(i)) <= 1e-12 * std::abs(al(i))) continue;
    std::complex<double> lam = al(i) / be(i);
    if (!std::isfinite(lam.real()) || std::abs(lam.imag()) > 1e-8 * std::max(1.0, std::abs(lam))) continue;
    out.push_back(lam.real());
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

std::vector<PoloidalRoot> poloidal_modes_collocation(double kappa, const SlipLength& zeta, int count,
                                                     int m) {
  if (!(kappa > 0)) throw ConfigError("poloidal modes need a nonzero horizontal wavenumber");
  if (m < 4 * count + 16) throw ConfigError("collocation resolution must satisfy m >= 4n + 16");
  auto coarse = poloidal_collocation_eigenvalues(kappa, zeta, m);
  auto fine = poloidal_collocation_eigenvalues(kappa, zeta, 2 * m);
  std::vector<double> kept;
  for (double l : coarse) {
    double best = std::numeric_limits<double>::infinity();
    for (double f : fine) best = std::min(best, std::abs(f - l) / std::max(1.0, std::abs(l)));
    if (best < 1e-6) kept.push_back(l);
    if (static_cast<int>(kept.size()) == count) break;
  }
  if (static_cast<int>(kept.size()) < count) throw NumericError("too few converged poloidal eigenvalues");

  // Analytic roots of both parities; D_odd/q removes the trivial zero at q = 0.
  std::vector<PoloidalRoot> ana;
  for (Parity p : {Parity::Even, Parity::Odd}) {
    auto f = [&](double q) {
      double v = poloidal_dispersion(q, kappa, zeta, p);
      return p == Parity::Odd ? v / q : v;
    };
    for (double q : scan_roots(f, 1e-6, M_PI / 64, count, 1e6))
      ana.push_back({q, p, -(kappa * kappa + q * q), 0});
  }
  std::sort(ana.begin(), ana.end(), [](const PoloidalRoot& x, const PoloidalRoot& y) { return x.lambda > y.lambda; });
  ana.resize(count);
  for (int i = 0; i < count; ++i) {
    if (std::abs(ana[i].lambda - kept[i]) > 1e-6 * std::abs(ana[i].lambda))
      throw NumericError("poloidal collocation disagrees with the dispersion relation");
    ana[i].lambda_collocation = kept[i];
  }
  return ana;
}

std::vector<double> ball_toroidal_roots(int l, const SlipLength& zeta, double R, int count) {
  if (l < 1) throw ConfigError("ball toroidal modes need degree l >= 1");
  double th = zeta.inverse();
  std::vector<double> out;
  if (l == 1 && th == 0) {
    out.push_back(0.0);
    if (count > 1) {
      auto f = [](double s) { return bessel_g(2, s); };
      for (double s : scan_roots(f, 1e-3, 0.05, count - 1, 1e5)) out.push_back(s / R);
    }
    return out;
  }
  auto H = [&](double s) { return (l - 1 + R * th) * bessel_g(l, s) - s * s * bessel_g(l + 1, s); };
  for (double s : scan_roots(H, 1e-3, 0.05, count, 1e5)) out.push_back(s / R);
  return out;
}

EigenBasis build_basis(const Domain& d, const SlipLength& zeta, const Cutoffs& c) {
  if (c.kappa < 0 || c.n < 1) throw ConfigError("cutoffs must satisfy kappa >= 0 and n >= 1");
  EigenBasis B;
  B.domain = d;
  B.zeta = zeta;
  B.cutoffs = c;
  if (d.kind == DomainKind::Channel) {
    std::vector<std::pair<double, Parity>> shear;
    for (int n = 0; n < c.n; ++n) {
      Parity p;
      double k = shear_root(zeta, n, &p);
      shear.push_back({k, p});
    }
    const double area = d.Lx * d.Ly;
    for (int m1 = 0; m1 <= c.kappa; ++m1)
      for (int m2 = -c.kappa; m2 <= c.kappa; ++m2) {
        if (m1 == 0 && m2 < 0) continue;
        EigenMode base;
        base.m1 = m1;
        base.m2 = m2;
        double kx = kappa_x(d, base), ky = kappa_y(d, base), k2 = kx * kx + ky * ky;
        if (m1 == 0 && m2 == 0) {
          for (int dir = 0; dir < 2; ++dir)
            for (int n = 0; n < c.n; ++n) {
              EigenMode md = base;
              md.family = Family::Shear;
              md.variant = dir;
              md.n = n;
              md.k = shear[n].first;
              md.parity = static_cast<int>(shear[n].second);
              md.lambda = -md.k * md.k;
              md.amp = 1 / std::sqrt(area * profile_l2(shear_profile(md), md.k));
              B.modes.push_back(md);
            }
          continue;
        }
        const double kap = std::sqrt(k2);
        auto pol = poloidal_modes_collocation(kap, zeta, c.n, 4 * c.n + 16);
        for (int var = 0; var < 2; ++var) {
          for (int n = 0; n < c.n; ++n) {
            EigenMode md = base;
            md.family = Family::Toroidal;
            md.variant = var;
            md.n = n;
            md.k = shear[n].first;
            md.parity = static_cast<int>(shear[n].second);
            md.lambda = -md.k * md.k - k2;
            md.amp = 1 / std::sqrt(0.5 * area * profile_l2(shear_profile(md), md.k));
            B.modes.push_back(md);
          }
          for (int n = 0; n < c.n; ++n) {
            EigenMode md = base;
            md.family = Family::Poloidal;
            md.variant = var;
            md.n = n;
            md.k = pol[n].q;
            md.parity = static_cast<int>(pol[n].parity);
            md.lambda = pol[n].lambda;
            md.lambda_collocation = pol[n].lambda_collocation;
            Profile w = poloidal_profile(md.k, kap, md.parity);
            double wmax = std::max(md.k, kap);
            md.amp = 1 / std::sqrt(0.5 * area * (profile_l2(w, wmax) + profile_l2(w.derivative(), wmax) / k2));
            B.modes.push_back(md);
          }
        }
      }
  } else {
    for (int l = 1; l <= c.kappa; ++l) {
      auto ks = ball_toroidal_roots(l, zeta, d.R, c.n);
      for (int n = 0; n < c.n; ++n)
        for (int m = -l; m <= l; ++m) {
          EigenMode md;
          md.family = Family::BallToroidal;
          md.l = l;
          md.m = m;
          md.n = n;
          md.k = ks[n];
          md.lambda = -md.k * md.k;
          md.amp = 1 / std::sqrt(ball_radial_l2(md, d.R));
          B.modes.push_back(md);
        }
    }
  }
  if (B.modes.empty()) throw ConfigError("cutoffs select no modes");
  std::sort(B.modes.begin(), B.modes.end(), mode_less);
  B.lambda_hat = std::max(0.0, B.modes.front().lambda);
  return B;
}

template <int P>
void eval_mode(const Domain& d, const EigenMode& md, const Vec3& x, VecJet<P>& u, Jet<P>* p) {
  if (md.family == Family::BallToroidal) {
    Jet<P + 1> phi = ball_potential<P + 1>(md, x);
    VecJet<P> g{diff(phi, 0), diff(phi, 1), diff(phi, 2)};
    VecJet<P> X{Jet<P>::variable(0, x[0]), Jet<P>::variable(1, x[1]), Jet<P>::variable(2, x[2])};
    u = cross(g, X);
    if (p) *p = Jet<P>(0.0);
    return;
  }
  Jet<P> X = Jet<P>::variable(0, x[0]), Y = Jet<P>::variable(1, x[1]);
  Jet<P> S = Jet<P>::variable(2, x[2]) + (-0.5);
  for (auto& c : u) c = Jet<P>();
  if (p) *p = Jet<P>();
  const double kx = kappa_x(d, md), ky = kappa_y(d, md);
  if (md.family == Family::Shear) {
    u[md.variant] = md.amp * shear_profile(md).jet(S);
    return;
  }
  Jet<P> th = kx * X + ky * Y;
  Jet<P> cs = md.variant ? sin(th) : cos(th);
  Jet<P> dcs = md.variant ? cos(th) : -sin(th);
  const double k2 = kx * kx + ky * ky, kap = std::sqrt(k2);
  if (md.family == Family::Toroidal) {
    Jet<P> f = shear_profile(md).jet(S) * cs;
    u[0] = (-md.amp * ky / kap) * f;
    u[1] = (md.amp * kx / kap) * f;
    return;
  }
  Profile w = poloidal_profile(md.k, kap, md.parity);
  Jet<P> wp = w.derivative().jet(S) * dcs;
  u[0] = (md.amp * kx / k2) * wp;
  u[1] = (md.amp * ky / k2) * wp;
  u[2] = md.amp * (w.jet(S) * cs);
  if (p) *p = md.amp * (poloidal_pressure(md.k, kap, md.parity).jet(S) * cs);
}

template void eval_mode<0>(const Domain&, const EigenMode&, const Vec3&, VecJet<0>&, Jet<0>*);
template void eval_mode<1>(const Domain&, const EigenMode&, const Vec3&, VecJet<1>&, Jet<1>*);
template void eval_mode<2>(const Domain&, const EigenMode&, const Vec3&, VecJet<2>&, Jet<2>*);
template void eval_mode<3>(const Domain&, const EigenMode&, const Vec3&, VecJet<3>&, Jet<3>*);

// ---- cache ----

namespace {

nlohmann::json domain_json(const Domain& d) {
  nlohmann::json j;
  j["kind"] = d.name();
  if (d.kind == DomainKind::Channel) {
    j["Lx"] = d.Lx;
    j["Ly"] = d.Ly;
  } else {
    j["R"] = d.R;
  }
  return j;
}

nlohmann::json header_json(const Domain& d, const SlipLength& zeta, const Cutoffs& c) {
  return {{"format", "slipstokes-basis"},
          {"version", kBasisFormatVersion},
          {"domain", domain_json(d)},
          {"zeta", zeta.str()},
          {"cutoffs", {{"kappa", c.kappa}, {"n", c.n}}}};
}

}  // namespace

void save_basis(const EigenBasis& b, const std::string& path) {
  nlohmann::json j = header_json(b.domain, b.zeta, b.cutoffs);
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : b.modes) {
    modes.push_back({{"family", family_name(m.family)},
                     {"indices",
                      {{"m1", m.m1}, {"m2", m.m2}, {"variant", m.variant}, {"parity", m.parity}, {"n", m.n},
                       {"l", m.l}, {"m", m.m}}},
                     {"lambda", m.lambda},
                     {"coeffs", {m.k, m.amp}},
                     {"lambda_collocation", std::isnan(m.lambda_collocation) ? nlohmann::json(nullptr)
                                                                               : nlohmann::json(m.lambda_collocation)}});
  }
  j["modes"] = modes;
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(std::hash<std::string>{}(path + std::to_string(std::rand())) % 1000000);
  {
    std::ofstream o(tmp);
    if (!o) throw IoError("cannot write basis cache " + tmp.string());
    o << j.dump(1) << "\n";
    if (!o) throw IoError("failed writing basis cache " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move basis cache into place: " + ec.message());
  }
}

EigenBasis load_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open basis file " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "slipstokes-basis") throw IoError("not a basis file: " + path);
    if (j.at("version").get<int>() != kBasisFormatVersion) throw IoError("basis file version mismatch: " + path);
    EigenBasis b;
    const auto& dj = j.at("domain");
    b.domain = dj.at("kind") == "channel" ? Domain::channel(dj.at("Lx"), dj.at("Ly")) : Domain::ball(dj.at("R"));
    b.zeta = SlipLength::parse(j.at("zeta").get<std::string>());
    b.cutoffs.kappa = j.at("cutoffs").at("kappa");
    b.cutoffs.n = j.at("cutoffs").at("n");
    for (const auto& mj : j.at("modes")) {
      EigenMode m;
      m.family = family_from_name(mj.at("family"));
      const auto& ix = mj.at("indices");
      m.m1 = ix.at("m1");
      m.m2 = ix.at("m2");
      m.variant = ix.at("variant");
      m.parity = ix.at("parity");
      m.n = ix.at("n");
      m.l = ix.at("l");
      m.m = ix.at("m");
      m.lambda = mj.at("lambda");
      m.k = mj.at("coeffs").at(0);
      m.amp = mj.at("coeffs").at(1);
      if (!mj.at("lambda_collocation").is_null()) m.lambda_collocation = mj.at("lambda_collocation");
      b.modes.push_back(m);
    }
    if (b.modes.empty()) throw IoError("basis file has no modes: " + path);
    b.lambda_hat = std::max(0.0, b.modes.front().lambda);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed basis file " + path + ": " + e.what());
  }
}

std::string basis_cache_key(const Domain& d, const SlipLength& zeta, const Cutoffs& c) {
  std::string s = header_json(d, zeta, c).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "basis-%s-%016llx.json", d.name().c_str(), static_cast<unsigned long long>(h));
  return buf;
}

EigenBasis cached_basis(const Domain& d, const SlipLength& zeta, const Cutoffs& c) {
  const char* dir = std::getenv("SLIPSTOKES_CACHE");
  if (!dir || !*dir) return build_basis(d, zeta, c);
  std::filesystem::path p = std::filesystem::path(dir) / basis_cache_key(d, zeta, c);
  if (std::filesystem::exists(p)) {
    try {
      EigenBasis b = load_basis(p.string());
      if (header_json(b.domain, b.zeta, b.cutoffs) == header_json(d, zeta, c)) {
        b.domain.quad = d.quad;
        return b;
      }
    } catch (const IoError&) {
      // Corrupt or stale entry: rebuild and overwrite.
    }
  }
  EigenBasis b = build_basis(d, zeta, c);
  save_basis(b, p.string());
  return b;
}

// ---- validation ----

bool ModeDiagnostics::ok(double tol_eig, double tol_nav) const {
  return eigen_residual <= tol_eig && navier_residual <= tol_nav && norm_defect <= 1e-10 &&
         normal_trace <= 1e-10 && divergence <= 1e-10;
}

QuadratureSpec validation_quadrature(const EigenBasis& b) {
  const int K = b.cutoffs.kappa, N = b.cutoffs.n;
  if (b.domain.kind == DomainKind::Channel) {
    // Trapezoid rules are exact for mode products once n > 2K.
    int nxy = std::max(6, 2 * K + 2);
    return {nxy, nxy, 24 + 6 * N};
  }
  return {16 + 4 * N, 2 * K + 10, 4 * K + 12};
}

namespace {

template <int P>
Vec3 curl_of(const VecJet<P>& u) {
  return {u[2].d(0, 1, 0) - u[1].d(0, 0, 1), u[0].d(0, 0, 1) - u[2].d(1, 0, 0), u[1].d(1, 0, 0) - u[0].d(0, 1, 0)};
}

}  // namespace

ModeDiagnostics validate_mode(const EigenMode& md, const EigenBasis& b, const QuadratureSpec& q) {
  const Domain& d = b.domain;
  ModeDiagnostics r;
  double nrm = 0, res = 0;
  for (const auto& v : volume_grid(d, q)) {
    VecJet<2> u;
    Jet<2> p;
    eval_mode<2>(d, md, v.x, u, &p);
    double div = u[0].d(1, 0, 0) + u[1].d(0, 1, 0) + u[2].d(0, 0, 1);
    r.divergence = std::max(r.divergence, std::abs(div));
    for (int c = 0; c < 3; ++c) {
      double lap = u[c].d(2, 0, 0) + u[c].d(0, 2, 0) + u[c].d(0, 0, 2);
      int e[3] = {0, 0, 0};
      e[c] = 1;
      double rc = lap - p.d(e[0], e[1], e[2]) - md.lambda * u[c].value();
      res += v.w * rc * rc;
      nrm += v.w * u[c].value() * u[c].value();
    }
  }
  r.eigen_residual = std::sqrt(res);
  r.norm_defect = std::abs(std::sqrt(nrm) - 1);

  SurfaceGrid sg(d, d.kind == DomainKind::Channel ? q.n1 : q.n2, d.kind == DomainKind::Channel ? q.n2 : q.n3);
  const int ns = sg.size();
  std::vector<Vec3> uval(ns), omega(ns), psi(ns), curl_psi(ns), up(ns), piu(ns);
  std::vector<double> normal(ns);
  for (int i = 0; i < ns; ++i) {
    const Frame& f = sg.node(i).frame;
    VecJet<3> u;
    eval_mode<3>(d, md, f.x, u);
    VecJet<1> lap;  // psi = -Lap u
    for (int c = 0; c < 3; ++c)
      lap[c] = -1.0 * (diff(diff(u[c], 0), 0) + diff(diff(u[c], 1), 1) + diff(diff(u[c], 2), 2));
    for (int c = 0; c < 3; ++c) uval[i][c] = u[c].value();
    omega[i] = curl_of(u);
    psi[i] = {lap[0].value(), lap[1].value(), lap[2].value()};
    curl_psi[i] = curl_of(lap);
    normal[i] = dot(uval[i], f.nu);
    up[i] = f.to_ambient(f.tangent(uval[i]));
    piu[i] = f.to_ambient(sg.sff().apply(f.tangent(uval[i])));
    r.normal_trace = std::max(r.normal_trace, std::abs(normal[i]));
  }
  auto gn = sg.tangential_gradient(normal);
  auto div_u = sg.tangential_divergence(up);
  auto div_pi = sg.tangential_divergence(piu);
  const double th = b.zeta.inverse();
  for (int i = 0; i < ns; ++i) {
    const Frame& f = sg.node(i).frame;
    TangentVector nr = navier_residual(uval[i], omega[i], f.tangent(gn[i]), b.zeta, f, sg.sff());
    r.navier_residual = std::max(r.navier_residual, std::hypot(nr[0], nr[1]));
    r.stokes_normal =
        std::max(r.stokes_normal, std::abs(dot(psi[i], f.nu) + th * div_u[i] - 2 * div_pi[i]));
    // curl psi = -lambda omega; its tangential part obeys the slip relation scaled by lambda.
    TangentVector su = hodge_star(f.tangent(uval[i])), spu = hodge_star(sg.sff().apply(f.tangent(uval[i])));
    TangentVector cp = f.tangent(curl_psi[i]);
    double e1 = cp[0] - md.lambda * (th * su[0] - 2 * spu[0]);
    double e2 = cp[1] - md.lambda * (th * su[1] - 2 * spu[1]);
    r.stokes_curl = std::max(r.stokes_curl, std::hypot(e1, e2));
  }
  return r;
}

BasisReport validate_basis(const EigenBasis& b, const QuadratureSpec& q) {
  BasisReport rep;
  const int N = b.size();
  rep.modes.resize(N);
  parallel_for(N, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) rep.modes[i] = validate_mode(b.modes[i], b, q);
  });
  auto nodes = volume_grid(b.domain, q);
  const int nv = static_cast<int>(nodes.size());
  Eigen::MatrixXd V(3 * nv, N);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k)
      for (int i = 0; i < nv; ++i) {
        VecJet<0> u;
        eval_mode<0>(b.domain, b.modes[k], nodes[i].x, u);
        double sw = std::sqrt(nodes[i].w);
        for (int c = 0; c < 3; ++c) V(3 * i + c, k) = sw * u[c].value();
      }
  });
  Eigen::MatrixXd G = V.transpose() * V;
  G -= Eigen::MatrixXd::Identity(N, N);
  rep.gram_defect = G.cwiseAbs().maxCoeff();
  rep.max_lambda = b.modes.front().lambda;
  return rep;
}

}  // namespace slipstokes
