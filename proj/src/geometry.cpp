#include "geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace slipstokes {

SlipLength SlipLength::finite(double z) {
  if (!(z > 0) || std::isinf(z) || std::isnan(z))
    throw ConfigError("slip length must be a positive number or inf");
  return SlipLength(z);
}

SlipLength SlipLength::parse(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "inf" || t == "+inf" || t == "infinity") return infinite();
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("cannot parse slip length '" + s + "'");
  return finite(v);
}

std::string SlipLength::str() const {
  if (inf_) return "inf";
  // Shortest decimal form that round-trips.
  char buf[32];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, z_);
    if (std::strtod(buf, nullptr) == z_) break;
  }
  return buf;
}

Domain Domain::channel(double Lx, double Ly) {
  if (!(Lx > 0) || !(Ly > 0)) throw ConfigError("channel periods must be positive");
  Domain d;
  d.kind = DomainKind::Channel;
  d.Lx = Lx;
  d.Ly = Ly;
  d.quad = {8, 8, 32};
  return d;
}

Domain Domain::ball(double R) {
  if (!(R > 0)) throw ConfigError("ball radius must be positive");
  Domain d;
  d.kind = DomainKind::Ball;
  d.R = R;
  d.quad = {24, 12, 24};
  return d;
}

double Domain::volume() const {
  return kind == DomainKind::Channel ? Lx * Ly : 4.0 / 3.0 * M_PI * R * R * R;
}

double Domain::area() const { return kind == DomainKind::Channel ? 2 * Lx * Ly : 4 * M_PI * R * R; }

double Domain::boundary_offset(const Vec3& x) const {
  if (kind == DomainKind::Channel) return std::max(-x[2], x[2] - 1.0);
  return norm(x) - R;
}

Frame frame_at(const Domain& d, const Vec3& x, double tol) {
  if (std::abs(d.boundary_offset(x)) > tol) throw ConfigError("point is not on the boundary");
  Frame f;
  f.x = x;
  if (d.kind == DomainKind::Channel) {
    if (x[2] > 0.5) {
      f.e1 = {1, 0, 0};
      f.e2 = {0, 1, 0};
      f.nu = {0, 0, 1};
    } else {
      f.e1 = {1, 0, 0};
      f.e2 = {0, -1, 0};
      f.nu = {0, 0, -1};
    }
    return f;
  }
  double r = norm(x);
  f.nu = (1.0 / r) * x;
  double rho = std::hypot(x[0], x[1]);
  if (rho > 1e-8 * r) {
    double ct = x[2] / r, st = rho / r, cp = x[0] / rho, sp = x[1] / rho;
    f.e1 = {ct * cp, ct * sp, -st};
    f.e2 = {-sp, cp, 0};
  } else {
    double s = x[2] > 0 ? 1.0 : -1.0;
    f.e1 = {1, 0, 0};
    f.e2 = {0, s, 0};
  }
  return f;
}

SecondFundamentalForm second_fundamental_form(const Domain& d, const Vec3& x, double tol) {
  if (std::abs(d.boundary_offset(x)) > tol) throw ConfigError("point is not on the boundary");
  SecondFundamentalForm s;
  if (d.kind == DomainKind::Ball) {
    s.pi[0][0] = s.pi[1][1] = 1.0 / d.R;
    s.H = 2.0 / d.R;
  }
  return s;
}

TangentVector navier_residual(const Vec3& u, const Vec3& omega, const TangentVector& grad_normal,
                              const SlipLength& zeta, const Frame& f, const SecondFundamentalForm& p) {
  TangentVector up = f.tangent(u), wp = f.tangent(omega);
  TangentVector su = hodge_star(up), sg = hodge_star(grad_normal), sp = hodge_star(p.apply(up));
  double iz = zeta.inverse();
  return {wp[0] + iz * su[0] + 2 * sg[0] - 2 * sp[0], wp[1] + iz * su[1] + 2 * sg[1] - 2 * sp[1]};
}

TangentVector navier_residual_components(const Vec3& u, const Vec3& omega,
                                         const TangentVector& grad_normal, const SlipLength& zeta,
                                         const Frame& f, const SecondFundamentalForm& p) {
  double u1 = dot(u, f.e1), u2 = dot(u, f.e2), w1 = dot(omega, f.e1), w2 = dot(omega, f.e2);
  double iz = zeta.inverse();
  double r1 = w1 - (iz * u2 + 2 * grad_normal[1] - 2 * (p.pi[0][1] * u1 + p.pi[1][1] * u2));
  double r2 = w2 - (-iz * u1 - 2 * grad_normal[0] + 2 * (p.pi[0][0] * u1 + p.pi[1][0] * u2));
  return {r1, r2};
}

namespace {

// Fourier differentiation matrix on n uniform points over a period L.
std::vector<double> fourier_diff_matrix(int n, double L) {
  std::vector<double> D(n * n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      double s = ((j - k) % 2 == 0) ? 1.0 : -1.0;
      double a = M_PI * (j - k) / n;
      D[j * n + k] = (n % 2 == 0) ? (M_PI / L) * s / std::tan(a) : (M_PI / L) * s / std::sin(a);
    }
  return D;
}

// Relative magnitude of the highest Fourier band along rows of an n-periodic
// sample set.
double fourier_tail(const std::vector<double>& vals, int n, int stride, int count, int offset,
                    int step) {
  int top = n / 2;
  double amax = 0, atop = 0;
  for (int r = 0; r < count; ++r) {
    for (int m = 0; m <= top; ++m) {
      double re = 0, im = 0;
      for (int j = 0; j < n; ++j) {
        double v = vals[offset + r * step + j * stride];
        re += v * std::cos(2 * M_PI * m * j / n);
        im -= v * std::sin(2 * M_PI * m * j / n);
      }
      double a = std::hypot(re, im) / n;
      amax = std::max(amax, a);
      if (m == top) atop = std::max(atop, a);
    }
  }
  return amax > 0 ? atop / amax : 0.0;
}

}  // namespace

SurfaceGrid::SurfaceGrid(const Domain& d, int n1, int n2) : dom_(d), n1_(n1), n2_(n2) {
  if (n1 < 2 || n2 < 2) throw ConfigError("surface grid needs at least 2 points per direction");
  if (d.kind == DomainKind::Channel)
    build_channel();
  else
    build_ball();
}

void SurfaceGrid::build_channel() {
  const double hx = dom_.Lx / n1_, hy = dom_.Ly / n2_;
  for (int wall = 0; wall < 2; ++wall)
    for (int iy = 0; iy < n2_; ++iy)
      for (int ix = 0; ix < n1_; ++ix) {
        BoundaryNode b;
        b.frame = frame_at(dom_, {ix * hx, iy * hy, wall == 0 ? 1.0 : 0.0});
        b.w = hx * hy;
        nodes_.push_back(b);
      }
  dx_ = fourier_diff_matrix(n1_, dom_.Lx);
  dy_ = fourier_diff_matrix(n2_, dom_.Ly);
}

void SurfaceGrid::build_ball() {
  const int nt = n1_, np = n2_;
  lmax_ = std::min(nt - 1, (np - 1) / 2);
  GaussRule g = gauss_legendre(nt, -1.0, 1.0);
  for (int i = 0; i < nt; ++i) {
    theta_.push_back(std::acos(g.x[i]));
    wtheta_.push_back(g.w[i]);
  }
  for (int j = 0; j < np; ++j) phi_.push_back(2 * M_PI * j / np);
  const double R = dom_.R;
  sff_.pi[0][0] = sff_.pi[1][1] = 1.0 / R;
  sff_.H = 2.0 / R;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      double st = std::sin(theta_[i]), ct = std::cos(theta_[i]);
      double sp = std::sin(phi_[j]), cp = std::cos(phi_[j]);
      BoundaryNode b;
      b.frame.x = {R * st * cp, R * st * sp, R * ct};
      b.frame.nu = {st * cp, st * sp, ct};
      b.frame.e1 = {ct * cp, ct * sp, -st};
      b.frame.e2 = {-sp, cp, 0};
      b.w = R * R * wtheta_[i] * 2 * M_PI / np;
      nodes_.push_back(b);
    }
  // Orthonormal associated Legendre functions and their theta-derivatives.
  const int L = lmax_, nP = (L + 1) * (L + 2) / 2;
  plm_.assign(nt * nP, 0.0);
  dplm_.assign(nt * nP, 0.0);
  for (int i = 0; i < nt; ++i) {
    double t = std::cos(theta_[i]), s = std::sin(theta_[i]);
    double* P = &plm_[i * nP];
    double* dP = &dplm_[i * nP];
    P[0] = 1.0 / std::sqrt(4 * M_PI);
    for (int m = 1; m <= L; ++m)
      P[plm_index(m, m)] = std::sqrt((2.0 * m + 1) / (2.0 * m)) * s * P[plm_index(m - 1, m - 1)];
    for (int m = 0; m < L; ++m) P[plm_index(m + 1, m)] = std::sqrt(2.0 * m + 3) * t * P[plm_index(m, m)];
    for (int m = 0; m <= L; ++m)
      for (int l = m + 2; l <= L; ++l) {
        double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(m) * m));
        double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1));
        P[plm_index(l, m)] = a * (t * P[plm_index(l - 1, m)] - b * P[plm_index(l - 2, m)]);
      }
    for (int l = 0; l <= L; ++l)
      for (int m = 0; m <= l; ++m) {
        double prev = l > m ? P[plm_index(l - 1, m)] : 0.0;
        double c = l > m ? std::sqrt((2.0 * l + 1) * (double(l) * l - double(m) * m) / (2.0 * l - 1)) : 0.0;
        dP[plm_index(l, m)] = (l * t * P[plm_index(l, m)] - c * prev) / s;
      }
  }
}

std::vector<double> SurfaceGrid::wall_derivative(const std::vector<double>& f, int wall, int axis) const {
  const int nx = n1_, ny = n2_;
  std::vector<double> out(nx * ny, 0.0);
  const double* base = &f[wall * nx * ny];
  if (axis == 0) {
    for (int iy = 0; iy < ny; ++iy)
      for (int j = 0; j < nx; ++j) {
        double s = 0;
        for (int k = 0; k < nx; ++k) s += dx_[j * nx + k] * base[iy * nx + k];
        out[iy * nx + j] = s;
      }
  } else {
    for (int ix = 0; ix < nx; ++ix)
      for (int j = 0; j < ny; ++j) {
        double s = 0;
        for (int k = 0; k < ny; ++k) s += dy_[j * ny + k] * base[k * nx + ix];
        out[j * nx + ix] = s;
      }
  }
  return out;
}

std::vector<double> SurfaceGrid::sh_analysis(const std::vector<double>& f) const {
  const int nt = n1_, np = n2_, L = lmax_, nP = (L + 1) * (L + 2) / 2;
  std::vector<double> c((L + 1) * (L + 1), 0.0);
  const double dphi = 2 * M_PI / np;
  for (int i = 0; i < nt; ++i) {
    const double* P = &plm_[i * nP];
    for (int m = 0; m <= L; ++m) {
      double A = 0, B = 0;
      for (int j = 0; j < np; ++j) {
        double v = f[i * np + j];
        A += v * std::cos(m * phi_[j]);
        B += v * std::sin(m * phi_[j]);
      }
      A *= dphi * wtheta_[i];
      B *= dphi * wtheta_[i];
      for (int l = m; l <= L; ++l) {
        double p = P[plm_index(l, m)];
        if (m == 0) {
          c[l * l + l] += p * A;
        } else {
          c[l * l + l + m] += M_SQRT2 * p * A;
          c[l * l + l - m] += M_SQRT2 * p * B;
        }
      }
    }
  }
  return c;
}

double SurfaceGrid::band_tail(const std::vector<double>& c, double ref) const {
  double tot = 0, top = 0;
  const int L = lmax_;
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      double v = c[l * l + l + m] * c[l * l + l + m];
      tot += v;
      if (l == L) top += v;
    }
  // ref keeps fields that vanish up to rounding from reporting an O(1) tail.
  double den = std::max(std::sqrt(tot), ref);
  return den > 0 ? std::sqrt(top) / den : 0.0;
}

std::vector<Vec3> SurfaceGrid::tangential_gradient(const std::vector<double>& f, double* tail) const {
  if (static_cast<int>(f.size()) != size()) throw ConfigError("boundary field does not match the grid");
  std::vector<Vec3> g(size());
  if (dom_.kind == DomainKind::Channel) {
    const int nx = n1_, ny = n2_;
    double t = 0;
    for (int wall = 0; wall < 2; ++wall) {
      auto fx = wall_derivative(f, wall, 0), fy = wall_derivative(f, wall, 1);
      for (int k = 0; k < nx * ny; ++k) g[wall * nx * ny + k] = {fx[k], fy[k], 0.0};
      t = std::max({t, fourier_tail(f, nx, 1, ny, wall * nx * ny, nx),
                    fourier_tail(f, ny, nx, nx, wall * nx * ny, 1)});
    }
    if (tail) *tail = t;
    return g;
  }
  const int nt = n1_, np = n2_, L = lmax_, nP = (L + 1) * (L + 2) / 2;
  auto c = sh_analysis(f);
  if (tail) {
    double fm = 0;
    for (double x : f) fm = std::max(fm, std::abs(x));
    *tail = band_tail(c, std::sqrt(4 * M_PI) * fm);
  }
  for (int i = 0; i < nt; ++i) {
    const double* P = &plm_[i * nP];
    const double* dP = &dplm_[i * nP];
    const double s = std::sin(theta_[i]);
    for (int j = 0; j < np; ++j) {
      double gt = 0, gp = 0;
      for (int l = 0; l <= L; ++l) {
        gt += c[l * l + l] * dP[plm_index(l, 0)];
        for (int m = 1; m <= l; ++m) {
          double cm = std::cos(m * phi_[j]), sm = std::sin(m * phi_[j]);
          double a = c[l * l + l + m], b = c[l * l + l - m];
          gt += M_SQRT2 * dP[plm_index(l, m)] * (a * cm + b * sm);
          gp += M_SQRT2 * m * P[plm_index(l, m)] / s * (-a * sm + b * cm);
        }
      }
      const Frame& fr = nodes_[i * np + j].frame;
      g[i * np + j] = (1.0 / dom_.R) * (gt * fr.e1 + gp * fr.e2);
    }
  }
  return g;
}

std::vector<double> SurfaceGrid::tangential_divergence(const std::vector<Vec3>& v, double* tail) const {
  if (static_cast<int>(v.size()) != size()) throw ConfigError("boundary field does not match the grid");
  std::vector<double> out(size(), 0.0);
  if (dom_.kind == DomainKind::Channel) {
    const int nx = n1_, ny = n2_;
    std::vector<double> vx(size()), vy(size());
    for (int k = 0; k < size(); ++k) {
      vx[k] = v[k][0];
      vy[k] = v[k][1];
    }
    double t = 0;
    for (int wall = 0; wall < 2; ++wall) {
      auto a = wall_derivative(vx, wall, 0), b = wall_derivative(vy, wall, 1);
      for (int k = 0; k < nx * ny; ++k) out[wall * nx * ny + k] = a[k] + b[k];
      for (const auto* comp : {&vx, &vy})
        t = std::max({t, fourier_tail(*comp, nx, 1, ny, wall * nx * ny, nx),
                      fourier_tail(*comp, ny, nx, nx, wall * nx * ny, 1)});
    }
    if (tail) *tail = t;
    return out;
  }
  // Weak form: the (l, m) coefficient of div v is -(1/R) * integral of
  // v . grad_1 Y_lm over the unit sphere.
  const int nt = n1_, np = n2_, L = lmax_, nP = (L + 1) * (L + 2) / 2;
  const double dphi = 2 * M_PI / np;
  std::vector<double> c((L + 1) * (L + 1), 0.0);
  for (int i = 0; i < nt; ++i) {
    const double* P = &plm_[i * nP];
    const double* dP = &dplm_[i * nP];
    const double s = std::sin(theta_[i]);
    for (int m = 0; m <= L; ++m) {
      double At = 0, Bt = 0, Ap = 0, Bp = 0;
      for (int j = 0; j < np; ++j) {
        const Frame& fr = nodes_[i * np + j].frame;
        double vt = dot(v[i * np + j], fr.e1), vp = dot(v[i * np + j], fr.e2);
        double cm = std::cos(m * phi_[j]), sm = std::sin(m * phi_[j]);
        At += vt * cm;
        Bt += vt * sm;
        Ap += vp * cm;
        Bp += vp * sm;
      }
      double w = wtheta_[i] * dphi;
      for (int l = m; l <= L; ++l) {
        double p = P[plm_index(l, m)], dp = dP[plm_index(l, m)];
        if (m == 0) {
          c[l * l + l] -= w * dp * At;
        } else {
          c[l * l + l + m] -= w * M_SQRT2 * (dp * At - m * p / s * Bp);
          c[l * l + l - m] -= w * M_SQRT2 * (dp * Bt + m * p / s * Ap);
        }
      }
    }
  }
  for (double& x : c) x /= dom_.R;
  if (tail) {
    double vm = 0;
    for (const auto& x : v) vm = std::max(vm, norm(x));
    *tail = band_tail(c, std::sqrt(4 * M_PI) * vm / dom_.R);
  }
  for (int i = 0; i < nt; ++i) {
    const double* P = &plm_[i * nP];
    for (int j = 0; j < np; ++j) {
      double s = 0;
      for (int l = 0; l <= L; ++l) {
        s += c[l * l + l] * P[plm_index(l, 0)];
        for (int m = 1; m <= l; ++m)
          s += M_SQRT2 * P[plm_index(l, m)] *
               (c[l * l + l + m] * std::cos(m * phi_[j]) + c[l * l + l - m] * std::sin(m * phi_[j]));
      }
      out[i * np + j] = s;
    }
  }
  return out;
}

double SurfaceGrid::integrate(const std::vector<double>& f) const {
  if (static_cast<int>(f.size()) != size()) throw ConfigError("boundary field does not match the grid");
  double s = 0;
  for (int i = 0; i < size(); ++i) s += nodes_[i].w * f[i];
  return s;
}

std::vector<VolumeNode> volume_grid(const Domain& d, const QuadratureSpec& q) {
  std::vector<VolumeNode> out;
  if (d.kind == DomainKind::Channel) {
    GaussRule gz = gauss_legendre(q.n3, 0.0, 1.0);
    const double hx = d.Lx / q.n1, hy = d.Ly / q.n2;
    for (int k = 0; k < q.n3; ++k)
      for (int iy = 0; iy < q.n2; ++iy)
        for (int ix = 0; ix < q.n1; ++ix) out.push_back({{ix * hx, iy * hy, gz.x[k]}, hx * hy * gz.w[k]});
    return out;
  }
  GaussRule gr = gauss_legendre(q.n1, 0.0, d.R), gt = gauss_legendre(q.n2, -1.0, 1.0);
  const double dphi = 2 * M_PI / q.n3;
  for (int a = 0; a < q.n1; ++a)
    for (int i = 0; i < q.n2; ++i)
      for (int j = 0; j < q.n3; ++j) {
        double r = gr.x[a], ct = gt.x[i], st = std::sqrt(std::max(0.0, 1 - ct * ct)), ph = j * dphi;
        out.push_back({{r * st * std::cos(ph), r * st * std::sin(ph), r * ct}, gr.w[a] * r * r * gt.w[i] * dphi});
      }
  return out;
}

}  // namespace slipstokes
