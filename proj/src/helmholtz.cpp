#include "helmholtz.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "chebyshev.hpp"

namespace slipstokes {

namespace {

struct FftPlans {
  fftw_plan fwd, inv;
};

// FFTW planning is not thread-safe; plans are created once per grid shape and
// executed through the new-array interface.
const FftPlans& plans_for(int nx, int ny) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({nx, ny});
  if (it != cache.end()) return it->second;
  const int nh = nx / 2 + 1;
  double* in = fftw_alloc_real(static_cast<size_t>(nx) * ny);
  fftw_complex* out = fftw_alloc_complex(static_cast<size_t>(nh) * ny);
  FftPlans p;
  p.fwd = fftw_plan_dft_r2c_2d(ny, nx, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inv = fftw_plan_dft_c2r_2d(ny, nx, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  return cache.emplace(std::make_pair(nx, ny), p).first->second;
}

void check_same_grid(const ChannelField& a, const ChannelField& b) {
  if (a.grid != b.grid) throw ConfigError("channel fields live on different grids");
}

}  // namespace

ChannelGrid::ChannelGrid(const Domain& d, int nx, int ny, int nz) : dom_(d), nx_(nx), ny_(ny), nz_(nz) {
  if (d.kind != DomainKind::Channel) throw ConfigError("channel grid requires the channel domain");
  if (nx < 2 || ny < 2 || nx % 2 || ny % 2 || nz < 4) throw ConfigError("channel grid needs even nx, ny and nz >= 4");
  hx_ = d.Lx / nx;
  hy_ = d.Ly / ny;
  z_ = cheb::nodes(nz);
  wz_ = cheb::cc_weights(nz);
  Dz_ = cheb::diff_matrix(nz);
  V_ = cheb::vandermonde(nz);
  Vinv_ = V_.inverse();
  M2_ = cheb::second_derivative_coeffs(nz);
}

Vec3 ChannelGrid::point(int i) const {
  int k = i / plane(), r = i % plane();
  return {(r % nx_) * hx_, (r / nx_) * hy_, z_[k]};
}

double ChannelGrid::kx(int ix) const { return 2 * M_PI * ix / dom_.Lx; }
double ChannelGrid::ky(int iy) const { return 2 * M_PI * (iy <= ny_ / 2 ? iy : iy - ny_) / dom_.Ly; }
bool ChannelGrid::nyquist(int ix, int iy) const { return ix == nx_ / 2 || iy == ny_ / 2; }

std::vector<std::complex<double>> ChannelGrid::forward(const Scalar& f) const {
  const int nh = nx_ / 2 + 1, nzp = nz_ + 1;
  const auto& p = plans_for(nx_, ny_);
  std::vector<std::complex<double>> out(static_cast<size_t>(nh) * ny_ * nzp);
  Scalar buf(f);
  for (int k = 0; k < nzp; ++k)
    fftw_execute_dft_r2c(p.fwd, buf.data() + static_cast<size_t>(k) * plane(),
                         reinterpret_cast<fftw_complex*>(out.data() + static_cast<size_t>(k) * nh * ny_));
  return out;
}

Scalar ChannelGrid::inverse(const std::vector<std::complex<double>>& c) const {
  const int nh = nx_ / 2 + 1, nzp = nz_ + 1;
  const auto& p = plans_for(nx_, ny_);
  std::vector<std::complex<double>> buf(c);
  Scalar out(size());
  for (int k = 0; k < nzp; ++k)
    fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(buf.data() + static_cast<size_t>(k) * nh * ny_),
                         out.data() + static_cast<size_t>(k) * plane());
  const double s = 1.0 / plane();
  for (double& v : out) v *= s;
  return out;
}

Scalar ChannelGrid::derivative(const Scalar& f, int axis) const {
  if (static_cast<int>(f.size()) != size()) throw ConfigError("scalar does not match the channel grid");
  if (axis == 2) {
    Scalar out(size(), 0.0);
    const int nzp = nz_ + 1;
    for (int k = 0; k < nzp; ++k)
      for (int j = 0; j < nzp; ++j) {
        double d = Dz_(k, j);
        if (d == 0) continue;
        const double* src = f.data() + static_cast<size_t>(j) * plane();
        double* dst = out.data() + static_cast<size_t>(k) * plane();
        for (int r = 0; r < plane(); ++r) dst[r] += d * src[r];
      }
    return out;
  }
  auto c = forward(f);
  const int nh = nx_ / 2 + 1;
  for (int k = 0; k <= nz_; ++k)
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nh; ++ix) {
        auto& v = c[(static_cast<size_t>(k) * ny_ + iy) * nh + ix];
        double w = axis == 0 ? kx(ix) : ky(iy);
        bool ny = axis == 0 ? ix == nx_ / 2 : iy == ny_ / 2;
        v = ny ? 0.0 : std::complex<double>(0, w) * v;
      }
  return inverse(c);
}

double ChannelGrid::integrate(const Scalar& f) const {
  double s = 0;
  for (int k = 0; k <= nz_; ++k) {
    double t = 0;
    for (int r = 0; r < plane(); ++r) t += f[static_cast<size_t>(k) * plane() + r];
    s += wz_[k] * t;
  }
  return s * hx_ * hy_;
}

double ChannelGrid::integrate_walls(const Scalar& f) const {
  double s = 0;
  for (int r = 0; r < plane(); ++r) s += f[r] + f[static_cast<size_t>(nz_) * plane() + r];
  return s * hx_ * hy_;
}

Scalar ChannelGrid::solve_neumann(const Scalar& rhs, const Scalar& flux_top, const Scalar& flux_bottom,
                                  Scalar* dz) const {
  const int nh = nx_ / 2 + 1, nzp = nz_ + 1;
  auto R = forward(rhs);
  // Wall fluxes are single planes; embed them in a one-level transform.
  auto wall = [&](const Scalar& f) {
    if (static_cast<int>(f.size()) != plane()) throw ConfigError("wall data does not match the grid");
    std::vector<std::complex<double>> out(static_cast<size_t>(nh) * ny_);
    Scalar buf(f);
    fftw_execute_dft_r2c(plans_for(nx_, ny_).fwd, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  };
  auto Ft = wall(flux_top), Fb = wall(flux_bottom);
  std::vector<std::complex<double>> Q(R.size(), 0.0), DQ(dz ? R.size() : 0, 0.0);
  const Eigen::RowVectorXd dtop = cheb::derivative_row(nz_, true), dbot = cheb::derivative_row(nz_, false);

  std::map<long long, Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
  auto system = [&](double k2, bool mean_mode) {
    Eigen::MatrixXd A = M2_;
    A.diagonal().array() -= k2;
    A.row(nz_ - 1) = -dbot;
    A.row(nz_) = mean_mode ? cheb::integral_row(nz_) : dtop;
    return A;
  };
  for (int iy = 0; iy < ny_; ++iy)
    for (int ix = 0; ix < nh; ++ix) {
      if (nyquist(ix, iy)) continue;
      const double k2 = kx(ix) * kx(ix) + ky(iy) * ky(iy);
      const bool mean_mode = ix == 0 && iy == 0;
      long long key = mean_mode ? -1 : std::llround(k2 * 1e9);
      auto it = lu.find(key);
      if (it == lu.end()) it = lu.emplace(key, Eigen::PartialPivLU<Eigen::MatrixXd>(system(k2, mean_mode))).first;
      const size_t h = static_cast<size_t>(iy) * nh + ix;
      for (int part = 0; part < 2; ++part) {
        Eigen::VectorXd col(nzp);
        for (int k = 0; k < nzp; ++k) {
          auto v = R[static_cast<size_t>(k) * nh * ny_ + h];
          col(k) = part ? v.imag() : v.real();
        }
        Eigen::VectorXd b = Vinv_ * col;
        double ft = part ? Ft[h].imag() : Ft[h].real(), fb = part ? Fb[h].imag() : Fb[h].real();
        if (mean_mode) {
          // Integral of the source must equal the net outward flux.
          double src = cheb::integral_row(nz_) * b;
          double scale = std::max({static_cast<double>(plane()), std::abs(ft), std::abs(fb), std::abs(src)});
          if (std::abs(src - ft - fb) > 1e-8 * scale)
            throw NumericError("Neumann data incompatible with the source (mean flux mismatch)");
        }
        b(nz_ - 1) = fb;
        b(nz_) = mean_mode ? 0.0 : ft;
        Eigen::VectorXd a = it->second.solve(b);
        auto store = [&](std::vector<std::complex<double>>& out, const Eigen::VectorXd& vals) {
          for (int k = 0; k < nzp; ++k) {
            auto& q = out[static_cast<size_t>(k) * nh * ny_ + h];
            q = part ? std::complex<double>(q.real(), vals(k)) : std::complex<double>(vals(k), q.imag());
          }
        };
        store(Q, V_ * a);
        if (dz) store(DQ, V_ * cheb::derivative_coeffs(a));
      }
    }
  if (dz) *dz = inverse(DQ);
  return inverse(Q);
}

ChannelField::ChannelField(std::shared_ptr<const ChannelGrid> g) : grid(std::move(g)) {
  for (auto& s : c) s.assign(grid->size(), 0.0);
}

ChannelField& ChannelField::operator+=(const ChannelField& o) {
  check_same_grid(*this, o);
  for (int a = 0; a < 3; ++a)
    for (size_t i = 0; i < c[a].size(); ++i) c[a][i] += o.c[a][i];
  return *this;
}

ChannelField& ChannelField::operator-=(const ChannelField& o) {
  check_same_grid(*this, o);
  for (int a = 0; a < 3; ++a)
    for (size_t i = 0; i < c[a].size(); ++i) c[a][i] -= o.c[a][i];
  return *this;
}

ChannelField& ChannelField::operator*=(double s) {
  for (auto& v : c)
    for (double& x : v) x *= s;
  return *this;
}

ChannelField sample_field(std::shared_ptr<const ChannelGrid> g, const std::function<Vec3(const Vec3&)>& f) {
  ChannelField u(g);
  for (int i = 0; i < g->size(); ++i) u.set(i, f(g->point(i)));
  return u;
}

Scalar sample_scalar(const ChannelGrid& g, const std::function<double(const Vec3&)>& f) {
  Scalar s(g.size());
  for (int i = 0; i < g.size(); ++i) s[i] = f(g.point(i));
  return s;
}

ChannelField gradient(const Scalar& f, std::shared_ptr<const ChannelGrid> g) {
  ChannelField u(g);
  for (int a = 0; a < 3; ++a) u.c[a] = g->derivative(f, a);
  return u;
}

Scalar divergence(const ChannelField& u) {
  Scalar d = u.grid->derivative(u.c[0], 0);
  Scalar t = u.grid->derivative(u.c[1], 1), s = u.grid->derivative(u.c[2], 2);
  for (size_t i = 0; i < d.size(); ++i) d[i] += t[i] + s[i];
  return d;
}

ChannelField curl(const ChannelField& u) {
  const auto& g = *u.grid;
  ChannelField w(u.grid);
  auto d = [&](int comp, int axis) { return g.derivative(u.c[comp], axis); };
  Scalar a = d(2, 1), b = d(1, 2);
  for (size_t i = 0; i < a.size(); ++i) w.c[0][i] = a[i] - b[i];
  a = d(0, 2);
  b = d(2, 0);
  for (size_t i = 0; i < a.size(); ++i) w.c[1][i] = a[i] - b[i];
  a = d(1, 0);
  b = d(0, 1);
  for (size_t i = 0; i < a.size(); ++i) w.c[2][i] = a[i] - b[i];
  return w;
}

ChannelField laplacian(const ChannelField& u) {
  const auto& g = *u.grid;
  ChannelField out(u.grid);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a) {
      Scalar s = g.derivative(g.derivative(u.c[c], a), a);
      for (size_t i = 0; i < s.size(); ++i) out.c[c][i] += s[i];
    }
  return out;
}

double inner(const ChannelField& u, const ChannelField& w) {
  check_same_grid(u, w);
  Scalar s(u.grid->size());
  for (int i = 0; i < u.grid->size(); ++i) s[i] = dot(u.at(i), w.at(i));
  return u.grid->integrate(s);
}

double wall_inner(const ChannelField& u, const ChannelField& w) {
  check_same_grid(u, w);
  Scalar s(u.grid->size(), 0.0);
  for (int i = 0; i < u.grid->size(); ++i) s[i] = dot(u.at(i), w.at(i));
  return u.grid->integrate_walls(s);
}

double max_normal_trace(const ChannelField& u) {
  const auto& g = *u.grid;
  double m = 0;
  for (int r = 0; r < g.plane(); ++r)
    m = std::max({m, std::abs(u.c[2][r]), std::abs(u.c[2][static_cast<size_t>(g.nz()) * g.plane() + r])});
  return m;
}

double max_abs(const Scalar& f) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

namespace {

Scalar wall_plane(const ChannelGrid& g, const Scalar& f, bool top) {
  size_t off = top ? static_cast<size_t>(g.nz()) * g.plane() : 0;
  return Scalar(f.begin() + off, f.begin() + off + g.plane());
}

}  // namespace

HelmholtzResult helmholtz_decompose(const ChannelField& u) {
  const auto& g = *u.grid;
  Scalar div = divergence(u);
  Scalar top = wall_plane(g, u.c[2], true), bot = wall_plane(g, u.c[2], false);
  for (double& v : bot) v = -v;  // outward normal is -e_z at z = 0
  // d_z q from the Chebyshev coefficients avoids one collocation derivative.
  Scalar qz;
  Scalar q = g.solve_neumann(div, top, bot, &qz);
  ChannelField gq(u.grid);
  gq.c[0] = g.derivative(q, 0);
  gq.c[1] = g.derivative(q, 1);
  gq.c[2] = std::move(qz);
  ChannelField pu = u;
  pu -= gq;
  return {std::move(pu), std::move(q)};
}

Scalar solve_pressure_neumann(const ChannelField& u, const SlipLength& zeta) {
  const auto& g = *u.grid;
  const double th = zeta.inverse();
  // Flat walls: pi = 0 and the tangential divergence is d_x u_x + d_y u_y.
  Scalar dh = g.derivative(u.c[0], 0), dy = g.derivative(u.c[1], 1);
  for (size_t i = 0; i < dh.size(); ++i) dh[i] = th * (dh[i] + dy[i]);
  Scalar zero(g.size(), 0.0);
  return g.solve_neumann(zero, wall_plane(g, dh, true), wall_plane(g, dh, false));
}

ChannelField stokes_apply(const ChannelField& u, const SlipLength& zeta) {
  ChannelField s = laplacian(u);
  s -= gradient(solve_pressure_neumann(u, zeta), u.grid);
  return s;
}

std::vector<double> project_PN(const ChannelField& u, const EigenBasis& b, int N) {
  const auto& g = *u.grid;
  N = std::min(N, b.size());
  std::vector<double> c(N, 0.0);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      double s = 0;
      for (int i = 0; i < g.size(); ++i) {
        VecJet<0> a;
        eval_mode<0>(b.domain, b.modes[k], g.point(i), a);
        s += g.weight(i) * (a[0].value() * u.c[0][i] + a[1].value() * u.c[1][i] + a[2].value() * u.c[2][i]);
      }
      c[k] = s;
    }
  });
  return c;
}

double dirichlet_form(const ChannelField& u, const ChannelField& w, const SlipLength& zeta) {
  check_same_grid(u, w);
  const auto& g = *u.grid;
  Scalar s(g.size(), 0.0);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a) {
      Scalar du = g.derivative(u.c[c], a), dw = g.derivative(w.c[c], a);
      for (size_t i = 0; i < s.size(); ++i) s[i] += du[i] * dw[i];
    }
  return g.integrate(s) + zeta.inverse() * wall_inner(u, w);
}

FieldFn mode_sum(const EigenBasis& b, const std::vector<double>& c) {
  return [&b, c](const Vec3& x, VecJet<1>& u) {
    for (auto& j : u) j = Jet<1>();
    for (size_t k = 0; k < c.size(); ++k) {
      if (c[k] == 0) continue;
      VecJet<1> a;
      eval_mode<1>(b.domain, b.modes[k], x, a);
      for (int i = 0; i < 3; ++i) u[i].axpy(c[k], a[i]);
    }
  };
}

std::vector<double> project_PN(const FieldFn& u, const EigenBasis& b, int N, const QuadratureSpec& q) {
  N = std::min(N, b.size());
  auto nodes = volume_grid(b.domain, q);
  std::vector<Vec3> uv(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    VecJet<1> j;
    u(nodes[i].x, j);
    uv[i] = {j[0].value(), j[1].value(), j[2].value()};
  }
  std::vector<double> c(N, 0.0);
  parallel_for(N, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      double s = 0;
      for (size_t i = 0; i < nodes.size(); ++i) {
        VecJet<0> a;
        eval_mode<0>(b.domain, b.modes[k], nodes[i].x, a);
        s += nodes[i].w * (a[0].value() * uv[i][0] + a[1].value() * uv[i][1] + a[2].value() * uv[i][2]);
      }
      c[k] = s;
    }
  });
  return c;
}

double dirichlet_form(const FieldFn& u, const FieldFn& w, const Domain& d, const SlipLength& zeta,
                      const QuadratureSpec& q) {
  double vol = 0;
  for (const auto& n : volume_grid(d, q)) {
    VecJet<1> a, b;
    u(n.x, a);
    w(n.x, b);
    double s = 0;
    for (int c = 0; c < 3; ++c) s += a[c].d(1, 0, 0) * b[c].d(1, 0, 0) + a[c].d(0, 1, 0) * b[c].d(0, 1, 0) +
                                     a[c].d(0, 0, 1) * b[c].d(0, 0, 1);
    vol += n.w * s;
  }
  SurfaceGrid sg(d, d.kind == DomainKind::Channel ? q.n1 : q.n2, d.kind == DomainKind::Channel ? q.n2 : q.n3);
  double bnd = 0;
  for (int i = 0; i < sg.size(); ++i) {
    const auto& nd = sg.node(i);
    VecJet<1> a, b;
    u(nd.frame.x, a);
    w(nd.frame.x, b);
    Vec3 av{a[0].value(), a[1].value(), a[2].value()}, bv{b[0].value(), b[1].value(), b[2].value()};
    bnd += nd.w * (zeta.inverse() * dot(av, bv) - sg.sff().form(nd.frame.tangent(av), nd.frame.tangent(bv)));
  }
  return vol + bnd;
}

double dirichlet_form_diagonal(const EigenBasis& b, const std::vector<double>& c) {
  double s = 0;
  for (size_t k = 0; k < c.size() && k < b.modes.size(); ++k) s -= b.modes[k].lambda * c[k] * c[k];
  return s;
}

}  // namespace slipstokes
