// Helmholtz decomposition, pressure Neumann solves, the Stokes operator,
// truncation projectors P_N and the Dirichlet form.
//
// Channel fields live on a collocation grid (uniform in x, y; Chebyshev
// Gauss-Lobatto in z, walls included). Neumann problems are solved per
// horizontal wavevector by a Chebyshev tau method. Ball fields are handled
// through their eigen-expansion (toroidal sector, where the pressure vanishes).
#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "geometry.hpp"
#include "jet.hpp"
#include "stokes_spectrum.hpp"

namespace slipstokes {

using Scalar = std::vector<double>;

class ChannelGrid {
 public:
  ChannelGrid(const Domain& d, int nx, int ny, int nz);
  static std::shared_ptr<const ChannelGrid> make(const Domain& d, int nx, int ny, int nz) {
    return std::make_shared<const ChannelGrid>(d, nx, ny, nz);
  }

  const Domain& domain() const { return dom_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }  // Chebyshev degree; nz + 1 levels
  int size() const { return nx_ * ny_ * (nz_ + 1); }
  int plane() const { return nx_ * ny_; }
  int index(int ix, int iy, int k) const { return (k * ny_ + iy) * nx_ + ix; }
  Vec3 point(int i) const;
  double weight(int i) const { return hx_ * hy_ * wz_[i / plane()]; }
  double wall_weight() const { return hx_ * hy_; }
  const std::vector<double>& z() const { return z_; }

  Scalar derivative(const Scalar& f, int axis) const;
  double integrate(const Scalar& f) const;
  // Integral over both walls of f (plane k = nz is z = 1, k = 0 is z = 0).
  double integrate_walls(const Scalar& f) const;

  // Horizontal transform of each z-level: [k][iy][ix], ix < nx/2 + 1.
  std::vector<std::complex<double>> forward(const Scalar& f) const;
  Scalar inverse(const std::vector<std::complex<double>>& c) const;
  double kx(int ix) const;
  double ky(int iy) const;
  bool nyquist(int ix, int iy) const;

  // Solves Lap q = rhs with outward fluxes dq/dnu = top (z = 1) and bottom
  // (z = 0), zero mean. Throws NumericError if the mean flux is incompatible.
  // If dz is given it receives d_z q computed in coefficient space.
  Scalar solve_neumann(const Scalar& rhs, const Scalar& flux_top, const Scalar& flux_bottom,
                       Scalar* dz = nullptr) const;

 private:
  Domain dom_;
  int nx_, ny_, nz_;
  double hx_, hy_;
  std::vector<double> z_, wz_;
  Eigen::MatrixXd Dz_, V_, Vinv_, M2_;
};

struct ChannelField {
  std::shared_ptr<const ChannelGrid> grid;
  std::array<Scalar, 3> c;

  explicit ChannelField(std::shared_ptr<const ChannelGrid> g);
  Vec3 at(int i) const { return {c[0][i], c[1][i], c[2][i]}; }
  void set(int i, const Vec3& v) {
    for (int a = 0; a < 3; ++a) c[a][i] = v[a];
  }
  ChannelField& operator+=(const ChannelField& o);
  ChannelField& operator-=(const ChannelField& o);
  ChannelField& operator*=(double s);
};

ChannelField sample_field(std::shared_ptr<const ChannelGrid> g, const std::function<Vec3(const Vec3&)>& f);
Scalar sample_scalar(const ChannelGrid& g, const std::function<double(const Vec3&)>& f);

ChannelField gradient(const Scalar& f, std::shared_ptr<const ChannelGrid> g);
Scalar divergence(const ChannelField& u);
ChannelField curl(const ChannelField& u);
ChannelField laplacian(const ChannelField& u);
double inner(const ChannelField& u, const ChannelField& w);
double wall_inner(const ChannelField& u, const ChannelField& w);
// Max |u_z| over both walls.
double max_normal_trace(const ChannelField& u);
double max_abs(const Scalar& f);

struct HelmholtzResult {
  ChannelField pu;  // divergence-free, tangent part
  Scalar q;         // zero-mean potential, u = pu + grad q
};
HelmholtzResult helmholtz_decompose(const ChannelField& u);

// Harmonic p with dp/dnu = (1/zeta) div_G u - 2 div_G pi(u) on the walls.
Scalar solve_pressure_neumann(const ChannelField& u, const SlipLength& zeta);
// Lap u - grad p.
ChannelField stokes_apply(const ChannelField& u, const SlipLength& zeta);
// c_k = <a_k, u> for the first N modes of the basis.
std::vector<double> project_PN(const ChannelField& u, const EigenBasis& b, int N);
double dirichlet_form(const ChannelField& u, const ChannelField& w, const SlipLength& zeta);

// Domain-independent versions on fields given pointwise with first
// derivatives, integrated with volume_grid and SurfaceGrid quadrature.
using FieldFn = std::function<void(const Vec3&, VecJet<1>&)>;
FieldFn mode_sum(const EigenBasis& b, const std::vector<double>& c);
std::vector<double> project_PN(const FieldFn& u, const EigenBasis& b, int N, const QuadratureSpec& q);
double dirichlet_form(const FieldFn& u, const FieldFn& w, const Domain& d, const SlipLength& zeta,
                      const QuadratureSpec& q);
// E(P_N u, P_N u) = -sum_k lambda_k c_k^2 from expansion coefficients.
double dirichlet_form_diagonal(const EigenBasis& b, const std::vector<double>& c);

}  // namespace slipstokes
