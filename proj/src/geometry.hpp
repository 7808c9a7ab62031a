// Boundary geometry of the periodic channel and the ball: frames, curvature,
// the Hodge star, the Navier slip residual, and boundary/volume quadrature
// with spectral tangential calculus.
#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"

namespace slipstokes {

// Slip length: a positive number or +infinity (complete slip).
class SlipLength {
 public:
  static SlipLength finite(double z);
  static SlipLength infinite() { return SlipLength(); }
  static SlipLength parse(const std::string& s);  // number or "inf"

  bool is_infinite() const { return inf_; }
  double value() const { return inf_ ? std::numeric_limits<double>::infinity() : z_; }
  // 1/zeta, exactly zero for complete slip.
  double inverse() const { return inf_ ? 0.0 : 1.0 / z_; }
  std::string str() const;

 private:
  SlipLength() : inf_(true), z_(0) {}
  SlipLength(double z) : inf_(false), z_(z) {}
  bool inf_;
  double z_;
};

enum class DomainKind { Channel, Ball };

// Quadrature resolution. Channel: (nx, ny, nz); Ball: (nr, ntheta, nphi).
struct QuadratureSpec {
  int n1 = 8, n2 = 8, n3 = 32;
  QuadratureSpec doubled() const { return {2 * n1, 2 * n2, 2 * n3}; }
};

struct Domain {
  DomainKind kind = DomainKind::Channel;
  double Lx = 2 * M_PI, Ly = 2 * M_PI;  // channel periods; walls at z = 0, 1
  double R = 1.0;                       // ball radius
  QuadratureSpec quad;

  static Domain channel(double Lx = 2 * M_PI, double Ly = 2 * M_PI);
  static Domain ball(double R = 1.0);
  double volume() const;
  double area() const;
  // Distance of x from the boundary surface (signed: negative inside).
  double boundary_offset(const Vec3& x) const;
  std::string name() const { return kind == DomainKind::Channel ? "channel" : "ball"; }
};

using TangentVector = std::array<double, 2>;

struct Frame {
  Vec3 x{};
  Vec3 e1{}, e2{}, nu{};  // right-handed, nu outward
  Vec3 to_ambient(const TangentVector& v) const { return v[0] * e1 + v[1] * e2; }
  TangentVector tangent(const Vec3& v) const { return {dot(v, e1), dot(v, e2)}; }
};

struct SecondFundamentalForm {
  double pi[2][2] = {{0, 0}, {0, 0}};
  double H = 0;
  TangentVector apply(const TangentVector& v) const {
    return {pi[0][0] * v[0] + pi[1][0] * v[1], pi[0][1] * v[0] + pi[1][1] * v[1]};
  }
  double form(const TangentVector& a, const TangentVector& b) const {
    return a[0] * (pi[0][0] * b[0] + pi[0][1] * b[1]) + a[1] * (pi[1][0] * b[0] + pi[1][1] * b[1]);
  }
};

// Rotation by 90 degrees in the tangent plane: (v1, v2) -> (-v2, v1).
inline TangentVector hodge_star(const TangentVector& v) { return {-v[1], v[0]}; }

// Frame at a boundary point; throws ConfigError if x is off the boundary.
Frame frame_at(const Domain& d, const Vec3& x, double tol = 1e-9);
SecondFundamentalForm second_fundamental_form(const Domain& d, const Vec3& x, double tol = 1e-9);

// omega^par + (1/zeta) *u^par + 2 *grad_G<u,nu> - 2 *pi(u^par), in frame
// components. grad_normal is the tangential gradient of <u,nu>.
TangentVector navier_residual(const Vec3& u, const Vec3& omega, const TangentVector& grad_normal,
                              const SlipLength& zeta, const Frame& f, const SecondFundamentalForm& p);

// Component form of the same condition written out per frame index.
TangentVector navier_residual_components(const Vec3& u, const Vec3& omega,
                                         const TangentVector& grad_normal, const SlipLength& zeta,
                                         const Frame& f, const SecondFundamentalForm& p);

struct BoundaryNode {
  Frame frame;
  double w = 0;  // surface quadrature weight
};

// Surface quadrature grid. Channel: two walls (z = 1 first, then z = 0), each a
// uniform nx-by-ny grid. Ball: Gauss-Legendre in cos(theta) by uniform phi.
class SurfaceGrid {
 public:
  SurfaceGrid(const Domain& d, int n1, int n2);
  explicit SurfaceGrid(const Domain& d)
      : SurfaceGrid(d, d.kind == DomainKind::Ball ? d.quad.n2 : d.quad.n1,
                    d.kind == DomainKind::Ball ? d.quad.n3 : d.quad.n2) {}

  const Domain& domain() const { return dom_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const BoundaryNode& node(int i) const { return nodes_[i]; }
  const SecondFundamentalForm& sff() const { return sff_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int lmax() const { return lmax_; }

  // Spectral tangential calculus on sampled fields. Vector fields are stored
  // as ambient 3-vectors per node. `tail` receives the relative size of the
  // highest resolved band, a proxy for under-resolution.
  std::vector<Vec3> tangential_gradient(const std::vector<double>& f, double* tail = nullptr) const;
  std::vector<double> tangential_divergence(const std::vector<Vec3>& v, double* tail = nullptr) const;
  double integrate(const std::vector<double>& f) const;

 private:
  void build_channel();
  void build_ball();
  std::vector<double> wall_derivative(const std::vector<double>& f, int wall, int axis) const;
  // Real spherical-harmonic analysis of f on the unit sphere; returns
  // coefficients indexed by l*l + l + m.
  std::vector<double> sh_analysis(const std::vector<double>& f) const;
  double band_tail(const std::vector<double>& c, double ref) const;

  Domain dom_;
  int n1_, n2_, lmax_ = 0;
  SecondFundamentalForm sff_;
  std::vector<BoundaryNode> nodes_;
  // Channel: Fourier differentiation matrices along x and y.
  std::vector<double> dx_, dy_;
  // Ball: ring data and normalized associated Legendre tables.
  std::vector<double> theta_, wtheta_, phi_;
  std::vector<double> plm_, dplm_;  // [ring][l*(l+1)/2 + m]
};

struct VolumeNode {
  Vec3 x{};
  double w = 0;
};

// Volume quadrature. Channel: uniform in x, y, Gauss-Legendre in z.
// Ball: Gauss-Legendre in r (weight r^2) and cos(theta), uniform phi.
std::vector<VolumeNode> volume_grid(const Domain& d, const QuadratureSpec& q);

inline int plm_index(int l, int m) { return l * (l + 1) / 2 + m; }

}  // namespace slipstokes
