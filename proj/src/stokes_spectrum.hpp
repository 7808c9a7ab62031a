// Stokes eigenbasis with the Navier slip condition: Robin roots for the
// channel shear/toroidal families, Chebyshev collocation for the channel
// poloidal family, spherical-Bessel roots for ball toroidal modes.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "jet.hpp"

namespace slipstokes {

enum class Family { Shear, Toroidal, Poloidal, BallToroidal };
const char* family_name(Family f);
Family family_from_name(const std::string& s);

enum class Parity { Even = 0, Odd = 1 };

struct EigenMode {
  Family family = Family::Shear;
  double lambda = 0;
  // Channel: integer wave index, kappa = (2 pi m1 / Lx, 2 pi m2 / Ly).
  int m1 = 0, m2 = 0;
  // Channel: 0 = cos, 1 = sin horizontal phase; shear modes: 0 = x, 1 = y direction.
  int variant = 0;
  int parity = 0;  // about the mid-plane z = 1/2
  int n = 0;       // position within its (family, wave index, variant) slot
  int l = 0, m = 0;  // ball
  double k = 0;      // Robin root: vertical (channel) or radial (ball) wavenumber
  double amp = 1;    // normalization factor
  double lambda_collocation = std::numeric_limits<double>::quiet_NaN();
};

struct Cutoffs {
  int kappa = 1;  // channel: max(|m1|, |m2|); ball: max degree l
  int n = 3;      // modes per family slot
};

struct EigenBasis {
  Domain domain;
  SlipLength zeta = SlipLength::infinite();
  Cutoffs cutoffs;
  std::vector<EigenMode> modes;
  double lambda_hat = 0;  // max(0, max lambda)
  int size() const { return static_cast<int>(modes.size()); }
};

// Roots k > 0 (k = 0 allowed for the complete-slip even branch) of
// k tan(k/2) = 1/zeta (even) or k cot(k/2) = -1/zeta (odd), ascending.
std::vector<double> shear_mode_roots(const SlipLength& zeta, Parity parity, int count);
// The n-th root of the merged even/odd sequence: parities alternate.
double shear_root(const SlipLength& zeta, int n, Parity* parity);

struct PoloidalRoot {
  double q = 0;  // lambda = -(kappa^2 + q^2)
  Parity parity = Parity::Even;
  double lambda = 0;
  double lambda_collocation = 0;
};

// Raw generalized eigenvalues of the collocated poloidal problem on m+1
// Gauss-Lobatto points (finite, real, descending). `noslip` replaces the
// Navier rows by w' = 0.
std::vector<double> poloidal_collocation_eigenvalues(double kappa, const SlipLength& zeta, int m,
                                                     bool noslip = false);
// Closed-form dispersion function for the poloidal family; its zeros in q are
// the eigenvalues lambda = -(kappa^2 + q^2).
double poloidal_dispersion(double q, double kappa, const SlipLength& zeta, Parity parity);
// Leading `count` poloidal eigenpairs at wavenumber |kappa| > 0: collocation
// at resolutions m and 2m, spurious-mode filtering by drift, then polishing of
// each survivor on the closed-form dispersion relation.
std::vector<PoloidalRoot> poloidal_modes_collocation(double kappa, const SlipLength& zeta, int count,
                                                     int m);

// Radial wavenumbers of ball toroidal modes of degree l (k = 0 stands for the
// rigid rotation admitted by complete slip at l = 1).
std::vector<double> ball_toroidal_roots(int l, const SlipLength& zeta, double R, int count);

EigenBasis build_basis(const Domain& d, const SlipLength& zeta, const Cutoffs& c);

// Basis cache (JSON container, bit-exact reload).
void save_basis(const EigenBasis& b, const std::string& path);
EigenBasis load_basis(const std::string& path);
std::string basis_cache_key(const Domain& d, const SlipLength& zeta, const Cutoffs& c);
// Load from $SLIPSTOKES_CACHE if present, else build (and store when the
// variable is set).
EigenBasis cached_basis(const Domain& d, const SlipLength& zeta, const Cutoffs& c);

// Velocity and pressure jets of a mode at x.
template <int P>
void eval_mode(const Domain& d, const EigenMode& md, const Vec3& x, VecJet<P>& u, Jet<P>* p = nullptr);

struct ModeDiagnostics {
  double eigen_residual = 0;     // L2 norm of Lap a - grad p - lambda a
  double norm_defect = 0;        // | ||a|| - 1 |
  double navier_residual = 0;    // max over surface nodes
  double normal_trace = 0;       // max |<a, nu>|
  double divergence = 0;         // max |div a| over volume nodes
  double stokes_normal = 0;      // <psi,nu> = -(1/zeta) div_G a + 2 div_G pi(a), psi = -Lap a
  double stokes_curl = 0;        // (curl psi)^par = (1/zeta) *S a - 2 *pi(S a)
  bool ok(double tol_eig = 1e-8, double tol_nav = 1e-7) const;
};

// Quadrature resolution adequate for validating every mode of a basis.
QuadratureSpec validation_quadrature(const EigenBasis& b);
ModeDiagnostics validate_mode(const EigenMode& md, const EigenBasis& b, const QuadratureSpec& q);

struct BasisReport {
  std::vector<ModeDiagnostics> modes;
  double gram_defect = 0;  // max |G - I|
  double max_lambda = 0;
};
BasisReport validate_basis(const EigenBasis& b, const QuadratureSpec& q);

}  // namespace slipstokes
