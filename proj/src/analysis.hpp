// Verification of the vector-calculus identities behind the energy
// estimates, and empirical constants for the elliptic inequalities.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "helmholtz.hpp"
#include "stokes_spectrum.hpp"

namespace slipstokes {

// Scalar dictionary. Channel: cos/sin(kx x + ky y) z^p for wave indices with
// |m_i| <= 1 (half plane) and p <= 3; ball: monomials of degree <= 4.
int scalar_dictionary_size(const Domain& d);
template <int P>
void scalar_dictionary(const Domain& d, const Vec3& x, std::vector<Jet<P>>& out);

// Smooth scalar given by dictionary coefficients (empty means zero).
struct RandomScalar {
  std::vector<double> c;
  static RandomScalar draw(const Domain& d, std::mt19937_64& rng);
  bool empty() const { return c.empty(); }
  template <int P>
  Jet<P> eval(const Domain& d, const Vec3& x) const;
};

// A smooth field for the identity suite: u = u_K + grad g with
// u_K = sum_k c_k a_k, and an independent scalar f. The gradient part breaks
// solenoidality, tangency and the slip condition; the flags describe u_K,
// which is the field the inequality fits use.
struct FieldSample {
  std::vector<double> coeffs;
  RandomScalar g, f;
  bool divergence_free = false, tangent_on_boundary = false, satisfies_navier = false;
};

// Draws and classifies.
std::vector<FieldSample> make_samples(const EigenBasis& b, int count, std::uint64_t seed);
// Sets the three flags by measurement (tolerance 1e-9).
void classify_sample(FieldSample& s, const EigenBasis& b, const QuadratureSpec& q);

// Resolution of one suite level: volume quadrature (surface grid derived from
// it) and, for the channel, the collocation grid used by the spectral
// Helmholtz decomposition.
struct SuiteLevel {
  QuadratureSpec quad;
  int gx = 8, gy = 8, gz = 16;
};
SuiteLevel default_level(const Domain& d);
SuiteLevel refine(const SuiteLevel& l);

using ResidualMap = std::map<std::string, double>;

// Max-norm residuals of the pointwise identities for one sample.
ResidualMap check_pointwise_identities(const FieldSample& s, const EigenBasis& b, const SuiteLevel& lvl);
// Relative residuals of the integral identities for one sample.
ResidualMap check_integral_identities(const FieldSample& s, const EigenBasis& b, const SuiteLevel& lvl);

// Per-sample results of one pass over a sample set.
struct SuitePass {
  std::vector<ResidualMap> pointwise, integral, diagnostics;
  // Norms feeding the inequality monitors, per sample.
  std::vector<std::map<std::string, double>> norms;
  bool resolution_insufficient = false;
};
SuitePass run_suite_pass(const std::vector<FieldSample>& samples, const EigenBasis& b, const SuiteLevel& lvl);

struct IdentityReport {
  std::string domain;
  std::uint64_t seed = 0;
  int samples = 0;
  SuiteLevel coarse, fine;
  ResidualMap coarse_max, fine_max;  // max over samples
  ResidualMap diagnostics;           // not gating
  std::map<std::string, bool> decay_ok;
  double tolerance = 1e-9;
  bool resolution_insufficient = false;
  bool pass = false;
  std::string json() const;
};

struct InequalityReport;
// When fits is given, inequality constants are fitted from the same passes.
IdentityReport identity_suite(const EigenBasis& b, int count, std::uint64_t seed,
                              std::vector<InequalityReport>* fits = nullptr);

struct InequalityReport {
  std::string inequality_id;
  std::vector<double> lhs, rhs;
  double fitted_constant = 0;
  double fitted_constant_refined = 0;  // same samples, doubled resolution
  std::vector<int> rejected;           // samples lacking a required hypothesis
  std::string resolution;
  std::uint64_t seed = 0;
  bool stable = false;  // finite and within 5% under doubling
  std::string json() const;
};

// Fits for: h2_elliptic, h2_curlcurl, norm_equivalence_lower,
// norm_equivalence_upper, curl_projection, projection_stability.
std::vector<InequalityReport> fit_inequality_constants(const std::vector<FieldSample>& samples,
                                                       const EigenBasis& b, const SuiteLevel& lvl,
                                                       std::uint64_t seed);
// Same, with passes supplied (avoids recomputation).
std::vector<InequalityReport> fit_from_passes(const std::vector<FieldSample>& samples, const SuitePass& coarse,
                                              const SuitePass& fine, const SuiteLevel& lvl, std::uint64_t seed);

// E(P_N u, P_N u) for N = 1..size from expansion coefficients.
std::vector<double> truncation_energies(const EigenBasis& b, const std::vector<double>& c);

}  // namespace slipstokes
