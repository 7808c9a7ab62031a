// Experiment campaigns: no-slip, complete-slip and inviscid limits, spectrum
// validation and the identity suite, with key=value configs and JSON summaries.
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "galerkin.hpp"

namespace slipstokes {

enum class CampaignKind { NoslipLimit, CompleteSlipLimit, InviscidLimit, SpectrumReport, IdentitySuite };
CampaignKind campaign_from_name(const std::string& s);
const char* campaign_name(CampaignKind k);

using ConfigMap = std::map<std::string, std::string>;
// key = value lines, '#' starts a comment.
ConfigMap read_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text);

struct Campaign {
  CampaignKind kind = CampaignKind::SpectrumReport;
  Domain domain = Domain::channel();
  std::vector<SlipLength> zetas;
  std::vector<double> mus;
  Cutoffs cutoffs;
  double T = 1.0, dt = 1e-3;
  Integrator integrator = Integrator::RK4;
  double rtol = 1e-10, atol = 1e-12;
  std::uint64_t seed = 42;
  int samples = 100;
  std::string out;  // empty: no files
};

Cutoffs default_cutoffs(const Domain& d);

// Recognized keys: campaign, domain, zeta, mu (single value or comma list),
// cutoff_kappa, cutoff_n, T, dt, integrator, rtol, atol, seed, samples, out.
// Missing keys take per-campaign defaults; invalid values raise ConfigError.
Campaign make_campaign(const ConfigMap& cfg);
ConfigMap campaign_defaults(CampaignKind k);

struct CampaignReport {
  std::string campaign;
  nlohmann::json params, metrics;
  bool pass = false;
  std::string json() const;
};

CampaignReport run_campaign(const Campaign& c);
CampaignReport run_noslip_limit(const Campaign& c);
CampaignReport run_complete_slip_limit(const Campaign& c);
CampaignReport run_inviscid_limit(const Campaign& c);
CampaignReport run_spectrum_report(const Campaign& c);
CampaignReport run_identity_suite(const Campaign& c);

// Single simulation from seeded random initial data
// c_k ~ N(0,1) / (1 + |lambda_k|), normalized to ||c|| = 1.
struct RunRequest {
  double mu = 0.05, T = 1.0, dt = 1e-3;
  Integrator integrator = Integrator::RK4;
  double rtol = 1e-10, atol = 1e-12;
  std::uint64_t seed = 42;
  std::string out;
};
std::vector<double> random_initial_data(const EigenBasis& b, std::uint64_t seed);
CampaignReport run_simulation(const EigenBasis& b, const RunRequest& r);

// Steady Euler solutions with constant-in-time projection dynamics:
// channel shear (U(z), 0, 0), ball rigid rotation about e_z.
struct EulerReference {
  std::string name;
  std::function<Vec3(const Vec3&)> u;
  std::function<double(const Vec3&)> p;
};
EulerReference euler_reference(const Domain& d);
// max |u . grad u + grad p| and max |<u, nu>| by central differences of the
// closed forms (used as a sanity check of the reference, not in the solver).
double euler_residual(const EulerReference& e, const Domain& d);

// Smooth divergence-free tangent field used as initial data by the slip-limit
// campaigns (independent of zeta).
std::function<Vec3(const Vec3&)> reference_initial_field(const Domain& d);
// c_k = int a_k . u by quadrature.
std::vector<double> project_field(const EigenBasis& b, const std::function<Vec3(const Vec3&)>& u,
                                  const QuadratureSpec& q);

// Least-squares slope of log(y) against log(x) with R^2.
struct RateFit {
  double slope = 0, r2 = 0;
};
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace slipstokes
