// Command-line front end over the C API.
#include <slipstokes/slipstokes.h>

#include <cstdio>
#include <sstream>
#include <string>

#include "CLI11.hpp"

namespace {

constexpr int kExitError = 3;  // numeric, I/O or internal failure

struct Flags {
  std::string domain = "channel";
  std::string zeta = "1";
  std::string mu = "0.05";
  int cutoff_kappa = 0;
  int cutoff_n = 0;
  double T = 1.0;
  double dt = 1e-3;
  double rtol = 1e-10;
  unsigned long long seed = 42;
  std::string out;
};

int status_exit(ss_status s) {
  switch (s) {
    case SS_PASS: return 0;
    case SS_FAIL: return 1;
    case SS_CONFIG_ERROR: return 2;
    default: return kExitError;
  }
}

int report_error(ss_status s) {
  std::fprintf(stderr, "error (%s): %s\n", ss_status_name(s), ss_last_error());
  return status_exit(s);
}

// Prints the report (if any) and maps the status to an exit code.
int finish(ss_status s, ss_report* r) {
  if (r) {
    std::printf("%s\n", ss_report_text(r));
    ss_report_free(r);
  }
  if (s != SS_PASS && s != SS_FAIL) return report_error(s);
  return status_exit(s);
}

const char* kCutoffHelp = "0 selects the domain default (channel 1, ball 2)";
const char* kCutoffNHelp = "modes per family slot; 0 selects the domain default (channel 3, ball 2)";

void add_basis_flags(CLI::App* c, Flags& f) {
  c->add_option("--domain", f.domain, "channel or ball")->capture_default_str();
  c->add_option("--zeta", f.zeta, "slip length: number or inf")->capture_default_str();
  c->add_option("--cutoff-kappa", f.cutoff_kappa, kCutoffHelp)->capture_default_str();
  c->add_option("--cutoff-n", f.cutoff_n, kCutoffNHelp)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin Navier-Stokes solver with Navier slip boundary conditions"};
  app.require_subcommand(1);
  app.fallthrough();
  int jobs = 0;
  app.add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
  app.footer("Environment: SLIPSTOKES_CACHE=<dir> caches built bases.\n"
             "Exit codes: 0 pass, 1 fail, 2 config error, 3 numeric/io error.");

  Flags f;

  auto* basis = app.add_subcommand("basis", "build or inspect an eigenbasis");
  basis->require_subcommand(1);
  auto* build = basis->add_subcommand("build", "build a basis (cached when SLIPSTOKES_CACHE is set)");
  add_basis_flags(build, f);
  build->add_option("--out", f.out, "write the basis to this file");
  auto* inspect = basis->add_subcommand("inspect", "print the eigenvalue table of a basis file");
  std::string basis_file;
  inspect->add_option("file", basis_file, "basis file")->required();

  auto* run = app.add_subcommand("run", "integrate one Galerkin trajectory from seeded random data");
  add_basis_flags(run, f);
  double run_mu = 0.05;
  std::string integrator = "rk4";
  run->add_option("--mu", run_mu, "viscosity")->capture_default_str();
  run->add_option("--T", f.T, "final time")->capture_default_str();
  run->add_option("--dt", f.dt, "time step (capped by mu |lambda|max dt <= 0.5)")->capture_default_str();
  run->add_option("--rtol", f.rtol, "relative tolerance (adaptive integrator)")->capture_default_str();
  run->add_option("--integrator", integrator, "rk4, exp or adaptive")->capture_default_str();
  run->add_option("--seed", f.seed, "initial data seed")->capture_default_str();
  run->add_option("--out", f.out, "output directory")->capture_default_str();

  auto* camp = app.add_subcommand("campaign", "run an experiment campaign from a key = value config");
  std::string config;
  camp->add_option("config", config, "config file");
  std::string kind;
  camp->add_option("--kind", kind,
                   "noslip_limit, complete_slip_limit, inviscid_limit, spectrum_report or identity_suite");
  auto* c_domain = camp->add_option("--domain", f.domain, "channel or ball")->capture_default_str();
  auto* c_zeta = camp->add_option("--zeta", f.zeta, "zeta value or comma list (campaign default when unset)");
  auto* c_mu = camp->add_option("--mu", f.mu, "mu value or comma list (campaign default when unset)");
  auto* c_kappa = camp->add_option("--cutoff-kappa", f.cutoff_kappa, kCutoffHelp);
  auto* c_n = camp->add_option("--cutoff-n", f.cutoff_n, kCutoffNHelp);
  auto* c_T = camp->add_option("--T", f.T, "final time")->capture_default_str();
  auto* c_dt = camp->add_option("--dt", f.dt, "time step")->capture_default_str();
  auto* c_rtol = camp->add_option("--rtol", f.rtol, "relative tolerance")->capture_default_str();
  auto* c_seed = camp->add_option("--seed", f.seed, "sample seed")->capture_default_str();
  auto* c_out = camp->add_option("--out", f.out, "output directory");

  auto* verify = app.add_subcommand("verify", "identity suite and inequality fits for one configuration");
  add_basis_flags(verify, f);
  int samples = 100;
  verify->add_option("--seed", f.seed, "sample seed")->capture_default_str();
  verify->add_option("--samples", samples, "random fields")->capture_default_str();
  verify->add_option("--out", f.out, "output directory");

  auto* report = app.add_subcommand("report", "spectrum validation report over a zeta list");
  add_basis_flags(report, f);
  report->add_option("--out", f.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
    return 2;
  }
  ss_set_jobs(jobs);

  if (*build) {
    ss_basis* b = nullptr;
    ss_status s = ss_basis_build(f.domain.c_str(), f.zeta.c_str(), f.cutoff_kappa, f.cutoff_n, &b);
    if (s != SS_PASS) return report_error(s);
    if (!f.out.empty()) s = ss_basis_save(b, f.out.c_str());
    ss_report* key = nullptr;
    if (s == SS_PASS) s = ss_basis_cache_key(b, &key);
    if (s == SS_PASS) {
      std::printf("modes %d\ncache_key %s\n", ss_basis_size(b), ss_report_text(key));
      if (!f.out.empty()) std::printf("written %s\n", f.out.c_str());
    }
    ss_report_free(key);
    ss_basis_free(b);
    return s == SS_PASS ? 0 : report_error(s);
  }
  if (*inspect) {
    ss_basis* b = nullptr;
    ss_status s = ss_basis_load(basis_file.c_str(), &b);
    if (s != SS_PASS) return report_error(s);
    ss_report* t = nullptr;
    s = ss_basis_table(b, &t);
    ss_basis_free(b);
    return finish(s, t);
  }
  if (*run) {
    ss_basis* b = nullptr;
    ss_run_options o;
    ss_run_options_default(&o);
    o.mu = run_mu;
    o.T = f.T;
    o.dt = f.dt;
    o.rtol = f.rtol;
    o.integrator = integrator.c_str();
    o.seed = f.seed;
    o.out = f.out.c_str();
    ss_status s = ss_basis_build(f.domain.c_str(), f.zeta.c_str(), f.cutoff_kappa, f.cutoff_n, &b);
    if (s != SS_PASS) return report_error(s);
    ss_report* r = nullptr;
    s = ss_run(b, &o, &r);
    ss_basis_free(b);
    return finish(s, r);
  }
  if (*camp) {
    // Flags given explicitly override the config file.
    std::ostringstream ov;
    if (!kind.empty()) ov << "campaign = " << kind << "\n";
    if (c_domain->count()) ov << "domain = " << f.domain << "\n";
    if (c_zeta->count()) ov << "zeta = " << f.zeta << "\n";
    if (c_mu->count()) ov << "mu = " << f.mu << "\n";
    if (c_kappa->count()) ov << "cutoff_kappa = " << f.cutoff_kappa << "\n";
    if (c_n->count()) ov << "cutoff_n = " << f.cutoff_n << "\n";
    auto num = [&ov](const char* key, double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
      ov << buf;
    };
    if (c_T->count()) num("T", f.T);
    if (c_dt->count()) num("dt", f.dt);
    if (c_rtol->count()) num("rtol", f.rtol);
    if (c_seed->count()) ov << "seed = " << f.seed << "\n";
    if (c_out->count()) ov << "out = " << f.out << "\n";
    ss_report* r = nullptr;
    ss_status s = ss_campaign(config.empty() ? nullptr : config.c_str(), ov.str().c_str(), &r);
    return finish(s, r);
  }
  if (*verify) {
    ss_report* r = nullptr;
    ss_status s = ss_verify(f.domain.c_str(), f.zeta.c_str(), f.cutoff_kappa, f.cutoff_n, f.seed, samples,
                            f.out.c_str(), &r);
    return finish(s, r);
  }
  if (*report) {
    ss_report* r = nullptr;
    ss_status s = ss_spectrum_report(f.domain.c_str(), f.zeta.c_str(), f.cutoff_kappa, f.cutoff_n, f.out.c_str(), &r);
    return finish(s, r);
  }
  return 2;
}
