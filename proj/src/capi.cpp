#include "slipstokes/slipstokes.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>

#include "experiments.hpp"

using namespace slipstokes;

struct ss_basis {
  EigenBasis b;
};

struct ss_report {
  std::string text;
  bool pass = false;
};

namespace {

thread_local std::string g_error;

// Maps exceptions to status codes; body returns the PASS/FAIL status.
template <class F>
ss_status guarded(F&& body) {
  g_error.clear();
  try {
    return body();
  } catch (const ConfigError& e) {
    g_error = e.what();
    return SS_CONFIG_ERROR;
  } catch (const NumericError& e) {
    g_error = e.what();
    return SS_NUMERIC_ERROR;
  } catch (const IoError& e) {
    g_error = e.what();
    return SS_IO_ERROR;
  } catch (const std::exception& e) {
    g_error = e.what();
    return SS_INTERNAL_ERROR;
  } catch (...) {
    g_error = "unknown error";
    return SS_INTERNAL_ERROR;
  }
}

Domain parse_domain(const char* s) {
  std::string d = s ? s : "";
  if (d == "channel") return Domain::channel();
  if (d == "ball") return Domain::ball();
  throw ConfigError("unknown domain '" + d + "'");
}

SlipLength parse_zeta(const char* s) {
  if (!s) throw ConfigError("missing zeta");
  return SlipLength::parse(s);
}

Cutoffs resolve_cutoffs(const Domain& d, int kappa, int n) {
  Cutoffs c = default_cutoffs(d);
  if (kappa > 0) c.kappa = kappa;
  if (n > 0) c.n = n;
  return c;
}

void require(const void* p, const char* what) {
  if (!p) throw ConfigError(std::string("null ") + what);
}

ss_status emit(const CampaignReport& r, ss_report** out) {
  *out = new ss_report{r.json(), r.pass};
  return r.pass ? SS_PASS : SS_FAIL;
}

}  // namespace

extern "C" {

const char* ss_last_error(void) { return g_error.c_str(); }

const char* ss_status_name(ss_status s) {
  switch (s) {
    case SS_PASS: return "pass";
    case SS_FAIL: return "fail";
    case SS_CONFIG_ERROR: return "config_error";
    case SS_NUMERIC_ERROR: return "numeric_error";
    case SS_IO_ERROR: return "io_error";
    case SS_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

void ss_set_jobs(int jobs) { set_jobs(jobs); }

ss_status ss_basis_build(const char* domain, const char* zeta, int cutoff_kappa, int cutoff_n, ss_basis** out) {
  return guarded([&] {
    require(out, "output handle");
    Domain d = parse_domain(domain);
    auto z = parse_zeta(zeta);
    *out = new ss_basis{cached_basis(d, z, resolve_cutoffs(d, cutoff_kappa, cutoff_n))};
    return SS_PASS;
  });
}

ss_status ss_basis_load(const char* path, ss_basis** out) {
  return guarded([&] {
    require(out, "output handle");
    require(path, "path");
    *out = new ss_basis{load_basis(path)};
    return SS_PASS;
  });
}

ss_status ss_basis_save(const ss_basis* b, const char* path) {
  return guarded([&] {
    require(b, "basis");
    require(path, "path");
    save_basis(b->b, path);
    return SS_PASS;
  });
}

ss_status ss_basis_cache_key(const ss_basis* b, ss_report** out) {
  return guarded([&] {
    require(b, "basis");
    require(out, "output handle");
    *out = new ss_report{basis_cache_key(b->b.domain, b->b.zeta, b->b.cutoffs), true};
    return SS_PASS;
  });
}

int ss_basis_size(const ss_basis* b) { return b ? b->b.size() : 0; }

int ss_basis_eigenvalues(const ss_basis* b, double* out, int capacity) {
  if (!b || !out) return 0;
  int n = std::min(capacity, b->b.size());
  for (int k = 0; k < n; ++k) out[k] = b->b.modes[k].lambda;
  return n;
}

ss_status ss_basis_table(const ss_basis* b, ss_report** out) {
  return guarded([&] {
    require(b, "basis");
    require(out, "output handle");
    const auto& B = b->b;
    std::ostringstream o;
    o << "# domain " << B.domain.name() << "  zeta " << B.zeta.str() << "  cutoff_kappa " << B.cutoffs.kappa
      << "  cutoff_n " << B.cutoffs.n << "  modes " << B.size() << "  lambda_hat " << B.lambda_hat << "\n";
    o << "index,family,m1,m2,l,m,variant,parity,n,lambda\n";
    char buf[64];
    for (int k = 0; k < B.size(); ++k) {
      const auto& m = B.modes[k];
      std::snprintf(buf, sizeof buf, "%.17g", m.lambda);
      o << k << ',' << family_name(m.family) << ',' << m.m1 << ',' << m.m2 << ',' << m.l << ',' << m.m << ','
        << m.variant << ',' << m.parity << ',' << m.n << ',' << buf << "\n";
    }
    *out = new ss_report{o.str(), true};
    return SS_PASS;
  });
}

void ss_basis_free(ss_basis* b) { delete b; }

void ss_run_options_default(ss_run_options* o) {
  if (!o) return;
  RunRequest r;
  o->mu = r.mu;
  o->T = r.T;
  o->dt = r.dt;
  o->rtol = r.rtol;
  o->atol = r.atol;
  o->integrator = "rk4";
  o->seed = r.seed;
  o->out = nullptr;
}

ss_status ss_run(const ss_basis* b, const ss_run_options* o, ss_report** out) {
  return guarded([&] {
    require(b, "basis");
    require(o, "options");
    require(out, "output handle");
    RunRequest r;
    r.mu = o->mu;
    r.T = o->T;
    r.dt = o->dt;
    r.rtol = o->rtol;
    r.atol = o->atol;
    r.integrator = integrator_from_name(o->integrator ? o->integrator : "rk4");
    r.seed = o->seed;
    r.out = o->out ? o->out : "";
    return emit(run_simulation(b->b, r), out);
  });
}

ss_status ss_campaign(const char* config_path, const char* overrides, ss_report** out) {
  return guarded([&] {
    require(out, "output handle");
    ConfigMap cfg;
    if (config_path && *config_path) cfg = read_config_file(config_path);
    if (overrides)
      for (const auto& [k, v] : parse_config_text(overrides)) cfg[k] = v;
    return emit(run_campaign(make_campaign(cfg)), out);
  });
}

ss_status ss_verify(const char* domain, const char* zeta, int cutoff_kappa, int cutoff_n, unsigned long long seed,
                    int samples, const char* out_dir, ss_report** out) {
  return guarded([&] {
    require(out, "output handle");
    Campaign c;
    c.kind = CampaignKind::IdentitySuite;
    c.domain = parse_domain(domain);
    c.zetas = {parse_zeta(zeta)};
    c.mus = {0.0};
    c.cutoffs = resolve_cutoffs(c.domain, cutoff_kappa, cutoff_n);
    c.seed = seed;
    if (samples < 1) throw ConfigError("samples must be positive");
    c.samples = samples;
    c.out = out_dir ? out_dir : "";
    return emit(run_identity_suite(c), out);
  });
}

ss_status ss_spectrum_report(const char* domain, const char* zetas, int cutoff_kappa, int cutoff_n,
                             const char* out_dir, ss_report** out) {
  return guarded([&] {
    require(out, "output handle");
    std::ostringstream o;
    o << "campaign = spectrum_report\n"
      << "domain = " << (domain ? domain : "") << "\n"
      << "zeta = " << (zetas ? zetas : "") << "\n";
    if (cutoff_kappa > 0) o << "cutoff_kappa = " << cutoff_kappa << "\n";
    if (cutoff_n > 0) o << "cutoff_n = " << cutoff_n << "\n";
    if (out_dir && *out_dir) o << "out = " << out_dir << "\n";
    return emit(run_campaign(make_campaign(parse_config_text(o.str()))), out);
  });
}

const char* ss_report_text(const ss_report* r) { return r ? r->text.c_str() : ""; }
int ss_report_pass(const ss_report* r) { return r && r->pass ? 1 : 0; }
void ss_report_free(ss_report* r) { delete r; }

}  // extern "C"
