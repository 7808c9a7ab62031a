/* C interface to the slip-boundary Stokes eigenbasis and Navier-Stokes
 * Galerkin solver. All functions are thread-safe except where noted; strings
 * returned through ss_report stay valid until the report is freed. */
#ifndef SLIPSTOKES_SLIPSTOKES_H
#define SLIPSTOKES_SLIPSTOKES_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#pragma GCC visibility push(default)
#endif

typedef enum {
  SS_PASS = 0,
  SS_FAIL = 1,
  SS_CONFIG_ERROR = 2,
  SS_NUMERIC_ERROR = 3,
  SS_IO_ERROR = 4,
  SS_INTERNAL_ERROR = 5
} ss_status;

typedef struct ss_basis ss_basis;
typedef struct ss_report ss_report;

/* Message of the last error on the calling thread ("" if none). */
const char* ss_last_error(void);
const char* ss_status_name(ss_status s);
/* Worker cap for parallel loops; 0 means hardware concurrency. */
void ss_set_jobs(int jobs);

/* domain: "channel" or "ball"; zeta: number or "inf". Cutoffs <= 0 take the
 * domain defaults. Uses the SLIPSTOKES_CACHE directory when set. */
ss_status ss_basis_build(const char* domain, const char* zeta, int cutoff_kappa, int cutoff_n, ss_basis** out);
ss_status ss_basis_load(const char* path, ss_basis** out);
ss_status ss_basis_save(const ss_basis* b, const char* path);
/* File name used for this basis inside the cache directory. */
ss_status ss_basis_cache_key(const ss_basis* b, ss_report** out);
int ss_basis_size(const ss_basis* b);
/* Copies min(size, capacity) eigenvalues, sorted nonincreasing. */
int ss_basis_eigenvalues(const ss_basis* b, double* out, int capacity);
/* Text table: index, family, indices, lambda. */
ss_status ss_basis_table(const ss_basis* b, ss_report** out);
void ss_basis_free(ss_basis* b);

typedef struct {
  double mu, T, dt, rtol, atol;
  const char* integrator; /* "rk4", "exp" or "adaptive" */
  unsigned long long seed;
  const char* out; /* output directory, NULL or "" for none */
} ss_run_options;

void ss_run_options_default(ss_run_options* o);
/* Single simulation from seeded random initial data; writes
 * run_trajectory.csv, run_ledger.csv and summary.json under out. */
ss_status ss_run(const ss_basis* b, const ss_run_options* o, ss_report** out);

/* Campaign from a key = value config file (path may be NULL) with overrides
 * given as key = value text applied on top. */
ss_status ss_campaign(const char* config_path, const char* overrides, ss_report** out);
/* Identity suite and inequality fits for one configuration. */
ss_status ss_verify(const char* domain, const char* zeta, int cutoff_kappa, int cutoff_n, unsigned long long seed,
                    int samples, const char* out_dir, ss_report** out);
/* Spectrum validation over a comma-separated zeta list. */
ss_status ss_spectrum_report(const char* domain, const char* zetas, int cutoff_kappa, int cutoff_n,
                             const char* out_dir, ss_report** out);

const char* ss_report_text(const ss_report* r);
int ss_report_pass(const ss_report* r);
void ss_report_free(ss_report* r);

#if defined(__GNUC__)
#pragma GCC visibility pop
#endif

#ifdef __cplusplus
}
#endif

#endif
