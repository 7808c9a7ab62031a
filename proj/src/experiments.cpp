#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "analysis.hpp"
#include "helmholtz.hpp"

namespace slipstokes {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x)) throw ConfigError("invalid value for " + key + ": '" + v + "'");
  return x;
}

long parse_integer(const std::string& key, const std::string& v) {
  double x = parse_number(key, v);
  if (x != std::floor(x)) throw ConfigError(key + " must be an integer");
  return static_cast<long>(x);
}

std::string fmt_tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text << "\n";
  if (!f) throw IoError("write failed: " + path);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::string out_path(const Campaign& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

double norm2v(const std::vector<double>& c) {
  double s = 0;
  for (double v : c) s += v * v;
  return s;
}

// Runs independent jobs and rethrows the first failure in index order.
void run_jobs(int n, const std::function<void(int)>& job) {
  parallel_for(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) job(i);
  });
}

struct RunOutput {
  Trajectory tr;
  EnergyLedger led;
  QuadraticForms Q;
};

RunOutput simulate(const EigenBasis& b, const Campaign& c, double mu, double dt, const std::vector<double>& c0,
                   const std::string& tag) {
  RunOutput r;
  auto q = galerkin_quadrature(b);
  auto B = assemble_convection_tensor(b, q);
  r.Q = assemble_quadratic_forms(b, q);
  SimConfig cfg;
  cfg.mu = mu;
  cfg.T = c.T;
  cfg.dt = dt;
  cfg.integrator = c.integrator;
  cfg.rtol = c.rtol;
  cfg.atol = c.atol;
  cfg.c0 = c0;
  r.tr = integrate(b, B, cfg);
  r.led = energy_ledger(b, r.Q, r.tr, mu);
  attach_monitor(r.led, strong_monitor(b, B, r.Q, r.tr, mu));
  if (!c.out.empty()) {
    write_trajectory_csv(out_path(c, tag + "_trajectory.csv"), r.tr);
    write_ledger_csv(out_path(c, tag + "_ledger.csv"), r.led);
  }
  return r;
}

nlohmann::json params_json(const Campaign& c) {
  nlohmann::json p;
  p["domain"] = c.domain.name();
  for (const auto& z : c.zetas) p["zeta"].push_back(z.str());
  for (double m : c.mus) p["mu"].push_back(m);
  p["cutoff_kappa"] = c.cutoffs.kappa;
  p["cutoff_n"] = c.cutoffs.n;
  p["T"] = c.T;
  p["dt"] = c.dt;
  p["integrator"] = integrator_name(c.integrator);
  p["rtol"] = c.rtol;
  p["atol"] = c.atol;
  p["seed"] = c.seed;
  p["samples"] = c.samples;
  return p;
}

CampaignReport start_report(const Campaign& c) {
  CampaignReport r;
  r.campaign = campaign_name(c.kind);
  r.params = params_json(c);
  ensure_dir(c.out);
  return r;
}

void finish_report(const Campaign& c, const CampaignReport& r) {
  if (!c.out.empty()) write_text(out_path(c, "summary.json"), r.json());
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

CampaignKind campaign_from_name(const std::string& s) {
  if (s == "noslip_limit") return CampaignKind::NoslipLimit;
  if (s == "complete_slip_limit") return CampaignKind::CompleteSlipLimit;
  if (s == "inviscid_limit") return CampaignKind::InviscidLimit;
  if (s == "spectrum_report") return CampaignKind::SpectrumReport;
  if (s == "identity_suite") return CampaignKind::IdentitySuite;
  throw ConfigError("unknown campaign '" + s + "'");
}

const char* campaign_name(CampaignKind k) {
  switch (k) {
    case CampaignKind::NoslipLimit: return "noslip_limit";
    case CampaignKind::CompleteSlipLimit: return "complete_slip_limit";
    case CampaignKind::InviscidLimit: return "inviscid_limit";
    case CampaignKind::SpectrumReport: return "spectrum_report";
    case CampaignKind::IdentitySuite: return "identity_suite";
  }
  return "?";
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap m;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    m[key] = trim(line.substr(eq + 1));
  }
  return m;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

ConfigMap campaign_defaults(CampaignKind k) {
  ConfigMap d{{"domain", "channel"}, {"T", "1"}, {"dt", "1e-3"}, {"integrator", "rk4"}, {"rtol", "1e-10"},
              {"atol", "1e-12"},     {"seed", "42"}, {"samples", "100"}};
  switch (k) {
    case CampaignKind::NoslipLimit:
      d["zeta"] = "1e-1,1e-2,1e-3,1e-4";
      d["mu"] = "0.1";
      break;
    case CampaignKind::CompleteSlipLimit:
      d["zeta"] = "1,10,100,1000";
      d["mu"] = "0.05";
      break;
    case CampaignKind::InviscidLimit:
      d["zeta"] = "1";
      d["mu"] = "1e-1,1e-2,1e-3";
      break;
    case CampaignKind::SpectrumReport:
    case CampaignKind::IdentitySuite:
      d["zeta"] = "1";
      d["mu"] = "0.05";
      break;
  }
  return d;
}

Campaign make_campaign(const ConfigMap& cfg) {
  static const char* known[] = {"campaign", "domain", "zeta", "mu", "cutoff_kappa", "cutoff_n", "T", "dt",
                                "integrator", "rtol", "atol", "seed", "samples", "out"};
  for (const auto& [k, v] : cfg)
    if (std::find(std::begin(known), std::end(known), k) == std::end(known))
      throw ConfigError("unknown config key '" + k + "'");
  auto it = cfg.find("campaign");
  if (it == cfg.end()) throw ConfigError("config lacks 'campaign'");
  Campaign c;
  c.kind = campaign_from_name(it->second);
  ConfigMap m = campaign_defaults(c.kind);
  for (const auto& [k, v] : cfg) m[k] = v;

  if (m["domain"] == "channel") c.domain = Domain::channel();
  else if (m["domain"] == "ball") c.domain = Domain::ball();
  else throw ConfigError("unknown domain '" + m["domain"] + "'");
  bool ball = c.domain.kind == DomainKind::Ball;
  c.cutoffs = default_cutoffs(c.domain);
  if (m.count("cutoff_kappa")) c.cutoffs.kappa = static_cast<int>(parse_integer("cutoff_kappa", m["cutoff_kappa"]));
  if (m.count("cutoff_n")) c.cutoffs.n = static_cast<int>(parse_integer("cutoff_n", m["cutoff_n"]));
  if (c.cutoffs.kappa < (ball ? 1 : 0) || c.cutoffs.n < 1) throw ConfigError("cutoffs out of range");

  for (const auto& s : split_list(m["zeta"])) {
    auto z = SlipLength::parse(s);
    if (!z.is_infinite() && !(z.value() > 0)) throw ConfigError("zeta must be positive");
    c.zetas.push_back(z);
  }
  for (const auto& s : split_list(m["mu"])) {
    double mu = parse_number("mu", s);
    if (mu < 0) throw ConfigError("mu must be nonnegative");
    c.mus.push_back(mu);
  }
  c.T = parse_number("T", m["T"]);
  c.dt = parse_number("dt", m["dt"]);
  c.rtol = parse_number("rtol", m["rtol"]);
  c.atol = parse_number("atol", m["atol"]);
  c.integrator = integrator_from_name(m["integrator"]);
  long seed = parse_integer("seed", m["seed"]);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.samples = static_cast<int>(parse_integer("samples", m["samples"]));
  c.out = m.count("out") ? m["out"] : "";
  if (!(c.T > 0)) throw ConfigError("T must be positive");
  if (!(c.dt > 0)) throw ConfigError("dt must be positive");
  if (!(c.rtol > 0) || !(c.atol > 0)) throw ConfigError("tolerances must be positive");
  if (c.samples < 1) throw ConfigError("samples must be positive");
  if (c.zetas.empty()) throw ConfigError("empty zeta sweep");
  if (c.mus.empty()) throw ConfigError("empty mu sweep");

  switch (c.kind) {
    case CampaignKind::NoslipLimit:
      for (const auto& z : c.zetas)
        if (z.is_infinite()) throw ConfigError("noslip_limit needs finite zeta values");
      if (c.mus.size() != 1 || !(c.mus[0] > 0)) throw ConfigError("noslip_limit needs one positive mu");
      for (size_t i = 1; i < c.zetas.size(); ++i)
        if (!(c.zetas[i].value() < c.zetas[i - 1].value())) throw ConfigError("noslip_limit zeta list must decrease");
      break;
    case CampaignKind::CompleteSlipLimit: {
      std::vector<SlipLength> fin;
      for (const auto& z : c.zetas)
        if (!z.is_infinite()) fin.push_back(z);
      if (fin.empty()) throw ConfigError("complete_slip_limit needs finite zeta values");
      c.zetas = fin;
      for (size_t i = 1; i < c.zetas.size(); ++i)
        if (!(c.zetas[i].value() > c.zetas[i - 1].value()))
          throw ConfigError("complete_slip_limit zeta list must increase");
      if (c.mus.size() != 1) throw ConfigError("complete_slip_limit takes one mu");
      if (c.integrator == Integrator::Adaptive)
        throw ConfigError("complete_slip_limit compares runs on a common fixed step");
      break;
    }
    case CampaignKind::InviscidLimit:
      if (c.zetas.size() != 1) throw ConfigError("inviscid_limit takes one zeta");
      if (c.mus.size() < 2) throw ConfigError("inviscid_limit needs at least two mu values");
      for (size_t i = 0; i < c.mus.size(); ++i)
        if (!(c.mus[i] > 0) || (i > 0 && !(c.mus[i] < c.mus[i - 1])))
          throw ConfigError("inviscid_limit needs a decreasing list of positive mu values");
      break;
    case CampaignKind::SpectrumReport:
    case CampaignKind::IdentitySuite:
      break;
  }
  return c;
}

std::string CampaignReport::json() const {
  nlohmann::json j;
  j["campaign"] = campaign;
  j["params"] = params;
  j["metrics"] = metrics;
  j["pass"] = pass;
  return j.dump(2);
}

EulerReference euler_reference(const Domain& d) {
  if (d.kind == DomainKind::Channel)
    return {"steady_shear", [](const Vec3& x) { return Vec3{std::cos(M_PI * x[2]) + 0.5 * x[2], 0.0, 0.0}; },
            [](const Vec3&) { return 0.0; }};
  return {"rigid_rotation", [](const Vec3& x) { return cross(Vec3{0, 0, 1}, x); },
          [](const Vec3& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); }};
}

double euler_residual(const EulerReference& e, const Domain& d) {
  const double h = 1e-5;
  double res = 0;
  auto grid = volume_grid(d, d.kind == DomainKind::Channel ? QuadratureSpec{6, 6, 6} : QuadratureSpec{5, 5, 6});
  for (const auto& n : grid) {
    Vec3 u = e.u(n.x), adv{0, 0, 0}, gp{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
      Vec3 xp = n.x, xm = n.x;
      xp[a] += h;
      xm[a] -= h;
      Vec3 du = (1 / (2 * h)) * (e.u(xp) - e.u(xm));
      adv = adv + u[a] * du;
      gp[a] = (e.p(xp) - e.p(xm)) / (2 * h);
    }
    res = std::max(res, norm(adv + gp));
  }
  SurfaceGrid sg(d, 8, 8);
  for (int i = 0; i < sg.size(); ++i) res = std::max(res, std::abs(dot(e.u(sg.node(i).frame.x), sg.node(i).frame.nu)));
  return res;
}

std::function<Vec3(const Vec3&)> reference_initial_field(const Domain& d) {
  if (d.kind == DomainKind::Channel)
    // shear plus the horizontal vortex (-dphi/dy, dphi/dx, 0) of phi = cos x cos y (1 + z) / 2
    return [](const Vec3& x) {
      double s = 0.5 * (1 + x[2]);
      return Vec3{std::cos(M_PI * x[2]) + s * std::cos(x[0]) * std::sin(x[1]),
                  -s * std::sin(x[0]) * std::cos(x[1]), 0.0};
    };
  double R = d.R;
  return [R](const Vec3& x) {
    double g = 0.5 * (1 - dot(x, x) / (R * R));
    return cross(Vec3{0, 0, 1}, x) + g * cross(Vec3{1, 0, 0}, x);
  };
}

std::vector<double> project_field(const EigenBasis& b, const std::function<Vec3(const Vec3&)>& u,
                                  const QuadratureSpec& q) {
  FieldFn f = [&u](const Vec3& x, VecJet<1>& j) {
    Vec3 v = u(x);
    for (int i = 0; i < 3; ++i) j[i] = Jet<1>(v[i]);
  };
  return project_PN(f, b, b.size(), q);
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  RateFit f;
  int n = static_cast<int>(x.size());
  if (n < 2) return f;
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  double mx = sx / n, my = sy / n, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    double a = std::log(x[i]) - mx, b = std::log(y[i]) - my;
    sxx += a * a;
    sxy += a * b;
    syy += b * b;
  }
  f.slope = sxy / sxx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

CampaignReport run_noslip_limit(const Campaign& c) {
  auto rep = start_report(c);
  double mu = c.mus[0];
  int n = static_cast<int>(c.zetas.size());
  std::vector<double> value(n), bound(n), resid(n);
  auto u0 = reference_initial_field(c.domain);
  run_jobs(n, [&](int i) {
    auto b = cached_basis(c.domain, c.zetas[i], c.cutoffs);
    auto c0 = project_field(b, u0, galerkin_quadrature(b));
    double s = 1 / std::sqrt(norm2v(c0));
    for (double& v : c0) v *= s;
    double dt = stable_dt(b, mu, c.dt, c.T);
    auto r = simulate(b, c, mu, dt, c0, "noslip_zeta" + fmt_tag(c.zetas[i].value()));
    std::vector<double> t, bpi;
    for (const auto& row : r.led.rows) {
      t.push_back(row.t);
      bpi.push_back(row.boundary_pi);
    }
    double pi_int = cumulative_integral(t, bpi).back();
    value[i] = r.led.boundary_time_integral;
    bound[i] = c.zetas[i].value() / (2 * mu) * (norm2v(c0) + 2 * mu * pi_int);
    resid[i] = r.led.max_identity_residual;
  });
  bool ok = strictly_decreasing(value);
  for (int i = 0; i < n; ++i) {
    bool within = value[i] <= bound[i] * (1 + 1e-3);
    ok = ok && within;
    rep.metrics["runs"].push_back({{"zeta", c.zetas[i].str()},
                                   {"boundary_time_integral", value[i]},
                                   {"bound", bound[i]},
                                   {"within_bound", within},
                                   {"identity_residual", resid[i]}});
  }
  rep.metrics["decreasing"] = strictly_decreasing(value);
  rep.pass = ok;
  finish_report(c, rep);
  return rep;
}

CampaignReport run_inviscid_limit(const Campaign& c) {
  auto rep = start_report(c);
  auto euler = euler_reference(c.domain);
  auto b = cached_basis(c.domain, c.zetas[0], c.cutoffs);
  auto q = galerkin_quadrature(b);
  auto cE = project_field(b, euler.u, q);
  // mu = 0 is the exactness check of the reference for the truncated system.
  std::vector<double> mus = c.mus;
  mus.push_back(0.0);
  int n = static_cast<int>(mus.size());
  std::vector<double> sup_err(n), grad_err(n);
  run_jobs(n, [&](int i) {
    double dt = stable_dt(b, mus[i], c.dt, c.T);
    auto r = simulate(b, c, mus[i], dt, cE, "inviscid_mu" + fmt_tag(mus[i]));
    const auto& tr = r.tr;
    std::vector<double> g(tr.t.size());
    double sup = 0;
    for (size_t s = 0; s < tr.t.size(); ++s) {
      Eigen::VectorXd e(b.size());
      for (int k = 0; k < b.size(); ++k) e[k] = tr.c[s][k] - cE[k];
      sup = std::max(sup, e.norm());
      g[s] = e.dot(r.Q.grad * e);
    }
    sup_err[i] = sup;
    grad_err[i] = cumulative_integral(tr.t, g).back();
  });
  std::vector<double> e(sup_err.begin(), sup_err.end() - 1);
  auto fit = fit_rate(c.mus, e);
  bool monotone = strictly_decreasing(e);
  for (int i = 0; i + 1 < n; ++i)
    rep.metrics["runs"].push_back({{"mu", mus[i]}, {"sup_l2_error", sup_err[i]}, {"grad_l2_error", grad_err[i]}});
  rep.metrics["reference"] = euler.name;
  rep.metrics["euler_residual"] = euler_residual(euler, c.domain);
  rep.metrics["mu0_sup_l2_error"] = sup_err.back();
  rep.metrics["alpha"] = fit.slope;
  rep.metrics["r2"] = fit.r2;
  rep.metrics["fit_range"] = {c.mus.back(), c.mus.front()};
  rep.metrics["theorem_rate"] = 0.5;
  rep.metrics["monotone"] = monotone;
  rep.pass = fit.slope >= 0.45 && monotone;
  finish_report(c, rep);
  return rep;
}

CampaignReport run_complete_slip_limit(const Campaign& c) {
  auto rep = start_report(c);
  double mu = c.mus[0];
  std::vector<SlipLength> zetas = c.zetas;
  zetas.push_back(SlipLength::infinite());
  int n = static_cast<int>(zetas.size());
  std::vector<EigenBasis> bases(n);
  run_jobs(n, [&](int i) { bases[i] = cached_basis(c.domain, zetas[i], c.cutoffs); });
  int N = bases.back().size();
  for (const auto& b : bases)
    if (b.size() != N) throw NumericError("basis sizes differ across the zeta sweep");
  double dt = c.dt;
  for (const auto& b : bases) dt = std::min(dt, stable_dt(b, mu, c.dt, c.T));
  dt = stable_dt(bases.back(), mu, dt, c.T);

  auto q = galerkin_quadrature(bases.back());
  auto nodes = volume_grid(c.domain, q);
  int nv = static_cast<int>(nodes.size());
  auto u0 = reference_initial_field(c.domain);
  std::vector<Eigen::MatrixXd> values(n);
  std::vector<Trajectory> trs(n);
  run_jobs(n, [&](int i) {
    const auto& b = bases[i];
    Eigen::MatrixXd V(3 * nv, N);
    for (int p = 0; p < nv; ++p) {
      double sw = std::sqrt(nodes[p].w);
      for (int k = 0; k < N; ++k) {
        VecJet<0> a;
        eval_mode<0>(b.domain, b.modes[k], nodes[p].x, a);
        for (int d = 0; d < 3; ++d) V(3 * p + d, k) = sw * a[d].value();
      }
    }
    values[i] = V;
    auto c0 = project_field(b, u0, q);
    double s = 1 / std::sqrt(norm2v(c0));
    for (double& v : c0) v *= s;
    std::string tag = "complete_slip_zeta" + (zetas[i].is_infinite() ? std::string("inf") : fmt_tag(zetas[i].value()));
    trs[i] = simulate(b, c, mu, dt, c0, tag).tr;
  });

  const auto& tinf = trs.back();
  auto field = [&](int i, size_t s) {
    Eigen::Map<const Eigen::VectorXd> cv(trs[i].c[s].data(), N);
    return Eigen::VectorXd(values[i] * cv);
  };
  std::vector<double> dist(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    if (trs[i].t.size() != tinf.t.size()) throw NumericError("time grids differ across the zeta sweep");
    std::vector<double> d2(tinf.t.size());
    for (size_t s = 0; s < tinf.t.size(); ++s) d2[s] = (field(i, s) - field(n - 1, s)).squaredNorm();
    dist[i] = std::sqrt(std::max(0.0, cumulative_integral(tinf.t, d2).back()));
  }
  // Sorted eigenvalues increase with zeta to the complete-slip values.
  bool eig_monotone = true;
  double eig_gap = 0;
  for (int k = 0; k < N; ++k) {
    double lim = bases.back().modes[k].lambda, prev = INFINITY;
    for (int i = 0; i + 1 < n; ++i) {
      double gap = std::abs(bases[i].modes[k].lambda - lim);
      if (gap > prev + 1e-12 * std::max(1.0, std::abs(lim))) eig_monotone = false;
      prev = gap;
    }
    eig_gap = std::max(eig_gap, std::abs(bases[n - 2].modes[k].lambda - lim));
  }
  bool decreasing = strictly_decreasing(dist);
  for (int i = 0; i + 1 < n; ++i)
    rep.metrics["runs"].push_back({{"zeta", zetas[i].str()}, {"l2_distance_to_complete_slip", dist[i]}});
  rep.metrics["dt"] = dt;
  rep.metrics["decreasing"] = decreasing;
  rep.metrics["eigenvalues_monotone"] = eig_monotone;
  rep.metrics["eigenvalue_gap_at_largest_zeta"] = eig_gap;
  rep.pass = decreasing && eig_monotone;
  finish_report(c, rep);
  return rep;
}

CampaignReport run_spectrum_report(const Campaign& c) {
  auto rep = start_report(c);
  int n = static_cast<int>(c.zetas.size());
  std::vector<nlohmann::json> runs(n);
  std::vector<char> ok(n, 0);
  run_jobs(n, [&](int i) {
    auto b = cached_basis(c.domain, c.zetas[i], c.cutoffs);
    auto br = validate_basis(b, validation_quadrature(b));
    double eig = 0, nav = 0;
    bool modes_ok = true;
    for (const auto& m : br.modes) {
      eig = std::max(eig, m.eigen_residual);
      nav = std::max(nav, m.navier_residual);
      modes_ok = modes_ok && m.ok(1e-8, 1e-7);
    }
    // The sign criterion applies where the Dirichlet form is coercive:
    // channel always, ball when zeta <= R.
    bool sign_applies = c.domain.kind == DomainKind::Channel || c.zetas[i].value() <= c.domain.R;
    bool sign_ok = !sign_applies || br.max_lambda <= 1e-10;
    auto q = galerkin_quadrature(b);
    double form_defect = 0, max_neg_form = -INFINITY;
    for (int k = 0; k < b.size(); ++k) {
      std::vector<double> e(b.size(), 0.0);
      e[k] = 1;
      auto f = mode_sum(b, e);
      double E = dirichlet_form(f, f, b.domain, b.zeta, q);
      form_defect = std::max(form_defect, rel_residual(E, -b.modes[k].lambda));
      max_neg_form = std::max(max_neg_form, -E);
    }
    bool hat_ok = b.lambda_hat >= 0 && b.lambda_hat >= max_neg_form - 1e-8;
    bool pass = modes_ok && br.gram_defect <= 1e-9 && sign_ok && form_defect <= 1e-8 && hat_ok;
    ok[i] = pass;
    nlohmann::json j;
    j["zeta"] = c.zetas[i].str();
    j["modes"] = b.size();
    j["max_eigen_residual"] = eig;
    j["max_navier_residual"] = nav;
    j["gram_defect"] = br.gram_defect;
    j["max_lambda"] = br.max_lambda;
    j["sign_criterion_applies"] = sign_applies;
    j["sign_ok"] = sign_ok;
    j["lambda_hat"] = b.lambda_hat;
    j["dirichlet_form_defect"] = form_defect;
    j["lambda_hat_consistent"] = hat_ok;
    for (const auto& m : b.modes) j["lambda"].push_back(m.lambda);
    j["pass"] = pass;
    runs[i] = j;
  });
  rep.pass = true;
  for (int i = 0; i < n; ++i) {
    rep.metrics["runs"].push_back(runs[i]);
    rep.pass = rep.pass && ok[i];
  }
  finish_report(c, rep);
  return rep;
}

CampaignReport run_identity_suite(const Campaign& c) {
  auto rep = start_report(c);
  rep.pass = true;
  for (const auto& z : c.zetas) {
    auto b = cached_basis(c.domain, z, c.cutoffs);
    std::vector<InequalityReport> fits;
    auto ir = identity_suite(b, c.samples, c.seed, &fits);
    bool stable = true;
    nlohmann::json fj;
    for (const auto& f : fits) {
      stable = stable && f.stable;
      fj[f.inequality_id] = {{"constant", f.fitted_constant},
                             {"constant_refined", f.fitted_constant_refined},
                             {"stable", f.stable},
                             {"rejected", f.rejected.size()}};
    }
    // E(P_N u) nondecreasing in N for every sample.
    bool monotone = true;
    for (const auto& s : make_samples(b, c.samples, c.seed)) {
      auto e = truncation_energies(b, s.coeffs);
      for (size_t k = 1; k < e.size(); ++k)
        if (e[k] < e[k - 1] - 1e-12 * std::max(1.0, std::abs(e[k]))) monotone = false;
    }
    std::string tag = "identity_zeta" + (z.is_infinite() ? std::string("inf") : fmt_tag(z.value()));
    if (!c.out.empty()) {
      write_text(out_path(c, tag + "_identities.json"), ir.json());
      nlohmann::json all = nlohmann::json::array();
      for (const auto& f : fits) all.push_back(nlohmann::json::parse(f.json()));
      write_text(out_path(c, tag + "_inequalities.json"), all.dump(2));
    }
    double worst = 0;
    for (const auto& [k, v] : ir.fine_max) worst = std::max(worst, v);
    bool pass = ir.pass && stable && monotone;
    rep.metrics["runs"].push_back({{"zeta", z.str()},
                                   {"identities_pass", ir.pass},
                                   {"max_fine_residual", worst},
                                   {"resolution_insufficient", ir.resolution_insufficient},
                                   {"inequalities", fj},
                                   {"inequalities_stable", stable},
                                   {"truncation_energy_monotone", monotone},
                                   {"pass", pass}});
    rep.pass = rep.pass && pass;
  }
  finish_report(c, rep);
  return rep;
}

Cutoffs default_cutoffs(const Domain& d) { return d.kind == DomainKind::Ball ? Cutoffs{2, 2} : Cutoffs{1, 3}; }

std::vector<double> random_initial_data(const EigenBasis& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> c(b.size());
  for (int k = 0; k < b.size(); ++k) c[k] = g(rng) / (1 + std::abs(b.modes[k].lambda));
  double s = 1 / std::sqrt(norm2v(c));
  for (double& v : c) v *= s;
  return c;
}

CampaignReport run_simulation(const EigenBasis& b, const RunRequest& r) {
  Campaign c;
  c.domain = b.domain;
  c.zetas = {b.zeta};
  c.mus = {r.mu};
  c.cutoffs = b.cutoffs;
  c.T = r.T;
  c.dt = r.dt;
  c.integrator = r.integrator;
  c.rtol = r.rtol;
  c.atol = r.atol;
  c.seed = r.seed;
  c.out = r.out;
  if (!(r.T > 0)) throw ConfigError("T must be positive");
  if (!(r.dt > 0)) throw ConfigError("dt must be positive");
  if (!(r.mu >= 0)) throw ConfigError("mu must be nonnegative");
  CampaignReport rep = start_report(c);
  rep.campaign = "run";
  rep.params.erase("samples");
  auto c0 = random_initial_data(b, r.seed);
  double dt = r.integrator == Integrator::Adaptive ? r.dt : stable_dt(b, r.mu, r.dt, r.T);
  auto out = simulate(b, c, r.mu, dt, c0, "run");
  const auto& rows = out.led.rows;
  bool completed = out.tr.status == RunStatus::Completed;
  rep.metrics = {{"modes", b.size()},
                 {"dt", out.tr.dt},
                 {"steps", out.tr.t.size() - 1},
                 {"status", completed ? "completed" : "blowup"},
                 {"t_final", out.tr.t.back()},
                 {"kinetic_initial", rows.front().kinetic},
                 {"kinetic_final", rows.back().kinetic},
                 {"max_identity_residual", out.led.max_identity_residual},
                 {"integrated_gap", out.led.integrated_gap},
                 {"boundary_time_integral", out.led.boundary_time_integral}};
  rep.pass = completed && out.led.max_identity_residual <= 1e-6;
  finish_report(c, rep);
  return rep;
}

CampaignReport run_campaign(const Campaign& c) {
  switch (c.kind) {
    case CampaignKind::NoslipLimit: return run_noslip_limit(c);
    case CampaignKind::CompleteSlipLimit: return run_complete_slip_limit(c);
    case CampaignKind::InviscidLimit: return run_inviscid_limit(c);
    case CampaignKind::SpectrumReport: return run_spectrum_report(c);
    case CampaignKind::IdentitySuite: return run_identity_suite(c);
  }
  throw ConfigError("unknown campaign");
}

}  // namespace slipstokes
