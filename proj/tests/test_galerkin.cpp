#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "galerkin.hpp"

using namespace slipstokes;

namespace {

struct Setup {
  EigenBasis b;
  ConvectionTensor B;
  QuadraticForms Q;
  QuadratureSpec q;
};

const Setup& channel() {
  static const Setup s = [] {
    Setup r;
    r.b = build_basis(Domain::channel(), SlipLength::finite(1.0), {1, 2});
    r.q = galerkin_quadrature(r.b);
    r.B = assemble_convection_tensor(r.b, r.q);
    r.Q = assemble_quadratic_forms(r.b, r.q);
    return r;
  }();
  return s;
}

std::vector<double> random_coeffs(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> c(n);
  for (double& v : c) v = g(rng);
  return c;
}

double norm2(const std::vector<double>& c) {
  double s = 0;
  for (double v : c) s += v * v;
  return s;
}

std::vector<double> smooth_start(const EigenBasis& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto c = random_coeffs(b.size(), rng);
  for (int k = 0; k < b.size(); ++k) c[k] /= 1 + std::abs(b.modes[k].lambda);
  double s = std::sqrt(norm2(c));
  for (double& v : c) v /= s;
  return c;
}

SimConfig config(std::vector<double> c0, double mu, double T, double dt) {
  SimConfig cfg;
  cfg.c0 = std::move(c0);
  cfg.mu = mu;
  cfg.T = T;
  cfg.dt = dt;
  return cfg;
}

std::vector<std::string> csv_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("convection tensor structure") {
  const auto& s = channel();
  const auto& b = s.b;
  CHECK(s.B.skew_defect <= 1e-10 * std::max(1.0, s.B.scale));
  std::vector<int> shear;
  for (int k = 0; k < b.size(); ++k)
    if (b.modes[k].family == Family::Shear) shear.push_back(k);
  REQUIRE(shear.size() >= 2);
  for (int k : shear)
    for (int i : shear)
      for (int j : shear) CHECK(s.B.get(k, i, j) == 0.0);
  for (int k = 0; k < b.size(); ++k)
    for (int i = 0; i < b.size(); ++i) CHECK(s.B.get(k, i, k) == 0.0);
  int forbidden = 0;
  for (const auto& e : s.B.entries) {
    if (!selection_allowed(b, e.k, e.i, e.j)) ++forbidden;
    CHECK(std::abs(e.v + s.B.get(e.j, e.i, e.k)) <= 1e-10 * std::max(1.0, s.B.scale));
  }
  CHECK(forbidden == 0);
  CHECK(s.B.nnz() > 0);
  CHECK(s.B.row_start.size() == static_cast<size_t>(b.size() + 1));
}

TEST_CASE("tensor assembly is deterministic") {
  const auto& s = channel();
  auto B2 = assemble_convection_tensor(s.b, s.q);
  REQUIRE(B2.nnz() == s.B.nnz());
  for (int e = 0; e < B2.nnz(); ++e) CHECK(B2.entries[e].v == s.B.entries[e].v);
}

TEST_CASE("Galerkin right-hand side") {
  const auto& s = channel();
  auto lambda = eigenvalues(s.b);
  const int N = s.b.size();
  std::vector<double> out;
  SUBCASE("zero state") {
    galerkin_rhs(std::vector<double>(N, 0.0), s.B, lambda, 0.3, out);
    for (double v : out) CHECK(v == 0.0);
  }
  SUBCASE("single mode decays linearly") {
    for (int k = 0; k < N; k += 7) {
      std::vector<double> c(N, 0.0);
      c[k] = 1.5;
      galerkin_rhs(c, s.B, lambda, 0.3, out);
      CHECK(out[k] == doctest::Approx(0.3 * lambda[k] * 1.5).epsilon(1e-14));
    }
  }
  SUBCASE("energy conservation of the nonlinear term") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
      auto c = random_coeffs(N, rng);
      double n3 = std::pow(norm2(c), 1.5);
      CHECK(std::abs(nonlinear_contraction(c, s.B)) <= 1e-10 * n3);
      galerkin_rhs(c, s.B, lambda, 0.0, out);
      double dot = 0;
      for (int k = 0; k < N; ++k) dot += c[k] * out[k];
      CHECK(std::abs(dot) <= 1e-10 * n3 * std::max(1.0, s.B.scale));
    }
  }
}

TEST_CASE("single-mode solutions are exponentials and the monitor has its closed form") {
  const auto& s = channel();
  const int N = s.b.size();
  int k = -1;
  for (int i = 0; i < N; ++i)
    if (s.b.modes[i].family == Family::Shear) k = i;
  REQUIRE(k >= 0);
  const double mu = 0.2, lam = s.b.modes[k].lambda;
  std::vector<double> c0(N, 0.0);
  c0[k] = 1.0;
  for (Integrator integ : {Integrator::RK4, Integrator::Exponential, Integrator::Adaptive}) {
    auto cfg = config(c0, mu, 1.0, 1e-3);
    cfg.integrator = integ;
    auto tr = integrate(s.b, s.B, cfg);
    CAPTURE(integrator_name(integ));
    REQUIRE(tr.status == RunStatus::Completed);
    CHECK(tr.t.back() == doctest::Approx(1.0).epsilon(1e-14));
    double err = 0;
    for (size_t i = 0; i < tr.t.size(); ++i) err = std::max(err, std::abs(tr.c[i][k] - std::exp(mu * lam * tr.t[i])));
    CHECK(err <= 1e-9);
  }
  auto tr = integrate(s.b, s.B, config(c0, mu, 1.0, 1e-3));
  // Shear modes carry no pressure, so ||Lap a||^2 = lambda^2.
  CHECK(s.Q.lap(k, k) == doctest::Approx(lam * lam).epsilon(1e-9));
  auto m = strong_monitor(s.b, s.B, s.Q, tr, mu);
  for (size_t i = 0; i < tr.t.size(); i += 100) {
    double c2 = std::exp(2 * mu * lam * tr.t[i]);
    CHECK(m.F[i] == doctest::Approx((1 + lam * lam + mu * mu * lam * lam) * c2).epsilon(1e-8));
    if (i) CHECK(m.F[i] < m.F[i - 100]);
  }
  auto led = energy_ledger(s.b, s.Q, tr, mu);
  CHECK(led.max_identity_residual <= 1e-8);
  CHECK(led.integrated_gap <= 1e-8);
  for (const auto& row : led.rows) CHECK(row.boundary_pi == doctest::Approx(0.0));
}

TEST_CASE("inviscid Galerkin flow conserves kinetic energy") {
  const auto& s = channel();
  auto tr = integrate(s.b, s.B, config(smooth_start(s.b, 3), 0.0, 1.0, 1e-3));
  REQUIRE(tr.status == RunStatus::Completed);
  double e0 = norm2(tr.c.front()), dev = 0;
  for (const auto& c : tr.c) dev = std::max(dev, std::abs(norm2(c) - e0));
  CHECK(dev <= 1e-8);
  auto led = energy_ledger(s.b, s.Q, tr, 0.0);
  CHECK(led.max_identity_residual <= 1e-8);
}

TEST_CASE("energy ledger, refinement order and the weak form") {
  const auto& s = channel();
  const double mu = 0.1;
  auto c0 = smooth_start(s.b, 9);
  auto tr = integrate(s.b, s.B, config(c0, mu, 1.0, 2e-3));
  auto led = energy_ledger(s.b, s.Q, tr, mu);
  CHECK(led.max_identity_residual <= 1e-6);
  CHECK(led.integrated_gap <= 1e-6);
  // Projected data loses nothing: K(T) + dissipation equals K(0).
  CHECK(led.rows.front().kinetic == doctest::Approx(norm2(c0)).epsilon(1e-14));
  for (const auto& row : led.rows) CHECK(row.kinetic <= norm2(c0) * (1 + 1e-12));

  auto tr_half = integrate(s.b, s.B, config(c0, mu, 1.0, 1e-3));
  double drift = 0, drift_half = 0;
  // Against a fine reference, halving dt cuts the RK4 error by about 16.
  auto ref = integrate(s.b, s.B, config(c0, mu, 1.0, 1.25e-4));
  for (int k = 0; k < s.b.size(); ++k) {
    drift = std::max(drift, std::abs(tr.c.back()[k] - ref.c.back()[k]));
    drift_half = std::max(drift_half, std::abs(tr_half.c.back()[k] - ref.c.back()[k]));
  }
  CHECK(drift / drift_half == doctest::Approx(16.0).epsilon(0.25));
  auto led_half = energy_ledger(s.b, s.Q, tr_half, mu);
  CHECK(led_half.max_identity_residual <= led.max_identity_residual);

  std::vector<std::vector<double>> zero;
  CHECK(weak_form_residual(s.b, s.Q, tr, mu, zero, s.q) == 0.0);
  for (int m : {0, 5, 17}) {
    std::vector<std::vector<double>> d(tr.t.size(), std::vector<double>(s.b.size(), 0.0));
    for (auto& row : d) row[m] = 1.0;
    CHECK(weak_form_residual(s.b, s.Q, tr, mu, d, s.q) <= 1e-6);
  }
  // phi = u^N: the weak form reduces to the integrated energy identity.
  CHECK(weak_form_residual(s.b, s.Q, tr, mu, tr.c, s.q) <= std::max(1e-6, 10 * led.integrated_gap));
}

TEST_CASE("trajectories are invariant under reordering degenerate modes") {
  const auto& s = channel();
  const int N = s.b.size();
  // Reverse every block of equal eigenvalues.
  std::vector<int> perm(N);
  for (int i = 0; i < N;) {
    int j = i;
    while (j < N && std::abs(s.b.modes[j].lambda - s.b.modes[i].lambda) <= 1e-12 * std::abs(s.b.modes[i].lambda)) ++j;
    for (int k = i; k < j; ++k) perm[k] = i + j - 1 - k;
    i = j;
  }
  REQUIRE(perm != [&] {
    std::vector<int> id(N);
    for (int i = 0; i < N; ++i) id[i] = i;
    return id;
  }());
  EigenBasis pb = s.b;
  for (int k = 0; k < N; ++k) pb.modes[k] = s.b.modes[perm[k]];
  auto pB = assemble_convection_tensor(pb, s.q);
  auto c0 = smooth_start(s.b, 5);
  std::vector<double> pc0(N);
  for (int k = 0; k < N; ++k) pc0[k] = c0[perm[k]];
  auto tr = integrate(s.b, s.B, config(c0, 0.05, 0.5, 1e-3));
  auto ptr = integrate(pb, pB, config(pc0, 0.05, 0.5, 1e-3));
  REQUIRE(tr.t.size() == ptr.t.size());
  double diff = 0;
  for (int k = 0; k < N; ++k) diff = std::max(diff, std::abs(ptr.c.back()[k] - tr.c.back()[perm[k]]));
  CHECK(diff <= 1e-9);
  // Same physical field at sample points.
  double fdiff = 0;
  for (Vec3 x : {Vec3{0.3, 1.1, 0.2}, Vec3{4.0, 2.5, 0.9}, Vec3{6.0, 0.1, 0.5}}) {
    Vec3 u{}, pu{};
    for (int k = 0; k < N; ++k) {
      VecJet<0> a, pa;
      eval_mode<0>(s.b.domain, s.b.modes[k], x, a);
      eval_mode<0>(pb.domain, pb.modes[k], x, pa);
      for (int i = 0; i < 3; ++i) {
        u[i] += tr.c.back()[k] * a[i].value();
        pu[i] += ptr.c.back()[k] * pa[i].value();
      }
    }
    for (int i = 0; i < 3; ++i) fdiff = std::max(fdiff, std::abs(u[i] - pu[i]));
  }
  CHECK(fdiff <= 1e-9);
}

TEST_CASE("Riccati comparison") {
  CHECK(riccati_solution(0.7, 0.0, 2.0, 1.5) == doctest::Approx(2.0 * std::exp(0.7 * 1.5)).epsilon(1e-14));
  CHECK(std::isinf(riccati_blowup_time(0.7, 0.0, 2.0)));
  double prev = std::numeric_limits<double>::infinity();
  for (double rho0 : {0.1, 0.5, 1.0, 4.0, 20.0}) {
    double T = riccati_blowup_time(1.0, 1.0, rho0);
    CHECK(std::isfinite(T));
    CHECK(T < prev);
    prev = T;
    // Closed form for M1 = M2 = M: T* = log(1 + 1/rho0) / M.
    CHECK(T == doctest::Approx(std::log1p(1 / rho0)).epsilon(1e-12));
    CHECK(riccati_solution(1.0, 1.0, rho0, 0.5 * T) > rho0);
  }
}

TEST_CASE("monitor on a nonlinear run stays under its comparison bound") {
  const auto& s = channel();
  auto tr = integrate(s.b, s.B, config(smooth_start(s.b, 21), 0.05, 0.5, 1e-3));
  auto m = strong_monitor(s.b, s.B, s.Q, tr, 0.05);
  CHECK(m.bounded);
  CHECK(m.rho0 == m.F[0]);
  CHECK(m.M >= 0);
  // dF matches a centered difference of F.
  for (size_t i = 1; i + 1 < tr.t.size(); i += 50) {
    double fd = (m.F[i + 1] - m.F[i - 1]) / (tr.t[i + 1] - tr.t[i - 1]);
    CHECK(m.dF[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("CSV output columns") {
  const auto& s = channel();
  auto tr = integrate(s.b, s.B, config(smooth_start(s.b, 1), 0.1, 0.01, 1e-3));
  auto led = energy_ledger(s.b, s.Q, tr, 0.1);
  attach_monitor(led, strong_monitor(s.b, s.B, s.Q, tr, 0.1));
  const std::string tp = "test_galerkin_trajectory.csv", lp = "test_galerkin_ledger.csv";
  write_trajectory_csv(tp, tr);
  write_ledger_csv(lp, led);
  auto t = csv_lines(tp), l = csv_lines(lp);
  REQUIRE(t.size() == tr.t.size() + 1);
  std::string header = "t";
  for (int k = 0; k < s.b.size(); ++k) header += ",c_" + std::to_string(k);
  CHECK(t[0] == header);
  CHECK(l[0] == "t,kinetic,grad_norm,boundary_l2,boundary_pi,identity_residual,F,rho");
  CHECK(l.size() == led.rows.size() + 1);
  std::remove(tp.c_str());
  std::remove(lp.c_str());
}

TEST_CASE("configuration checks, stable steps and the blow-up guard") {
  const auto& s = channel();
  auto c0 = smooth_start(s.b, 2);
  CHECK_THROWS_AS(integrate(s.b, s.B, config(c0, 0.1, 0.0, 1e-3)), ConfigError);
  CHECK_THROWS_AS(integrate(s.b, s.B, config(c0, -0.1, 1.0, 1e-3)), ConfigError);
  CHECK_THROWS_AS(integrate(s.b, s.B, config({1.0}, 0.1, 1.0, 1e-3)), ConfigError);
  double lmax = 0;
  for (const auto& m : s.b.modes) lmax = std::max(lmax, std::abs(m.lambda));
  double dt = stable_dt(s.b, 5.0, 0.1, 1.0);
  CHECK(5.0 * lmax * dt <= 0.5 + 1e-12);
  double steps = 1.0 / dt;
  CHECK(steps == doctest::Approx(std::round(steps)).epsilon(1e-12));

  // A single mode given a positive eigenvalue grows like exp(mu lambda t); a
  // tight guard stops it.
  EigenBasis b = s.b;
  b.modes.resize(1);
  b.modes[0].lambda = 2.0;
  ConvectionTensor B;
  B.n = 1;
  B.row_start = {0, 0};
  std::vector<double> g0 = {1.0};
  auto cfg = config(g0, 1.0, 50.0, 1e-3);
  cfg.guard = 10.0;
  auto tr = integrate(b, B, cfg);
  CHECK(tr.status == RunStatus::Blowup);
  CHECK(tr.t.back() < 50.0);
  CHECK(norm2(tr.c.back()) > 10.0);
}
