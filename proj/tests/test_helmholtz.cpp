#include "doctest.h"

#include <random>

#include "helmholtz.hpp"

using namespace slipstokes;

namespace {

std::shared_ptr<const ChannelGrid> grid(int nx = 16, int ny = 16, int nz = 24) {
  return ChannelGrid::make(Domain::channel(), nx, ny, nz);
}

// Random smooth field: low trig modes times cubics in z, seeded.
std::function<Vec3(const Vec3&)> random_field(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::array<std::array<double, 12>, 3> a;
  for (auto& row : a)
    for (double& v : row) v = g(rng);
  return [a](const Vec3& x) {
    Vec3 u{};
    for (int c = 0; c < 3; ++c) {
      const auto& k = a[c];
      double z = x[2];
      u[c] = k[0] + k[1] * z + k[2] * z * z * z + (k[3] + k[4] * z) * std::cos(x[0]) +
             (k[5] + k[6] * z * z) * std::sin(x[1]) + k[7] * std::cos(x[0] + x[1]) * z +
             k[8] * std::sin(x[0] - x[1]) + k[9] * std::cos(2 * x[0]) * (1 - z) + k[10] * std::sin(2 * x[1]) * z +
             k[11] * std::cos(x[0]) * std::sin(x[1]) * z * z;
    }
    return u;
  };
}

double max_diff(const ChannelField& a, const ChannelField& b) {
  double m = 0;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < a.c[c].size(); ++i) m = std::max(m, std::abs(a.c[c][i] - b.c[c][i]));
  return m;
}

double max_abs_field(const ChannelField& a) {
  double m = 0;
  for (int c = 0; c < 3; ++c) m = std::max(m, max_abs(a.c[c]));
  return m;
}

ChannelField mode_field(std::shared_ptr<const ChannelGrid> g, const EigenBasis& b, const std::vector<double>& c) {
  return sample_field(g, [&](const Vec3& x) {
    Vec3 u{};
    for (size_t k = 0; k < c.size(); ++k) {
      if (c[k] == 0) continue;
      VecJet<0> a;
      eval_mode<0>(b.domain, b.modes[k], x, a);
      for (int i = 0; i < 3; ++i) u[i] += c[k] * a[i].value();
    }
    return u;
  });
}

}  // namespace

TEST_CASE("pure gradients project to zero") {
  auto g = grid();
  auto u = sample_field(g, [](const Vec3& x) {
    double e = std::exp(x[2]);
    return Vec3{std::cos(x[0]) * std::cos(x[1]) * e, -std::sin(x[0]) * std::sin(x[1]) * e,
                std::sin(x[0]) * std::cos(x[1]) * e};
  });
  auto h = helmholtz_decompose(u);
  CHECK(max_abs_field(h.pu) <= 1e-10);
}

TEST_CASE("vertical cosine field: closed-form potential and the projection triple") {
  // u = (0, 0, cos x): q = cos x sinh(z - 1/2) / cosh(1/2).
  auto g = grid();
  auto u = sample_field(g, [](const Vec3& x) { return Vec3{0, 0, std::cos(x[0])}; });
  auto h = helmholtz_decompose(u);
  double qerr = 0;
  for (int i = 0; i < g->size(); ++i) {
    Vec3 x = g->point(i);
    qerr = std::max(qerr, std::abs(h.q[i] - std::cos(x[0]) * std::sinh(x[2] - 0.5) / std::cosh(0.5)));
  }
  CHECK(qerr <= 1e-10);
  CHECK(max_normal_trace(h.pu) <= 1e-10);
  CHECK(max_diff(curl(h.pu), curl(u)) <= 1e-10);
  CHECK(max_abs(divergence(h.pu)) <= 1e-9);
}

TEST_CASE("projection triple, orthogonality and the curl-gradient identity on random fields") {
  auto g = grid();
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto u = sample_field(g, random_field(seed));
    auto h = helmholtz_decompose(u);
    CAPTURE(seed);
    double scale = std::max(1.0, max_abs_field(u));
    CHECK(max_diff(curl(h.pu), curl(u)) <= 1e-9 * scale);
    CHECK(max_abs(divergence(h.pu)) <= 1e-9 * scale);
    CHECK(max_normal_trace(h.pu) <= 1e-9 * scale);
    double n2 = inner(u, u);
    CHECK(std::abs(inner(h.pu, gradient(h.q, g))) <= 1e-10 * n2);
    // Flat walls: ||grad P u||^2 = ||curl u||^2.
    double g2 = 0;
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a) {
        auto d = g->derivative(h.pu.c[c], a);
        std::vector<double> sq(d.size());
        for (size_t i = 0; i < d.size(); ++i) sq[i] = d[i] * d[i];
        g2 += g->integrate(sq);
      }
    auto w = curl(u);
    CHECK(g2 == doctest::Approx(inner(w, w)).epsilon(1e-9));
    // Idempotence.
    auto h2 = helmholtz_decompose(h.pu);
    CHECK(max_diff(h2.pu, h.pu) <= 1e-9 * scale);
  }
}

TEST_CASE("fields already in the solenoidal tangent space are fixed") {
  auto g = grid();
  auto b = build_basis(Domain::channel(), SlipLength::finite(1.0), {1, 2});
  std::vector<double> c(b.size());
  for (int k = 0; k < b.size(); ++k) c[k] = std::cos(1.0 + k);
  auto u = mode_field(g, b, c);
  auto h = helmholtz_decompose(u);
  CHECK(max_diff(h.pu, u) <= 1e-10);
}

TEST_CASE("pressure Neumann problem") {
  auto g = grid();
  auto zeta = SlipLength::finite(0.5);
  SUBCASE("complete slip on flat walls gives zero pressure") {
    auto u = sample_field(g, random_field(3));
    for (int i = 0; i < g->size(); ++i) u.c[2][i] = 0;
    CHECK(max_abs(solve_pressure_neumann(u, SlipLength::infinite())) == 0.0);
  }
  SUBCASE("divergence-free wall traces give zero pressure") {
    auto u = sample_field(g, [](const Vec3& x) { return Vec3{std::sin(x[1]) * x[2], std::cos(x[0]), 0}; });
    CHECK(max_abs(solve_pressure_neumann(u, zeta)) <= 1e-12);
  }
  SUBCASE("sine trace on the top wall: cosh profile") {
    // Flux (1/zeta) cos x at z = 1, none at z = 0: p = cos x cosh z / (zeta sinh 1).
    auto u = sample_field(g, [](const Vec3& x) { return Vec3{std::sin(x[0]) * x[2] * x[2], 0, 0}; });
    auto p = solve_pressure_neumann(u, zeta);
    double err = 0;
    for (int i = 0; i < g->size(); ++i) {
      Vec3 x = g->point(i);
      err = std::max(err, std::abs(p[i] - std::cos(x[0]) * std::cosh(x[2]) / (zeta.value() * std::sinh(1.0))));
    }
    CHECK(err <= 1e-10);
    // Second-order finite-difference oracle on the vertical profile.
    int n = 400;
    double h = 1.0 / n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n + 1);
    for (int j = 1; j < n; ++j) {
      A(j, j - 1) = A(j, j + 1) = 1 / (h * h);
      A(j, j) = -2 / (h * h) - 1;
    }
    // Ghost-point Neumann rows: g'(0) = 0, g'(1) = 1/zeta.
    A(0, 0) = -2 / (h * h) - 1;
    A(0, 1) = 2 / (h * h);
    A(n, n) = -2 / (h * h) - 1;
    A(n, n - 1) = 2 / (h * h);
    r(n) = -2 / (h * zeta.value());
    Eigen::VectorXd prof = A.fullPivLu().solve(r);
    CHECK(prof(n) == doctest::Approx(std::cosh(1.0) / (zeta.value() * std::sinh(1.0))).epsilon(1e-4));
  }
  SUBCASE("incompatible fluxes are rejected") {
    std::vector<double> zero(g->size(), 0.0), wall0(g->plane(), 0.0), wall1(g->plane(), 1.0);
    CHECK_THROWS_AS(g->solve_neumann(zero, wall1, wall0), NumericError);
  }
}

TEST_CASE("Stokes operator on eigenmodes, zero and linear combinations") {
  auto g = grid(16, 16, 40);
  auto zeta = SlipLength::finite(1.0);
  auto b = build_basis(Domain::channel(), zeta, {1, 2});
  for (int k = 0; k < b.size(); k += 5) {
    std::vector<double> e(b.size(), 0.0);
    e[k] = 1;
    auto a = mode_field(g, b, e);
    auto s = stokes_apply(a, zeta);
    a *= -b.modes[k].lambda;
    s += a;
    CAPTURE(k);
    CHECK(std::sqrt(inner(s, s)) <= 1e-8 * std::max(1.0, std::abs(b.modes[k].lambda)));
  }
  auto zero = sample_field(g, [](const Vec3&) { return Vec3{0, 0, 0}; });
  CHECK(max_abs_field(stokes_apply(zero, zeta)) == 0.0);
  std::vector<double> c1(b.size()), c2(b.size());
  for (int k = 0; k < b.size(); ++k) {
    c1[k] = std::sin(k + 1.0);
    c2[k] = std::cos(3.0 * k);
  }
  auto u = mode_field(g, b, c1), w = mode_field(g, b, c2);
  auto su = stokes_apply(u, zeta), sw = stokes_apply(w, zeta);
  auto mix = u;
  mix *= 0.7;
  auto w2 = w;
  w2 *= -1.3;
  mix += w2;
  auto smix = stokes_apply(mix, zeta);
  su *= 0.7;
  sw *= -1.3;
  su += sw;
  CHECK(max_diff(smix, su) <= 1e-10 * std::max(1.0, max_abs_field(smix)));
}

TEST_CASE("truncation projector: unit coordinates, Bessel and monotone truncated energy") {
  auto zeta = SlipLength::finite(1.0);
  auto b = build_basis(Domain::channel(), zeta, {1, 2});
  auto g = grid(16, 16, 32);
  std::vector<double> e3(b.size(), 0.0);
  e3[3] = 1;
  auto a3 = mode_field(g, b, e3);
  auto c = project_PN(a3, b, b.size());
  for (int k = 0; k < b.size(); ++k) CHECK(std::abs(c[k] - (k == 3 ? 1.0 : 0.0)) <= 1e-10);
  auto c2 = project_PN(a3, b, 3);
  for (double v : c2) CHECK(std::abs(v) <= 1e-10);

  auto u = helmholtz_decompose(sample_field(g, random_field(9))).pu;
  auto cu = project_PN(u, b, b.size());
  double u2 = inner(u, u), partial = 0, e_prev = 0;
  for (int N = 1; N <= b.size(); ++N) {
    partial += cu[N - 1] * cu[N - 1];
    CHECK(partial <= u2 * (1 + 1e-12));
    std::vector<double> head(cu.begin(), cu.begin() + N);
    double e = dirichlet_form_diagonal(b, head);
    CHECK(e >= e_prev);
    e_prev = e;
  }
  CHECK(e_prev <= dirichlet_form(u, u, zeta) * (1 + 1e-9));
}

TEST_CASE("Dirichlet form: eigenmode diagonal, symmetry and the flat-wall lower bound") {
  auto zeta = SlipLength::finite(0.4);
  auto b = build_basis(Domain::channel(), zeta, {1, 2});
  QuadratureSpec q{8, 8, 24};
  for (int k = 0; k < b.size(); ++k) {
    std::vector<double> e(b.size(), 0.0);
    e[k] = 1;
    auto f = mode_sum(b, e);
    CHECK(dirichlet_form(f, f, b.domain, zeta, q) == doctest::Approx(-b.modes[k].lambda).epsilon(1e-8));
  }
  auto g = grid();
  auto u = sample_field(g, random_field(4)), w = sample_field(g, random_field(5));
  CHECK(dirichlet_form(u, w, zeta) == dirichlet_form(w, u, zeta));
  double grad2 = dirichlet_form(u, u, SlipLength::infinite());
  CHECK(dirichlet_form(u, u, zeta) >= grad2);
}

TEST_CASE("ball Dirichlet form on toroidal modes") {
  for (double z : {0.5, 2.0}) {
    auto zeta = SlipLength::finite(z);
    auto b = build_basis(Domain::ball(1.0), zeta, {2, 2});
    QuadratureSpec q{16, 12, 24};
    for (int k = 0; k < b.size(); k += 3) {
      std::vector<double> e(b.size(), 0.0);
      e[k] = 1;
      auto f = mode_sum(b, e);
      CHECK(dirichlet_form(f, f, b.domain, zeta, q) == doctest::Approx(-b.modes[k].lambda).epsilon(1e-8));
    }
  }
}
