#include "doctest.h"

#include <random>

#include "geometry.hpp"

using namespace slipstokes;

namespace {

Vec3 sphere_point(std::mt19937_64& rng, double R) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  return (R / norm(v)) * v;
}

Vec3 rigid(const Vec3& x) { return cross(Vec3{0, 0, 1}, x); }

}  // namespace

TEST_CASE("hodge star rotates tangent vectors by a quarter turn") {
  auto a = hodge_star({1, 0});
  CHECK(a[0] == 0);
  CHECK(a[1] == 1);
  auto z = hodge_star({0, 0});
  CHECK(z[0] == 0);
  CHECK(z[1] == 0);
  auto b = hodge_star(hodge_star({0.3, -1.7}));
  CHECK(b[0] == -0.3);
  CHECK(b[1] == 1.7);
}

TEST_CASE("hodge star is an isometry orthogonal to its argument and satisfies the cross-product identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Domain ball = Domain::ball(1.3);
  for (int s = 0; s < 200; ++s) {
    Frame f = frame_at(ball, sphere_point(rng, 1.3));
    TangentVector v{u(rng), u(rng)}, w{u(rng), u(rng)};
    auto sv = hodge_star(v);
    CHECK(std::hypot(sv[0], sv[1]) == doctest::Approx(std::hypot(v[0], v[1])).epsilon(1e-15));
    CHECK(std::abs(sv[0] * v[0] + sv[1] * v[1]) <= 1e-15);
    Vec3 wa = f.to_ambient(w), sa = f.to_ambient(sv);
    CHECK(std::abs(dot(cross(wa, sa), f.nu) - (v[0] * w[0] + v[1] * w[1])) <= 1e-12);
  }
}

TEST_CASE("frames are orthonormal, right-handed and outward") {
  std::mt19937_64 rng(3);
  Domain ball = Domain::ball(2.0);
  for (int s = 0; s < 100; ++s) {
    Vec3 x = sphere_point(rng, 2.0);
    Frame f = frame_at(ball, x);
    CHECK(std::abs(dot(f.e1, f.e2)) <= 1e-14);
    CHECK(std::abs(dot(f.e1, f.nu)) <= 1e-14);
    CHECK(norm(f.e1) == doctest::Approx(1).epsilon(1e-14));
    CHECK(norm(cross(f.e1, f.e2) - f.nu) <= 1e-14);
    CHECK(dot(f.nu, x) > 0);
  }
  Domain ch = Domain::channel();
  CHECK(frame_at(ch, {1, 2, 1}).nu[2] == 1);
  CHECK(frame_at(ch, {1, 2, 0}).nu[2] == -1);
  CHECK_THROWS_AS(frame_at(ch, {1, 2, 0.5}), ConfigError);
  CHECK_THROWS_AS(frame_at(ball, {0.5, 0, 0}), ConfigError);
}

TEST_CASE("second fundamental form of the supported boundaries") {
  auto ch = second_fundamental_form(Domain::channel(), {0.4, 1.0, 1.0});
  CHECK(ch.H == 0);
  CHECK(ch.pi[0][0] == 0);
  CHECK(ch.pi[0][1] == 0);
  for (double R : {1.0, 2.0}) {
    auto s = second_fundamental_form(Domain::ball(R), {0, R * 0.6, R * 0.8});
    CHECK(s.pi[0][0] == doctest::Approx(1 / R));
    CHECK(s.pi[1][1] == doctest::Approx(1 / R));
    CHECK(s.pi[0][1] == 0);
    CHECK(s.pi[1][0] == 0);
    CHECK(s.H == doctest::Approx(2 / R));
  }
  CHECK_THROWS_AS(second_fundamental_form(Domain::ball(1), {0, 0, 0.9}), ConfigError);
}

TEST_CASE("curvature sign fixed by the rigid rotation: int pi(u,u) = 2 |Omega|^2 volume") {
  // grad u = [Omega]x has |grad u|^2 = 2|Omega|^2 and |curl u|^2 = 4|Omega|^2,
  // so the boundary-curvature identity forces int pi(u,u) = 2|Omega|^2 vol.
  for (double R : {1.0, 2.0}) {
    Domain d = Domain::ball(R);
    SurfaceGrid sg(d, 16, 32);
    std::vector<double> f(sg.size());
    for (int i = 0; i < sg.size(); ++i) {
      const auto& fr = sg.node(i).frame;
      auto t = fr.tangent(rigid(fr.x));
      f[i] = sg.sff().form(t, t);
    }
    double expect = 2 * (4 * M_PI / 3) * R * R * R;
    CHECK(sg.integrate(f) == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("surface integration of constants") {
  SurfaceGrid ball(Domain::ball(1), 8, 16);
  CHECK(ball.integrate(std::vector<double>(ball.size(), 1.0)) == doctest::Approx(4 * M_PI).epsilon(1e-14));
  Domain ch = Domain::channel(3.0, 5.0);
  SurfaceGrid walls(ch, 8, 8);
  CHECK(walls.integrate(std::vector<double>(walls.size(), 1.0)) == doctest::Approx(2 * 3.0 * 5.0).epsilon(1e-14));
}

TEST_CASE("navier residual examples") {
  Domain ch = Domain::channel();
  auto zeta = SlipLength::finite(0.7);
  SecondFundamentalForm flat;
  SUBCASE("free slip past a flat wall") {
    Frame f = frame_at(ch, {0.3, 0.2, 1.0});
    auto r = navier_residual({1, 0, 0}, {0, 0, 0}, {0, 0}, SlipLength::infinite(), f, flat);
    CHECK(r[0] == 0);
    CHECK(r[1] == 0);
  }
  SUBCASE("shear profile with the Robin slope at z = 1") {
    Frame f = frame_at(ch, {0.3, 0.2, 1.0});
    double fv = 1.3, fp = -fv / zeta.value();
    auto r = navier_residual({fv, 0, 0}, {0, fp, 0}, {0, 0}, zeta, f, flat);
    CHECK(std::abs(r[0]) <= 1e-15);
    CHECK(std::abs(r[1]) <= 1e-15);
    auto bad = navier_residual({fv, 0, 0}, {0, 0, 0}, {0, 0}, zeta, f, flat);
    CHECK(std::abs(bad[1]) == doctest::Approx(fv / zeta.value()));
  }
  SUBCASE("rigid rotation on the ball leaves |Omega x x| / zeta") {
    std::mt19937_64 rng(11);
    Domain ball = Domain::ball(1.5);
    for (int s = 0; s < 50; ++s) {
      Vec3 x = sphere_point(rng, 1.5);
      Frame f = frame_at(ball, x);
      auto sff = second_fundamental_form(ball, x);
      Vec3 u = rigid(x), omega{0, 0, 2};
      auto r = navier_residual(u, omega, {0, 0}, zeta, f, sff);
      CHECK(std::hypot(r[0], r[1]) == doctest::Approx(norm(u) / zeta.value()).epsilon(1e-12));
      auto r0 = navier_residual(u, omega, {0, 0}, SlipLength::infinite(), f, sff);
      CHECK(std::hypot(r0[0], r0[1]) <= 1e-14);
    }
  }
  CHECK_THROWS_AS(SlipLength::finite(0.0), ConfigError);
  CHECK_THROWS_AS(SlipLength::finite(-1.0), ConfigError);
  CHECK_THROWS_AS(SlipLength::parse("abc"), ConfigError);
  CHECK(SlipLength::parse("inf").is_infinite());
  CHECK(SlipLength::infinite().inverse() == 0.0);
}

TEST_CASE("component and global forms of the slip condition agree") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Domain ball = Domain::ball(1.0);
  for (int s = 0; s < 200; ++s) {
    Vec3 x = sphere_point(rng, 1.0);
    Frame f = frame_at(ball, x);
    auto sff = second_fundamental_form(ball, x);
    Vec3 tan = f.to_ambient({u(rng), u(rng)}), om{u(rng), u(rng), u(rng)};
    TangentVector gn{u(rng), u(rng)};
    auto zeta = SlipLength::finite(0.1 + std::abs(u(rng)));
    auto a = navier_residual(tan, om, gn, zeta, f, sff);
    auto b = navier_residual_components(tan, om, gn, zeta, f, sff);
    CHECK(std::abs(a[0] - b[0]) <= 1e-10);
    CHECK(std::abs(a[1] - b[1]) <= 1e-10);
  }
}

TEST_CASE("tangential calculus on the walls and the sphere") {
  Domain ch = Domain::channel();
  SurfaceGrid walls(ch, 16, 8);
  std::vector<double> c(walls.size(), 2.5), f(walls.size());
  for (auto g : walls.tangential_gradient(c)) CHECK(norm(g) <= 1e-13);
  for (int i = 0; i < walls.size(); ++i) f[i] = std::sin(2 * M_PI * walls.node(i).frame.x[0] / ch.Lx);
  auto g = walls.tangential_gradient(f);
  for (int i = 0; i < walls.size(); ++i) {
    double x = walls.node(i).frame.x[0];
    CHECK(std::abs(g[i][0] - (2 * M_PI / ch.Lx) * std::cos(2 * M_PI * x / ch.Lx)) <= 1e-13);
    CHECK(std::abs(g[i][1]) <= 1e-13);
    CHECK(std::abs(g[i][2]) <= 1e-13);
  }

  // Closed surface: the integral of a tangential divergence vanishes.
  SurfaceGrid sphere(Domain::ball(1.0), 16, 32);
  std::vector<Vec3> v(sphere.size());
  for (int i = 0; i < sphere.size(); ++i) {
    const auto& fr = sphere.node(i).frame;
    Vec3 w{fr.x[0] * fr.x[0] * fr.x[1], fr.x[2], std::sin(fr.x[0])};
    v[i] = w - dot(w, fr.nu) * fr.nu;
  }
  double tail = 0;
  auto div = sphere.tangential_divergence(v, &tail);
  CHECK(std::abs(sphere.integrate(div)) <= 1e-12);
  CHECK(tail < 1e-6);

  // Gradient of a degree-2 harmonic on the unit sphere: f = x y.
  std::vector<double> h(sphere.size());
  for (int i = 0; i < sphere.size(); ++i) h[i] = sphere.node(i).frame.x[0] * sphere.node(i).frame.x[1];
  auto gh = sphere.tangential_gradient(h);
  for (int i = 0; i < sphere.size(); ++i) {
    const auto& fr = sphere.node(i).frame;
    Vec3 amb{fr.x[1], fr.x[0], 0};
    Vec3 expect = amb - dot(amb, fr.nu) * fr.nu;
    CHECK(norm(gh[i] - expect) <= 1e-12);
  }
}

TEST_CASE("volume quadrature integrates the domain volume") {
  double v = 0;
  for (const auto& n : volume_grid(Domain::ball(2.0), {8, 8, 16})) v += n.w;
  CHECK(v == doctest::Approx(4 * M_PI / 3 * 8).epsilon(1e-13));
  double c = 0;
  for (const auto& n : volume_grid(Domain::channel(), {4, 4, 4})) c += n.w;
  CHECK(c == doctest::Approx(4 * M_PI * M_PI).epsilon(1e-13));
}
