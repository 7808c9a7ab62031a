#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <random>

#include "stokes_spectrum.hpp"

using namespace slipstokes;

namespace {

// Plain bisection on a sign change; the test-side oracle for Robin roots.
template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    double m = 0.5 * (a + b), fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double even_oracle(double zeta) {
  return bisect([zeta](double k) { return k * std::tan(k / 2) - 1 / zeta; }, 1e-12, M_PI - 1e-12);
}

}  // namespace

TEST_CASE("first even shear root against the bisection oracle") {
  auto r1 = shear_mode_roots(SlipLength::finite(1.0), Parity::Even, 3);
  double k = even_oracle(1.0);
  CHECK(std::abs(r1[0] - k) <= 1e-12);
  CHECK(r1[0] == doctest::Approx(1.3065).epsilon(1e-4));
  CHECK(-r1[0] * r1[0] == doctest::Approx(-1.7070).epsilon(1e-4));

  auto rinf = shear_mode_roots(SlipLength::infinite(), Parity::Even, 2);
  CHECK(rinf[0] == 0.0);
  CHECK(rinf[1] == doctest::Approx(2 * M_PI).epsilon(1e-14));

  auto r0 = shear_mode_roots(SlipLength::finite(1e-6), Parity::Even, 1);
  CHECK(std::abs(r0[0] - M_PI) <= 1e-2);
  CHECK(-r0[0] * r0[0] == doctest::Approx(-M_PI * M_PI).epsilon(1e-3));
}

TEST_CASE("shear roots solve their dispersion relations and increase strictly") {
  for (double z : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    auto zeta = SlipLength::finite(z);
    auto ev = shear_mode_roots(zeta, Parity::Even, 6);
    auto od = shear_mode_roots(zeta, Parity::Odd, 6);
    for (size_t i = 0; i < ev.size(); ++i) {
      CHECK(std::abs(ev[i] * std::sin(ev[i] / 2) - std::cos(ev[i] / 2) / z) <= 1e-9 * (1 + ev[i] + 1 / z));
      CHECK(std::abs(od[i] * std::cos(od[i] / 2) + std::sin(od[i] / 2) / z) <= 1e-9 * (1 + od[i] + 1 / z));
      // One root per branch interval.
      CHECK(ev[i] > 2 * M_PI * i);
      CHECK(ev[i] < 2 * M_PI * i + M_PI);
      if (i > 0) {
        CHECK(ev[i] > ev[i - 1]);
        CHECK(od[i] > od[i - 1]);
      }
    }
  }
}

TEST_CASE("Robin roots are monotone in zeta between the no-slip and free-slip limits") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> e(-6, 4);
  std::vector<double> zs;
  for (int i = 0; i < 40; ++i) zs.push_back(std::pow(10.0, e(rng)));
  std::sort(zs.begin(), zs.end());
  double prev = M_PI + 1e-12;
  for (double z : zs) {
    double k = shear_mode_roots(SlipLength::finite(z), Parity::Even, 1)[0];
    CHECK(k < prev);
    CHECK(k > 0);
    prev = k;
  }
  double prev_odd = 2 * M_PI + 1e-12;
  for (double z : zs) {
    double k = shear_mode_roots(SlipLength::finite(z), Parity::Odd, 1)[0];
    CHECK(k <= prev_odd);
    CHECK(k >= M_PI - 1e-12);
    prev_odd = k;
  }
}

TEST_CASE("poloidal family: free-slip closed form and no-slip limit") {
  // Free slip: w = sin(pi z) satisfies w = w'' = 0, lambda = -(pi^2 + kappa^2).
  auto fs = poloidal_modes_collocation(1.0, SlipLength::infinite(), 2, 48);
  REQUIRE(!fs.empty());
  CHECK(fs[0].lambda == doctest::Approx(-(M_PI * M_PI + 1.0)).epsilon(1e-12));
  CHECK(fs[0].lambda_collocation == doctest::Approx(fs[0].lambda).epsilon(1e-8));

  auto small = poloidal_collocation_eigenvalues(1.0, SlipLength::finite(1e-5), 48);
  auto noslip = poloidal_collocation_eigenvalues(1.0, SlipLength::finite(1.0), 48, true);
  REQUIRE(small.size() >= 3);
  REQUIRE(noslip.size() >= 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(small[i] - noslip[i]) <= 1e-3 * std::abs(noslip[i]));
}

TEST_CASE("poloidal eigenvalues are stable under doubled collocation resolution") {
  for (double z : {0.1, 1.0, 10.0}) {
    auto a = poloidal_modes_collocation(2.0, SlipLength::finite(z), 3, 40);
    auto b = poloidal_modes_collocation(2.0, SlipLength::finite(z), 3, 80);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i].lambda - b[i].lambda) <= 1e-8 * std::abs(a[i].lambda));
      CHECK(std::abs(poloidal_dispersion(a[i].q, 2.0, SlipLength::finite(z), a[i].parity)) <= 1e-8);
    }
  }
}

TEST_CASE("ball toroidal roots") {
  auto r = ball_toroidal_roots(1, SlipLength::infinite(), 1.0, 3);
  CHECK(r[0] == 0.0);
  CHECK(r[1] > 0);
  CHECK_THROWS_AS(ball_toroidal_roots(0, SlipLength::finite(1), 1.0, 1), ConfigError);
  // Threshold zeta = R: no positive eigenvalue.
  Domain ball = Domain::ball(1.0);
  auto b = build_basis(ball, SlipLength::finite(1.0), {3, 3});
  for (const auto& m : b.modes) CHECK(m.lambda <= 1e-10);
}

TEST_CASE("channel basis: orthonormal, ordered, nonpositive, valid") {
  Domain ch = Domain::channel();
  for (auto zeta : {SlipLength::finite(1.0), SlipLength::infinite()}) {
    auto b = build_basis(ch, zeta, {1, 2});
    auto rep = validate_basis(b, validation_quadrature(b));
    CHECK(rep.gram_defect <= 1e-9);
    CHECK(rep.max_lambda <= 1e-10);
    for (int k = 1; k < b.size(); ++k) CHECK(b.modes[k].lambda <= b.modes[k - 1].lambda);
    for (const auto& d : rep.modes) {
      CHECK(d.ok(1e-8, 1e-7));
      CHECK(d.norm_defect <= 1e-10);
      CHECK(d.normal_trace <= 1e-10);
      CHECK(d.divergence <= 1e-10);
      CHECK(d.stokes_normal <= 1e-8);
      CHECK(d.stokes_curl <= 1e-7);
    }
    // Every family is unbounded below along its index.
    CHECK(b.modes.back().lambda < b.modes.front().lambda);
  }
}

TEST_CASE("validate_mode flags a perturbed eigenvalue linearly") {
  auto b = build_basis(Domain::channel(), SlipLength::finite(1.0), {1, 2});
  auto q = validation_quadrature(b);
  EigenMode m = b.modes[0];
  REQUIRE(m.family == Family::Shear);
  auto exact = validate_mode(m, b, q);
  CHECK(exact.eigen_residual <= 1e-8);
  CHECK(exact.navier_residual <= 1e-8);
  m.lambda *= 1.01;
  auto off = validate_mode(m, b, q);
  CHECK(off.eigen_residual == doctest::Approx(0.01 * std::abs(b.modes[0].lambda)).epsilon(1e-6));
}

TEST_CASE("basis build is deterministic and round-trips through the file format exactly") {
  Domain ch = Domain::channel();
  auto a = build_basis(ch, SlipLength::finite(0.3), {1, 2});
  auto b = build_basis(ch, SlipLength::finite(0.3), {1, 2});
  REQUIRE(a.size() == b.size());
  for (int k = 0; k < a.size(); ++k) {
    CHECK(a.modes[k].lambda == b.modes[k].lambda);
    CHECK(a.modes[k].amp == b.modes[k].amp);
  }
  auto dir = std::filesystem::temp_directory_path() / "slipstokes_test_spectrum";
  std::filesystem::create_directories(dir);
  auto path = (dir / "basis.json").string();
  save_basis(a, path);
  auto c = load_basis(path);
  REQUIRE(c.size() == a.size());
  CHECK(c.zeta.str() == a.zeta.str());
  for (int k = 0; k < a.size(); ++k) {
    CHECK(c.modes[k].lambda == a.modes[k].lambda);
    CHECK(c.modes[k].k == a.modes[k].k);
    CHECK(c.modes[k].amp == a.modes[k].amp);
    CHECK(c.modes[k].family == a.modes[k].family);
  }
  auto inf = build_basis(Domain::ball(1.0), SlipLength::infinite(), {1, 2});
  save_basis(inf, path);
  CHECK(load_basis(path).zeta.is_infinite());
  CHECK_THROWS_AS(load_basis((dir / "missing.json").string()), IoError);
  CHECK(basis_cache_key(ch, SlipLength::finite(0.3), {1, 2}) != basis_cache_key(ch, SlipLength::finite(0.3), {1, 3}));

  setenv("SLIPSTOKES_CACHE", dir.c_str(), 1);
  auto first = cached_basis(ch, SlipLength::finite(0.3), {1, 2});
  auto key = dir / basis_cache_key(ch, SlipLength::finite(0.3), {1, 2});
  CHECK(std::filesystem::exists(key));
  auto second = cached_basis(ch, SlipLength::finite(0.3), {1, 2});
  for (int k = 0; k < a.size(); ++k) CHECK(second.modes[k].lambda == first.modes[k].lambda);
  unsetenv("SLIPSTOKES_CACHE");
  std::filesystem::remove_all(dir);
}

TEST_CASE("complete slip channel modes carry no boundary pressure flux") {
  auto b = build_basis(Domain::channel(), SlipLength::infinite(), {1, 1});
  auto q = validation_quadrature(b);
  for (const auto& m : b.modes) CHECK(validate_mode(m, b, q).stokes_normal <= 1e-10);
}
