#include "doctest.h"

#include <nlohmann/json.hpp>

#include "analysis.hpp"

using namespace slipstokes;

namespace {

const EigenBasis& channel_basis() {
  static const EigenBasis b = build_basis(Domain::channel(), SlipLength::finite(1.0), {1, 2});
  return b;
}

const EigenBasis& ball_basis() {
  static const EigenBasis b = build_basis(Domain::ball(1.0), SlipLength::finite(0.5), {2, 2});
  return b;
}

FieldSample bare(const EigenBasis& b) {
  FieldSample s;
  s.coeffs.assign(b.size(), 0.0);
  return s;
}

double max_value(const ResidualMap& m) {
  double r = 0;
  for (const auto& [k, v] : m) r = std::max(r, v);
  return r;
}

}  // namespace

TEST_CASE("scalar dictionary derivatives agree with central differences") {
  for (const Domain& d : {Domain::channel(), Domain::ball(1.0)}) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
      Vec3 x{u(rng), u(rng), u(rng)};
      std::vector<Jet<1>> dict;
      scalar_dictionary<1>(d, x, dict);
      REQUIRE(static_cast<int>(dict.size()) == scalar_dictionary_size(d));
      const double h = 1e-5;
      for (int a = 0; a < 3; ++a) {
        Vec3 xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        std::vector<Jet<1>> dp, dm;
        scalar_dictionary<1>(d, xp, dp);
        scalar_dictionary<1>(d, xm, dm);
        for (size_t i = 0; i < dict.size(); ++i) {
          double fd = (dp[i].value() - dm[i].value()) / (2 * h);
          int e[3] = {0, 0, 0};
          e[a] = 1;
          CHECK(dict[i].d(e[0], e[1], e[2]) == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("constant fields satisfy the pointwise identities exactly") {
  // Channel: g = z gives u = e_z. Ball: g = x gives u = e_x.
  for (const EigenBasis* b : {&channel_basis(), &ball_basis()}) {
    auto s = bare(*b);
    s.g.c.assign(scalar_dictionary_size(b->domain), 0.0);
    s.g.c[1] = 1.0;
    auto r = check_pointwise_identities(s, *b, default_level(b->domain));
    CAPTURE(b->domain.name());
    REQUIRE(!r.empty());
    for (const auto& [k, v] : r) {
      CAPTURE(k);
      CHECK(v <= 1e-12);
    }
  }
}

TEST_CASE("ball gradient of x^2 - y^2 and the integral identities") {
  // Harmonic potential: u = (2x, -2y, 0), every identity is exact on polynomials.
  const auto& b = ball_basis();
  auto s = bare(b);
  s.g.c.assign(scalar_dictionary_size(b.domain), 0.0);
  s.g.c[4] = 1.0;   // x^2
  s.g.c[7] = -1.0;  // y^2
  auto lvl = default_level(b.domain);
  CHECK(max_value(check_pointwise_identities(s, b, lvl)) <= 1e-10);
  CHECK(max_value(check_integral_identities(s, b, lvl)) <= 1e-10);
}

TEST_CASE("single eigenmodes are classified as solenoidal, tangent and Navier") {
  for (const EigenBasis* b : {&channel_basis(), &ball_basis()}) {
    auto q = default_level(b->domain).quad;
    for (int k = 0; k < b->size(); k += 4) {
      auto s = bare(*b);
      s.coeffs[k] = 1.0;
      classify_sample(s, *b, q);
      CAPTURE(k);
      CHECK(s.divergence_free);
      CHECK(s.tangent_on_boundary);
      CHECK(s.satisfies_navier);
      auto lvl = default_level(b->domain);
      CHECK(max_value(check_pointwise_identities(s, *b, lvl)) <= 1e-9);
      CHECK(max_value(check_integral_identities(s, *b, refine(lvl))) <= 1e-9);
    }
  }
}

TEST_CASE("sample generation is deterministic in the seed") {
  const auto& b = channel_basis();
  auto a = make_samples(b, 4, 42), c = make_samples(b, 4, 42), d = make_samples(b, 4, 43);
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].coeffs == c[i].coeffs);
    CHECK(a[i].g.c == c[i].g.c);
    CHECK(a[i].f.c == c[i].f.c);
  }
  CHECK(a[0].coeffs != d[0].coeffs);
  CHECK_THROWS_AS(make_samples(b, 0, 1), ConfigError);
}

TEST_CASE("inequality fits: positive constants, zero samples excluded, stable under refinement") {
  const auto& b = channel_basis();
  auto samples = make_samples(b, 6, 42);
  samples.push_back(bare(b));  // zero field: no ratio
  samples.back().divergence_free = samples.back().tangent_on_boundary = samples.back().satisfies_navier = true;
  auto fits = fit_inequality_constants(samples, b, default_level(b.domain), 42);
  REQUIRE(fits.size() == 6);
  for (const auto& f : fits) {
    CAPTURE(f.inequality_id);
    CHECK(std::isfinite(f.fitted_constant));
    CHECK(f.fitted_constant >= 0);
    CHECK(f.rhs.back() == 0.0);
    CHECK(f.rejected.empty());
    CHECK(f.stable);
    if (f.inequality_id != "curl_projection") CHECK(f.fitted_constant > 0);
    auto j = nlohmann::json::parse(f.json());
    for (const char* key : {"inequality_id", "samples", "lhs", "rhs", "fitted_constant", "fitted_constant_refined",
                            "rejected", "resolution", "seed", "stable"})
      CHECK(j.contains(key));
  }
  // Adding the zero sample leaves the constants unchanged.
  samples.pop_back();
  auto fits2 = fit_inequality_constants(samples, b, default_level(b.domain), 42);
  for (size_t i = 0; i < fits.size(); ++i) CHECK(fits2[i].fitted_constant == fits[i].fitted_constant);
}

TEST_CASE("samples lacking the elliptic hypotheses are rejected") {
  const auto& b = channel_basis();
  auto samples = make_samples(b, 3, 5);
  samples[1].satisfies_navier = false;
  auto fits = fit_inequality_constants(samples, b, default_level(b.domain), 5);
  for (const auto& f : fits) {
    bool elliptic = f.inequality_id.rfind("h2_", 0) == 0 || f.inequality_id.rfind("norm_", 0) == 0;
    CAPTURE(f.inequality_id);
    CHECK(f.rejected == (elliptic ? std::vector<int>{1} : std::vector<int>{}));
  }
}

TEST_CASE("truncation energies are nondecreasing and end at the full energy") {
  for (const EigenBasis* b : {&channel_basis(), &ball_basis()}) {
    auto samples = make_samples(*b, 5, 11);
    for (const auto& s : samples) {
      auto e = truncation_energies(*b, s.coeffs);
      for (size_t k = 1; k < e.size(); ++k) CHECK(e[k] >= e[k - 1]);
      CHECK(e.back() == doctest::Approx(dirichlet_form_diagonal(*b, s.coeffs)).epsilon(1e-14));
    }
  }
}

TEST_CASE("identity suite on a small sample set") {
  const auto& b = channel_basis();
  std::vector<InequalityReport> fits;
  auto rep = identity_suite(b, 3, 42, &fits);
  CHECK(rep.pass);
  CHECK_FALSE(rep.resolution_insufficient);
  CHECK(fits.size() == 6);
  auto j = nlohmann::json::parse(rep.json());
  CHECK(j["domain"] == "channel");
  CHECK(j["seed"] == 42);
  CHECK(j["samples"] == 3);
  REQUIRE(j.contains("identities"));
  for (const char* key : {"kinetic_gradient", "normal_convection", "stokes_normal_trace", "laplacian_pairing",
                          "tangent_gradient_curl", "projection_gradient"}) {
    CAPTURE(key);
    REQUIRE(j["identities"].contains(key));
    CHECK(j["identities"][key]["fine"].get<double>() <= 1e-9);
  }
}
