#include "analysis.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace slipstokes {

namespace {

// Partial derivatives of a jet at its expansion point.
template <int P>
double d1(const Jet<P>& f, int a) {
  int e[3] = {0, 0, 0};
  ++e[a];
  return f.d(e[0], e[1], e[2]);
}
template <int P>
double d2(const Jet<P>& f, int a, int b) {
  int e[3] = {0, 0, 0};
  ++e[a];
  ++e[b];
  return f.d(e[0], e[1], e[2]);
}

template <int P>
Vec3 value(const VecJet<P>& u) {
  return {u[0].value(), u[1].value(), u[2].value()};
}
template <int P>
Vec3 curl_value(const VecJet<P>& u) {
  return {d1(u[2], 1) - d1(u[1], 2), d1(u[0], 2) - d1(u[2], 0), d1(u[1], 0) - d1(u[0], 1)};
}
template <int P>
double div_value(const VecJet<P>& u) {
  return d1(u[0], 0) + d1(u[1], 1) + d1(u[2], 2);
}
// g[i][j] = d_j u_i
template <int P>
std::array<Vec3, 3> grad_value(const VecJet<P>& u) {
  std::array<Vec3, 3> g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[i][j] = d1(u[i], j);
  return g;
}
// (u . grad) u
inline Vec3 convect(const Vec3& u, const std::array<Vec3, 3>& g) {
  Vec3 r{};
  for (int j = 0; j < 3; ++j) r[j] = dot(u, g[j]);
  return r;
}
inline double frob2(const std::array<Vec3, 3>& g) { return dot(g[0], g[0]) + dot(g[1], g[1]) + dot(g[2], g[2]); }

template <int P>
void axpy(VecJet<P>& y, double a, const VecJet<P>& x) {
  for (int c = 0; c < 3; ++c) y[c].axpy(a, x[c]);
}

template <int P>
void add_gradient(VecJet<P>& u, const Jet<P + 1>& g) {
  for (int c = 0; c < 3; ++c) u[c] += diff(g, c);
}

// Channel dictionary wave indices (half plane, |m_i| <= 1).
constexpr int kChannelWaves[5][2] = {{0, 0}, {1, -1}, {1, 0}, {1, 1}, {0, 1}};

template <int P>
Jet<P> combine(const std::vector<Jet<P>>& dict, const std::vector<double>& c) {
  Jet<P> r;
  for (size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0) r.axpy(c[i], dict[i]);
  return r;
}

double tail_limit() { return 1e-8; }

struct Accum {
  // Maxima.
  double kinetic = 0, bochner = 0, proj_curl = 0, proj_div = 0;
  // Integrals.
  double lap_pair = 0, grad_gen = 0, curl_gen = 0, div_gen = 0, u_gen = 0;
  double grad_K = 0, curl_K = 0, div_K = 0, u_K = 0, hess_K = 0, lap_K = 0, curlcurl_K = 0;
  double curl_N = 0, grad_N = 0;
  double hess_f = 0, lap_f = 0;

  void merge(const Accum& o) {
    kinetic = std::max(kinetic, o.kinetic);
    bochner = std::max(bochner, o.bochner);
    proj_curl = std::max(proj_curl, o.proj_curl);
    proj_div = std::max(proj_div, o.proj_div);
    lap_pair += o.lap_pair;
    grad_gen += o.grad_gen;
    curl_gen += o.curl_gen;
    div_gen += o.div_gen;
    u_gen += o.u_gen;
    grad_K += o.grad_K;
    curl_K += o.curl_K;
    div_K += o.div_K;
    u_K += o.u_K;
    hess_K += o.hess_K;
    lap_K += o.lap_K;
    curlcurl_K += o.curlcurl_K;
    curl_N += o.curl_N;
    grad_N += o.grad_N;
    hess_f += o.hess_f;
    lap_f += o.lap_f;
  }
};

// Boundary values per (sample, node).
struct BoundaryRecord {
  double un = 0, divu = 0, convn = 0, kin = 0, uxwn = 0, pi_uu = 0;
  Vec3 upar{}, un_upar{};
  double dnf = 0, lapf = 0, dn_gradf2 = 0, pi_ff = 0;
  Vec3 gradf_par{}, dnf_gradf_par{};
  Vec3 uK_par{}, pi_uK{};
  double psin = 0, uKn = 0, pi_KK = 0, uK2 = 0, tgrad_K = 0;
  TangentVector curl_psi{}, curl_rhs{};
};

int half_index(const EigenBasis& b) { return std::max(1, b.size() / 2); }

}  // namespace

// ---------------------------------------------------------------------------
// Scalar dictionary

int scalar_dictionary_size(const Domain& d) { return d.kind == DomainKind::Channel ? 4 + 4 * 8 : 35; }

template <int P>
void scalar_dictionary(const Domain& d, const Vec3& x, std::vector<Jet<P>>& out) {
  out.assign(scalar_dictionary_size(d), Jet<P>());
  auto X = Jet<P>::variable(0, x[0]), Y = Jet<P>::variable(1, x[1]), Z = Jet<P>::variable(2, x[2]);
  if (d.kind == DomainKind::Channel) {
    std::array<Jet<P>, 4> zp;
    zp[0] = Jet<P>(1.0);
    for (int p = 1; p < 4; ++p) zp[p] = zp[p - 1] * Z;
    int n = 0;
    for (const auto& m : kChannelWaves) {
      double kx = 2 * M_PI * m[0] / d.Lx, ky = 2 * M_PI * m[1] / d.Ly;
      Jet<P> th = kx * X + ky * Y;
      Jet<P> co = cos(th), si = sin(th);
      for (int p = 0; p < 4; ++p) out[n++] = co * zp[p];
      if (m[0] == 0 && m[1] == 0) continue;
      for (int p = 0; p < 4; ++p) out[n++] = si * zp[p];
    }
    return;
  }
  std::array<Jet<P>, 5> xp, yp, zp;
  xp[0] = yp[0] = zp[0] = Jet<P>(1.0);
  for (int p = 1; p < 5; ++p) {
    xp[p] = xp[p - 1] * X;
    yp[p] = yp[p - 1] * Y;
    zp[p] = zp[p - 1] * Z;
  }
  int n = 0;
  for (int deg = 0; deg <= 4; ++deg)
    for (int i = deg; i >= 0; --i)
      for (int j = deg - i; j >= 0; --j) out[n++] = xp[i] * yp[j] * zp[deg - i - j];
}

template void scalar_dictionary<1>(const Domain&, const Vec3&, std::vector<Jet<1>>&);
template void scalar_dictionary<2>(const Domain&, const Vec3&, std::vector<Jet<2>>&);
template void scalar_dictionary<3>(const Domain&, const Vec3&, std::vector<Jet<3>>&);
template void scalar_dictionary<4>(const Domain&, const Vec3&, std::vector<Jet<4>>&);

RandomScalar RandomScalar::draw(const Domain& d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  RandomScalar s;
  s.c.resize(scalar_dictionary_size(d));
  if (d.kind == DomainKind::Channel) {
    for (int i = 0; i < static_cast<int>(s.c.size()); ++i) s.c[i] = nd(rng) / (1 + i % 4);
  } else {
    int n = 0;
    for (int deg = 0; deg <= 4; ++deg)
      for (int k = 0; k < (deg + 1) * (deg + 2) / 2; ++k) s.c[n++] = nd(rng) / (1 + deg);
  }
  return s;
}

template <int P>
Jet<P> RandomScalar::eval(const Domain& d, const Vec3& x) const {
  if (c.empty()) return Jet<P>();
  std::vector<Jet<P>> dict;
  scalar_dictionary<P>(d, x, dict);
  return combine(dict, c);
}
template Jet<1> RandomScalar::eval<1>(const Domain&, const Vec3&) const;
template Jet<2> RandomScalar::eval<2>(const Domain&, const Vec3&) const;
template Jet<3> RandomScalar::eval<3>(const Domain&, const Vec3&) const;
template Jet<4> RandomScalar::eval<4>(const Domain&, const Vec3&) const;

// ---------------------------------------------------------------------------
// Samples

std::vector<FieldSample> make_samples(const EigenBasis& b, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> slope(0.0, 3.0), amp(-0.5, 0.5);
  std::vector<FieldSample> out(count);
  for (auto& s : out) {
    double sl = slope(rng), a = std::pow(10.0, amp(rng));
    s.coeffs.resize(b.size());
    for (int k = 0; k < b.size(); ++k) s.coeffs[k] = a * nd(rng) * std::pow(1 + std::abs(b.modes[k].lambda), -sl);
    s.g = RandomScalar::draw(b.domain, rng);
    s.f = RandomScalar::draw(b.domain, rng);
  }
  const QuadratureSpec q = default_level(b.domain).quad;
  parallel_for(count, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) classify_sample(out[i], b, q);
  });
  return out;
}

void classify_sample(FieldSample& s, const EigenBasis& b, const QuadratureSpec& q) {
  const Domain& d = b.domain;
  double div = 0, trace = 0, nav = 0, scale = 1;
  for (const auto& v : volume_grid(d, q)) {
    VecJet<1> u{};
    for (int k = 0; k < b.size(); ++k) {
      if (s.coeffs[k] == 0) continue;
      VecJet<1> a;
      eval_mode<1>(d, b.modes[k], v.x, a);
      axpy(u, s.coeffs[k], a);
    }
    div = std::max(div, std::abs(div_value(u)));
    scale = std::max(scale, norm(value(u)));
  }
  SurfaceGrid sg(d, d.kind == DomainKind::Channel ? q.n1 : q.n2, d.kind == DomainKind::Channel ? q.n2 : q.n3);
  std::vector<double> normal(sg.size());
  std::vector<Vec3> uv(sg.size()), om(sg.size());
  for (int i = 0; i < sg.size(); ++i) {
    const Frame& f = sg.node(i).frame;
    VecJet<1> u{};
    for (int k = 0; k < b.size(); ++k) {
      if (s.coeffs[k] == 0) continue;
      VecJet<1> a;
      eval_mode<1>(d, b.modes[k], f.x, a);
      axpy(u, s.coeffs[k], a);
    }
    uv[i] = value(u);
    om[i] = curl_value(u);
    normal[i] = dot(uv[i], f.nu);
    trace = std::max(trace, std::abs(normal[i]));
  }
  auto gn = sg.tangential_gradient(normal);
  for (int i = 0; i < sg.size(); ++i) {
    const Frame& f = sg.node(i).frame;
    auto r = navier_residual(uv[i], om[i], f.tangent(gn[i]), b.zeta, f, sg.sff());
    nav = std::max(nav, std::hypot(r[0], r[1]));
  }
  const double tol = 1e-9 * scale;
  s.divergence_free = div <= tol;
  s.tangent_on_boundary = trace <= tol;
  s.satisfies_navier = nav <= 1e-7 * scale;
}

SuiteLevel default_level(const Domain& d) {
  SuiteLevel l;
  if (d.kind == DomainKind::Channel) {
    l.quad = {8, 8, 16};
    l.gx = l.gy = 8;
    l.gz = 16;
  } else {
    l.quad = {16, 12, 24};
  }
  return l;
}

SuiteLevel refine(const SuiteLevel& l) {
  SuiteLevel r = l;
  r.quad = l.quad.doubled();
  r.gx = 2 * l.gx;
  r.gy = 2 * l.gy;
  r.gz = 2 * l.gz;
  return r;
}

// ---------------------------------------------------------------------------
// The suite pass

namespace {

void volume_pass(const std::vector<FieldSample>& S, const EigenBasis& b, const SuiteLevel& lvl,
                 std::vector<Accum>& acc) {
  const Domain& d = b.domain;
  const int ns = static_cast<int>(S.size()), nm = b.size(), nh = half_index(b);
  const bool ball = d.kind == DomainKind::Ball;
  auto nodes = volume_grid(d, lvl.quad);
  const int nv = static_cast<int>(nodes.size());
  const int nc = reduction_chunks(nv);
  std::vector<std::vector<Accum>> part(nc, std::vector<Accum>(ns));
  parallel_for(nc, [&](int clo, int chi) {
    std::vector<VecJet<2>> A(nm);
    std::vector<Jet<3>> dict;
    for (int ch = clo; ch < chi; ++ch) {
      auto [lo, hi] = chunk_range(nv, nc, ch);
      for (int i = lo; i < hi; ++i) {
        const Vec3& x = nodes[i].x;
        const double w = nodes[i].w;
        for (int k = 0; k < nm; ++k) eval_mode<2>(d, b.modes[k], x, A[k]);
        scalar_dictionary<3>(d, x, dict);
        for (int s = 0; s < ns; ++s) {
          const FieldSample& fs = S[s];
          Accum& a = part[ch][s];
          VecJet<2> uK{}, uN{};
          for (int k = 0; k < nm; ++k) {
            double c = fs.coeffs[k];
            if (c == 0) continue;
            axpy(uK, c, A[k]);
            if (k < nh) axpy(uN, c, A[k]);
          }
          VecJet<2> ug = uK;
          if (!fs.g.empty()) add_gradient<2>(ug, combine(dict, fs.g.c));

          // General field.
          Vec3 u = value(ug), om = curl_value(ug);
          auto G = grad_value(ug);
          double dv = div_value(ug);
          Vec3 half_grad{};  // (1/2) grad |u|^2
          for (int j = 0; j < 3; ++j) half_grad[j] = u[0] * G[0][j] + u[1] * G[1][j] + u[2] * G[2][j];
          Vec3 kr = half_grad - cross(u, om) - convect(u, G);
          a.kinetic = std::max(a.kinetic, norm(kr));
          Vec3 lapu{};
          for (int c = 0; c < 3; ++c) lapu[c] = d2(ug[c], 0, 0) + d2(ug[c], 1, 1) + d2(ug[c], 2, 2);
          a.lap_pair += w * dot(lapu, u);
          a.grad_gen += w * frob2(G);
          a.curl_gen += w * dot(om, om);
          a.div_gen += w * dv * dv;
          a.u_gen += w * dot(u, u);

          // Eigen part.
          Vec3 uk = value(uK), omk = curl_value(uK);
          auto GK = grad_value(uK);
          double dvk = div_value(uK);
          a.grad_K += w * frob2(GK);
          a.curl_K += w * dot(omk, omk);
          a.div_K += w * dvk * dvk;
          a.u_K += w * dot(uk, uk);
          a.proj_div = std::max(a.proj_div, std::abs(dvk));
          if (ball) a.proj_curl = std::max(a.proj_curl, norm(om - omk));
          Vec3 lapk{}, graddiv{};
          double h2 = 0;
          for (int c = 0; c < 3; ++c) {
            for (int p = 0; p < 3; ++p)
              for (int q = 0; q < 3; ++q) h2 += d2(uK[c], p, q) * d2(uK[c], p, q);
            lapk[c] = d2(uK[c], 0, 0) + d2(uK[c], 1, 1) + d2(uK[c], 2, 2);
            graddiv[c] = d2(uK[0], c, 0) + d2(uK[1], c, 1) + d2(uK[2], c, 2);
          }
          Vec3 cc = graddiv - lapk;  // curl curl
          a.hess_K += w * h2;
          a.lap_K += w * dot(lapk, lapk);
          a.curlcurl_K += w * dot(cc, cc);

          // Truncation P_N.
          Vec3 omn = curl_value(uN);
          a.curl_N += w * dot(omn, omn);
          a.grad_N += w * frob2(grad_value(uN));

          // Scalar f.
          if (!fs.f.empty()) {
            Jet<3> f = combine(dict, fs.f.c);
            std::array<Jet<2>, 3> gf{diff(f, 0), diff(f, 1), diff(f, 2)};
            Jet<2> g2 = gf[0] * gf[0] + gf[1] * gf[1] + gf[2] * gf[2];
            Jet<1> lapf = diff(gf[0], 0) + diff(gf[1], 1) + diff(gf[2], 2);
            double hf = 0;
            for (int p = 0; p < 3; ++p)
              for (int q = 0; q < 3; ++q) hf += d2(f, p, q) * d2(f, p, q);
            double rhs = 0.5 * (d2(g2, 0, 0) + d2(g2, 1, 1) + d2(g2, 2, 2));
            for (int p = 0; p < 3; ++p) rhs -= d1(lapf, p) * d1(f, p);
            a.bochner = std::max(a.bochner, std::abs(hf - rhs));
            a.hess_f += w * hf;
            a.lap_f += w * lapf.value() * lapf.value();
          }
        }
      }
    }
  });
  acc.assign(ns, Accum());
  for (int ch = 0; ch < nc; ++ch)
    for (int s = 0; s < ns; ++s) acc[s].merge(part[ch][s]);
}

std::vector<std::vector<BoundaryRecord>> boundary_pass(const std::vector<FieldSample>& S, const EigenBasis& b,
                                                       const SurfaceGrid& sg) {
  const Domain& d = b.domain;
  const int ns = static_cast<int>(S.size()), nm = b.size(), nb = sg.size();
  const double th = b.zeta.inverse();
  const auto& sff = sg.sff();
  std::vector<std::vector<BoundaryRecord>> rec(ns, std::vector<BoundaryRecord>(nb));
  parallel_for(nb, [&](int lo, int hi) {
    std::vector<VecJet<3>> A(nm);
    std::vector<Jet<4>> dict;
    for (int i = lo; i < hi; ++i) {
      const Frame& fr = sg.node(i).frame;
      const Vec3& nu = fr.nu;
      for (int k = 0; k < nm; ++k) eval_mode<3>(d, b.modes[k], fr.x, A[k]);
      scalar_dictionary<4>(d, fr.x, dict);
      for (int s = 0; s < ns; ++s) {
        const FieldSample& fs = S[s];
        BoundaryRecord& r = rec[s][i];
        VecJet<3> uK{};
        Vec3 Su{};
        for (int k = 0; k < nm; ++k) {
          double c = fs.coeffs[k];
          if (c == 0) continue;
          axpy(uK, c, A[k]);
          Su = Su + (c * b.modes[k].lambda) * value(A[k]);
        }
        VecJet<3> ug = uK;
        if (!fs.g.empty()) add_gradient<3>(ug, combine(dict, fs.g.c));

        Vec3 u = value(ug), om = curl_value(ug);
        auto G = grad_value(ug);
        r.un = dot(u, nu);
        r.divu = div_value(ug);
        r.convn = dot(convect(u, G), nu);
        double kin = 0;
        for (int c = 0; c < 3; ++c) kin += u[c] * dot(G[c], nu);
        r.kin = kin;
        r.uxwn = dot(cross(u, om), nu);
        TangentVector ut = fr.tangent(u);
        r.pi_uu = sff.form(ut, ut);
        r.upar = fr.to_ambient(ut);
        r.un_upar = r.un * r.upar;

        if (!fs.f.empty()) {
          Jet<3> f = truncate<3>(combine(dict, fs.f.c));
          Vec3 gf{d1(f, 0), d1(f, 1), d1(f, 2)};
          r.dnf = dot(gf, nu);
          r.lapf = d2(f, 0, 0) + d2(f, 1, 1) + d2(f, 2, 2);
          double dn = 0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) dn += 2 * gf[p] * d2(f, p, q) * nu[q];
          r.dn_gradf2 = dn;
          TangentVector gt = fr.tangent(gf);
          r.pi_ff = sff.form(gt, gt);
          r.gradf_par = fr.to_ambient(gt);
          r.dnf_gradf_par = r.dnf * r.gradf_par;
        }

        Vec3 uk = value(uK);
        TangentVector ukt = fr.tangent(uk);
        r.uKn = dot(uk, nu);
        r.uK_par = fr.to_ambient(ukt);
        r.pi_uK = fr.to_ambient(sff.apply(ukt));
        r.pi_KK = sff.form(ukt, ukt);
        r.uK2 = dot(uk, uk);
        auto GK = grad_value(uK);
        double tg = 0;
        for (int c = 0; c < 3; ++c) {
          Vec3 t = GK[c] - dot(GK[c], nu) * nu;
          tg += dot(t, t);
        }
        r.tgrad_K = tg;
        VecJet<1> psi;
        for (int c = 0; c < 3; ++c)
          psi[c] = -1.0 * (diff(diff(uK[c], 0), 0) + diff(diff(uK[c], 1), 1) + diff(diff(uK[c], 2), 2));
        r.psin = dot(value(psi), nu);
        r.curl_psi = fr.tangent(curl_value(psi));
        TangentVector st = fr.tangent(Su), a1 = hodge_star(st), a2 = hodge_star(sff.apply(st));
        r.curl_rhs = {th * a1[0] - 2 * a2[0], th * a1[1] - 2 * a2[1]};
      }
    }
  });
  return rec;
}

void channel_projection_pass(const std::vector<FieldSample>& S, const EigenBasis& b, const SuiteLevel& lvl,
                             SuitePass& out) {
  const Domain& d = b.domain;
  auto grid = ChannelGrid::make(d, lvl.gx, lvl.gy, lvl.gz);
  const int np = grid->size(), nm = b.size(), ns = static_cast<int>(S.size());
  const int nd = scalar_dictionary_size(d);
  Eigen::MatrixXd A(3 * np, nm), D(3 * np, nd);
  parallel_for(np, [&](int lo, int hi) {
    std::vector<Jet<1>> dict;
    for (int i = lo; i < hi; ++i) {
      Vec3 x = grid->point(i);
      for (int k = 0; k < nm; ++k) {
        VecJet<0> a;
        eval_mode<0>(d, b.modes[k], x, a);
        for (int c = 0; c < 3; ++c) A(3 * i + c, k) = a[c].value();
      }
      scalar_dictionary<1>(d, x, dict);
      for (int j = 0; j < nd; ++j)
        for (int c = 0; c < 3; ++c) D(3 * i + c, j) = d1(dict[j], c);
    }
  });
  std::vector<ResidualMap> res(ns);
  parallel_for(ns, [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      Eigen::VectorXd cK = Eigen::Map<const Eigen::VectorXd>(S[s].coeffs.data(), nm);
      Eigen::VectorXd vk = A * cK, vg = vk;
      if (!S[s].g.empty()) vg += D * Eigen::Map<const Eigen::VectorXd>(S[s].g.c.data(), nd);
      ChannelField u(grid), uk(grid);
      for (int i = 0; i < np; ++i) {
        u.set(i, {vg(3 * i), vg(3 * i + 1), vg(3 * i + 2)});
        uk.set(i, {vk(3 * i), vk(3 * i + 1), vk(3 * i + 2)});
      }
      auto hd = helmholtz_decompose(u);
      const ChannelField& pu = hd.pu;
      double rec = 0;
      for (int i = 0; i < np; ++i) rec = std::max(rec, norm(pu.at(i) - uk.at(i)));
      ChannelField cu = curl(u), cp = curl(pu);
      ChannelField dc = cp;
      dc -= cu;
      double cmax = 0;
      for (int c = 0; c < 3; ++c) cmax = std::max(cmax, max_abs(dc.c[c]));
      double gp = 0;
      for (int c = 0; c < 3; ++c) {
        ChannelField g = gradient(pu.c[c], grid);
        gp += inner(g, g);
      }
      double cu2 = inner(cu, cu), u2 = inner(u, u);
      ResidualMap& r = res[s];
      r["projection_recovery"] = rec;
      r["projection_divergence"] = max_abs(divergence(pu));
      r["projection_trace"] = max_normal_trace(pu);
      r["projection_curl"] = cmax;
      // Flat walls: pi = 0.
      r["projection_gradient"] = rel_residual(gp, cu2);
      r["projection_gradient_bound"] =
          std::max(0.0, std::sqrt(gp) - std::sqrt(cu2 + u2)) / std::max(1.0, std::sqrt(cu2 + u2));
    }
  });
  for (int s = 0; s < ns; ++s) {
    bool point = true;
    for (auto& [k, v] : res[s]) {
      point = k != "projection_gradient" && k != "projection_gradient_bound";
      (point ? out.pointwise[s] : out.integral[s])[k] = v;
    }
  }
}

}  // namespace

SuitePass run_suite_pass(const std::vector<FieldSample>& S, const EigenBasis& b, const SuiteLevel& lvl) {
  const Domain& d = b.domain;
  const bool ball = d.kind == DomainKind::Ball;
  const int ns = static_cast<int>(S.size());
  for (const auto& s : S)
    if (static_cast<int>(s.coeffs.size()) != b.size()) throw ConfigError("sample does not match the basis size");
  const double th = b.zeta.inverse();
  SuitePass out;
  out.pointwise.resize(ns);
  out.integral.resize(ns);
  out.diagnostics.resize(ns);
  out.norms.resize(ns);

  std::vector<Accum> acc;
  volume_pass(S, b, lvl, acc);

  SurfaceGrid sg(d, ball ? lvl.quad.n2 : lvl.quad.n1, ball ? lvl.quad.n3 : lvl.quad.n2);
  auto rec = boundary_pass(S, b, sg);
  const int nb = sg.size();
  const double H = sg.sff().H;
  bool insufficient = false;

  for (int s = 0; s < ns; ++s) {
    const auto& R = rec[s];
    std::vector<double> un(nb), dnf(nb);
    std::vector<Vec3> unup(nb), dgf(nb), ukp(nb), piuk(nb);
    for (int i = 0; i < nb; ++i) {
      un[i] = R[i].un;
      dnf[i] = R[i].dnf;
      unup[i] = R[i].un_upar;
      dgf[i] = R[i].dnf_gradf_par;
      ukp[i] = R[i].uK_par;
      piuk[i] = R[i].pi_uK;
    }
    double t[6] = {0, 0, 0, 0, 0, 0};
    auto gun = sg.tangential_gradient(un, &t[0]);
    auto dunup = sg.tangential_divergence(unup, &t[1]);
    auto gdnf = sg.tangential_gradient(dnf, &t[2]);
    auto ddgf = sg.tangential_divergence(dgf, &t[3]);
    auto divk = sg.tangential_divergence(ukp, &t[4]);
    auto divpik = sg.tangential_divergence(piuk, &t[5]);
    for (double v : t)
      if (v > tail_limit()) insufficient = true;

    double conv = 0, kin = 0, gen = 0, gen_printed = 0, snorm = 0, scurl = 0, trace = 0;
    std::vector<double> f_kin(nb), f_divun(nb), f_conv(nb), f_piKK(nb), f_piff(nb), f_Hdn(nb), f_cross(nb),
        f_uK2(nb), f_tg(nb);
    for (int i = 0; i < nb; ++i) {
      const auto& r = R[i];
      double rhs = -r.pi_uu - H * r.un * r.un + r.un * r.divu + 2 * dot(r.upar, gun[i]) - dunup[i];
      conv = std::max(conv, std::abs(r.convn - rhs));
      kin = std::max(kin, std::abs(r.kin - r.uxwn - r.convn));
      double grf = -r.pi_ff - H * r.dnf * r.dnf + r.dnf * r.lapf + 2 * dot(r.gradf_par, gdnf[i]) - ddgf[i];
      gen = std::max(gen, std::abs(r.dn_gradf2 - 2 * grf));
      gen_printed = std::max(gen_printed, std::abs(r.dn_gradf2 - (2 * grf - r.dnf * r.lapf)));
      snorm = std::max(snorm, std::abs(r.psin - (-th * divk[i] + 2 * divpik[i])));
      scurl = std::max(scurl, std::hypot(r.curl_psi[0] - r.curl_rhs[0], r.curl_psi[1] - r.curl_rhs[1]));
      trace = std::max(trace, std::abs(r.uKn));
      f_kin[i] = r.kin;
      f_divun[i] = r.divu * r.un;
      f_conv[i] = r.convn;
      f_piKK[i] = r.pi_KK;
      f_piff[i] = r.pi_ff;
      f_Hdn[i] = H * r.dnf * r.dnf;
      f_cross[i] = dot(r.gradf_par, gdnf[i]);
      f_uK2[i] = r.uK2;
      f_tg[i] = r.tgrad_K;
    }
    const Accum& a = acc[s];
    auto& pw = out.pointwise[s];
    pw["kinetic_gradient"] = a.kinetic;
    pw["normal_convection"] = conv;
    pw["normal_kinetic"] = kin;
    pw["stokes_normal_trace"] = snorm;
    pw["stokes_curl_trace"] = scurl;
    if (!S[s].f.empty()) {
      pw["bochner"] = a.bochner;
      pw["normal_gradient_energy"] = gen;
      out.diagnostics[s]["normal_gradient_energy_printed"] = gen_printed;
    }

    double I_kin = sg.integrate(f_kin), I_divun = sg.integrate(f_divun), I_conv = sg.integrate(f_conv);
    double I_piKK = sg.integrate(f_piKK);
    auto& in = out.integral[s];
    in["laplacian_pairing"] = rel_residual(a.lap_pair, -a.grad_gen + I_kin);
    in["gradient_curl_split"] = rel_residual(a.grad_gen, a.curl_gen + a.div_gen - I_divun + I_conv);
    in["tangent_gradient_curl"] = rel_residual(a.grad_K, a.curl_K + a.div_K - I_piKK);
    if (!S[s].f.empty())
      in["hessian_laplacian"] = rel_residual(
          a.hess_f, a.lap_f - sg.integrate(f_piff) - sg.integrate(f_Hdn) + 2 * sg.integrate(f_cross));
    if (ball) {
      // P_inf u = u_K since grad g is the gradient part of u.
      in["projection_gradient"] = rel_residual(a.grad_K, a.curl_gen - I_piKK);
      double lhs = std::sqrt(std::max(0.0, a.grad_K)), rhs = std::sqrt(a.curl_gen + a.u_gen);
      in["projection_gradient_bound"] = std::max(0.0, lhs - rhs) / std::max(1.0, rhs);
      pw["projection_curl"] = a.proj_curl;
      pw["projection_divergence"] = a.proj_div;
      pw["projection_trace"] = trace;
    }

    auto& nr = out.norms[s];
    nr["u2"] = a.u_K;
    nr["grad2"] = a.grad_K;
    nr["hess2"] = a.hess_K;
    nr["lap2"] = a.lap_K;
    nr["curl2"] = a.curl_K;
    nr["curlcurl2"] = a.curlcurl_K;
    nr["boundary_tgrad2"] = th * sg.integrate(f_tg);
    nr["u_gen2"] = a.u_gen;
    nr["curl_gen2"] = a.curl_gen;
    nr["curl_N2"] = a.curl_N;
    nr["grad_N2"] = a.grad_N;
    nr["energy"] = a.grad_K + th * sg.integrate(f_uK2) - I_piKK;
    nr["energy_diagonal"] = dirichlet_form_diagonal(b, S[s].coeffs);
  }
  if (!ball) channel_projection_pass(S, b, lvl, out);
  out.resolution_insufficient = insufficient;
  return out;
}

ResidualMap check_pointwise_identities(const FieldSample& s, const EigenBasis& b, const SuiteLevel& lvl) {
  return run_suite_pass({s}, b, lvl).pointwise[0];
}

ResidualMap check_integral_identities(const FieldSample& s, const EigenBasis& b, const SuiteLevel& lvl) {
  return run_suite_pass({s}, b, lvl).integral[0];
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string level_str(const SuiteLevel& l, DomainKind k) {
  std::string s = std::to_string(l.quad.n1) + "x" + std::to_string(l.quad.n2) + "x" + std::to_string(l.quad.n3);
  if (k == DomainKind::Channel)
    s += "/grid " + std::to_string(l.gx) + "x" + std::to_string(l.gy) + "x" + std::to_string(l.gz);
  return s;
}

void max_into(ResidualMap& m, const ResidualMap& r) {
  for (const auto& [k, v] : r) {
    auto it = m.find(k);
    double x = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    if (it == m.end())
      m[k] = x;
    else
      it->second = std::max(it->second, x);
  }
}

// Residuals already at the rounding floor need not decay further.
constexpr double kDecayFloor = 1e-10;

}  // namespace

IdentityReport identity_suite(const EigenBasis& b, int count, std::uint64_t seed,
                              std::vector<InequalityReport>* fits) {
  IdentityReport rep;
  rep.domain = b.domain.name();
  rep.seed = seed;
  rep.samples = count;
  rep.coarse = default_level(b.domain);
  rep.fine = refine(rep.coarse);
  auto samples = make_samples(b, count, seed);
  auto pc = run_suite_pass(samples, b, rep.coarse);
  auto pf = run_suite_pass(samples, b, rep.fine);
  for (int s = 0; s < count; ++s) {
    max_into(rep.coarse_max, pc.pointwise[s]);
    max_into(rep.coarse_max, pc.integral[s]);
    max_into(rep.fine_max, pf.pointwise[s]);
    max_into(rep.fine_max, pf.integral[s]);
    max_into(rep.diagnostics, pf.diagnostics[s]);
  }
  rep.resolution_insufficient = pf.resolution_insufficient;
  rep.pass = !rep.resolution_insufficient;
  for (const auto& [k, fine] : rep.fine_max) {
    double coarse = rep.coarse_max[k];
    bool ok = fine <= std::max(coarse * 1e-2, kDecayFloor);
    rep.decay_ok[k] = ok;
    if (!ok || !(fine <= rep.tolerance)) rep.pass = false;
  }
  if (fits) *fits = fit_from_passes(samples, pc, pf, rep.coarse, seed);
  return rep;
}

std::string IdentityReport::json() const {
  nlohmann::json j;
  j["domain"] = domain;
  j["seed"] = seed;
  j["samples"] = samples;
  j["tolerance"] = tolerance;
  auto dk = domain == "ball" ? DomainKind::Ball : DomainKind::Channel;
  j["resolution"] = {{"coarse", level_str(coarse, dk)}, {"fine", level_str(fine, dk)}};
  for (const auto& [k, v] : fine_max)
    j["identities"][k] = {{"coarse", coarse_max.at(k)}, {"fine", v}, {"decay_ok", decay_ok.at(k)},
                          {"pass", decay_ok.at(k) && v <= tolerance}};
  for (const auto& [k, v] : diagnostics) j["diagnostics"][k] = v;
  j["resolution_insufficient"] = resolution_insufficient;
  j["pass"] = pass;
  return j.dump(2);
}

std::string InequalityReport::json() const {
  nlohmann::json j;
  j["inequality_id"] = inequality_id;
  j["samples"] = lhs.size();
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["fitted_constant"] = fitted_constant;
  j["fitted_constant_refined"] = fitted_constant_refined;
  j["rejected"] = rejected;
  j["resolution"] = resolution;
  j["seed"] = seed;
  j["stable"] = stable;
  return j.dump(2);
}

std::vector<InequalityReport> fit_from_passes(const std::vector<FieldSample>& samples, const SuitePass& coarse,
                                              const SuitePass& fine, const SuiteLevel& lvl, std::uint64_t seed) {
  using Norms = std::map<std::string, double>;
  struct Fit {
    const char* id;
    std::function<double(const Norms&)> lhs, rhs;
    bool clip;  // fitted constant floored at 0 (additive-constant forms)
  };
  auto h2 = [](const Norms& n) { return n.at("u2") + n.at("grad2") + n.at("hess2"); };
  auto lap_curl = [](const Norms& n) { return n.at("lap2") + n.at("curl2") + n.at("u2"); };
  const double eps = 0.1;
  std::vector<Fit> fits = {
      {"h2_elliptic", [](const Norms& n) { return n.at("hess2") + n.at("boundary_tgrad2"); },
       [](const Norms& n) { return n.at("lap2") + n.at("u2") + n.at("grad2"); }, false},
      {"h2_curlcurl", [&](const Norms& n) { return h2(n) + n.at("boundary_tgrad2"); },
       [](const Norms& n) { return n.at("curlcurl2") + n.at("curl2") + n.at("u2"); }, false},
      {"norm_equivalence_lower", lap_curl, h2, false},
      {"norm_equivalence_upper", h2, lap_curl, false},
      {"curl_projection", [&](const Norms& n) { return n.at("curl_N2") - (1 + eps) * n.at("energy"); },
       [](const Norms& n) { return n.at("u_gen2"); }, true},
      {"projection_stability", [](const Norms& n) { return n.at("curl_N2") + n.at("grad_N2"); },
       [](const Norms& n) { return n.at("curl_gen2") + n.at("u_gen2"); }, false},
  };
  std::vector<InequalityReport> out;
  const int ns = static_cast<int>(samples.size());
  for (const auto& sp : fits) {
    InequalityReport r;
    r.inequality_id = sp.id;
    r.seed = seed;
    r.resolution = std::to_string(lvl.quad.n1) + "x" + std::to_string(lvl.quad.n2) + "x" +
                   std::to_string(lvl.quad.n3);
    bool needs_hyp = std::string(sp.id).rfind("h2_", 0) == 0 || std::string(sp.id).rfind("norm_", 0) == 0;
    double c0 = sp.clip ? 0.0 : -std::numeric_limits<double>::infinity(), c1 = c0;
    for (int s = 0; s < ns; ++s) {
      const auto& f = samples[s];
      if (needs_hyp && !(f.divergence_free && f.tangent_on_boundary && f.satisfies_navier)) {
        r.rejected.push_back(s);
        continue;
      }
      double l = sp.lhs(coarse.norms[s]), rr = sp.rhs(coarse.norms[s]);
      r.lhs.push_back(l);
      r.rhs.push_back(rr);
      if (rr > 0) c0 = std::max(c0, l / rr);
      double lf = sp.lhs(fine.norms[s]), rf = sp.rhs(fine.norms[s]);
      if (rf > 0) c1 = std::max(c1, lf / rf);
    }
    r.fitted_constant = c0;
    r.fitted_constant_refined = c1;
    r.stable = std::isfinite(c0) && std::isfinite(c1) &&
               (std::abs(c0 - c1) <= 0.05 * std::max(std::abs(c0), std::abs(c1)) ||
                std::max(std::abs(c0), std::abs(c1)) < 1e-12);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<InequalityReport> fit_inequality_constants(const std::vector<FieldSample>& samples,
                                                       const EigenBasis& b, const SuiteLevel& lvl,
                                                       std::uint64_t seed) {
  auto pc = run_suite_pass(samples, b, lvl);
  auto pf = run_suite_pass(samples, b, refine(lvl));
  return fit_from_passes(samples, pc, pf, lvl, seed);
}

std::vector<double> truncation_energies(const EigenBasis& b, const std::vector<double>& c) {
  std::vector<double> e(b.size());
  double acc = 0;
  for (int k = 0; k < b.size(); ++k) {
    acc -= b.modes[k].lambda * c[k] * c[k];
    e[k] = acc;
  }
  return e;
}

}  // namespace slipstokes
