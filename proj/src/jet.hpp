// Truncated multivariate Taylor polynomials in (x, y, z).
//
// A Jet<P> holds the Taylor coefficients of a smooth function about a point,
// up to total degree P. Arithmetic propagates them exactly (up to rounding),
// which gives all partial derivatives of composite expressions without
// finite differences.
#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace slipstokes {

constexpr int jet_size(int p) { return (p + 1) * (p + 2) * (p + 3) / 6; }

template <int P>
struct JetTable {
  static constexpr int N = jet_size(P);
  std::array<std::array<int, 3>, N> exps{};
  std::array<double, N> fact{};  // a! b! c!
  int idx[P + 1][P + 1][P + 1];
  struct Term {
    int a, b, c;
  };
  std::vector<Term> mul;  // c[idx(e_a + e_b)] += x[a] * y[b]

  JetTable() {
    for (auto& p : idx)
      for (auto& q : p)
        for (int& r : q) r = -1;
    int n = 0;
    for (int d = 0; d <= P; ++d)
      for (int i = d; i >= 0; --i)
        for (int j = d - i; j >= 0; --j) {
          int k = d - i - j;
          exps[n] = {i, j, k};
          idx[i][j][k] = n;
          fact[n] = factorial(i) * factorial(j) * factorial(k);
          ++n;
        }
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        int i = exps[a][0] + exps[b][0], j = exps[a][1] + exps[b][1],
            k = exps[a][2] + exps[b][2];
        if (i + j + k <= P) mul.push_back({a, b, idx[i][j][k]});
      }
  }
  static double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  }
  static const JetTable& get() {
    static const JetTable t;
    return t;
  }
};

template <int P>
struct Jet {
  static constexpr int N = jet_size(P);
  std::array<double, N> c{};

  Jet() = default;
  explicit Jet(double v) { c[0] = v; }

  static Jet variable(int axis, double v) {
    Jet j(v);
    if constexpr (P >= 1) j.c[1 + axis] = 1.0;
    return j;
  }
  double value() const { return c[0]; }

  // Partial derivative d^(i+j+k) / dx^i dy^j dz^k at the expansion point.
  double d(int i, int j, int k) const {
    const auto& t = JetTable<P>::get();
    int n = t.idx[i][j][k];
    return c[n] * t.fact[n];
  }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < N; ++i) c[i] += o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& v : c) v *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c[0] += s;
    return *this;
  }
  // this += s * o
  void axpy(double s, const Jet& o) {
    for (int i = 0; i < N; ++i) c[i] += s * o.c[i];
  }
};

template <int P>
Jet<P> operator+(Jet<P> a, const Jet<P>& b) { return a += b; }
template <int P>
Jet<P> operator-(Jet<P> a, const Jet<P>& b) { return a -= b; }
template <int P>
Jet<P> operator-(Jet<P> a) { return a *= -1.0; }
template <int P>
Jet<P> operator*(Jet<P> a, double s) { return a *= s; }
template <int P>
Jet<P> operator*(double s, Jet<P> a) { return a *= s; }
template <int P>
Jet<P> operator+(Jet<P> a, double s) { return a += s; }

template <int P>
Jet<P> operator*(const Jet<P>& x, const Jet<P>& y) {
  Jet<P> r;
  for (const auto& t : JetTable<P>::get().mul) r.c[t.c] += x.c[t.a] * y.c[t.b];
  return r;
}

// f(a) given the derivatives f^(k)(a0), k = 0..P, at a0 = a.value().
template <int P>
Jet<P> compose(const Jet<P>& a, const double* dk) {
  Jet<P> h = a;
  h.c[0] = 0;
  Jet<P> r(dk[0]);
  Jet<P> pw = h;
  double kf = 1;
  for (int k = 1; k <= P; ++k) {
    kf *= k;
    r.axpy(dk[k] / kf, pw);
    if (k < P) pw = pw * h;
  }
  return r;
}

template <int P>
Jet<P> cos(const Jet<P>& a) {
  double d[P + 1], s = std::sin(a.value()), co = std::cos(a.value());
  for (int k = 0; k <= P; ++k) {
    switch (k % 4) {
      case 0: d[k] = co; break;
      case 1: d[k] = -s; break;
      case 2: d[k] = -co; break;
      default: d[k] = s; break;
    }
  }
  return compose(a, d);
}

template <int P>
Jet<P> sin(const Jet<P>& a) {
  double d[P + 1], s = std::sin(a.value()), co = std::cos(a.value());
  for (int k = 0; k <= P; ++k) {
    switch (k % 4) {
      case 0: d[k] = s; break;
      case 1: d[k] = co; break;
      case 2: d[k] = -s; break;
      default: d[k] = -co; break;
    }
  }
  return compose(a, d);
}

template <int P>
Jet<P> exp(const Jet<P>& a) {
  double d[P + 1], e = std::exp(a.value());
  for (int k = 0; k <= P; ++k) d[k] = e;
  return compose(a, d);
}

// Derivative along one axis, dropping the top degree.
template <int P>
Jet<P - 1> diff(const Jet<P>& a, int axis) {
  const auto& hi = JetTable<P>::get();
  const auto& lo = JetTable<P - 1>::get();
  Jet<P - 1> r;
  for (int n = 0; n < Jet<P - 1>::N; ++n) {
    auto e = lo.exps[n];
    e[axis] += 1;
    r.c[n] = hi.idx[e[0]][e[1]][e[2]] >= 0 ? e[axis] * a.c[hi.idx[e[0]][e[1]][e[2]]] : 0.0;
  }
  return r;
}

// Drop the top degrees.
template <int Q, int P>
Jet<Q> truncate(const Jet<P>& a) {
  static_assert(Q <= P);
  Jet<Q> r;
  for (int n = 0; n < Jet<Q>::N; ++n) r.c[n] = a.c[n];
  return r;
}

template <int P>
using VecJet = std::array<Jet<P>, 3>;

template <int P>
VecJet<P> cross(const VecJet<P>& a, const VecJet<P>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace slipstokes
