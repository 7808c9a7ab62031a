#include "chebyshev.hpp"

#include <cmath>

namespace slipstokes::cheb {

std::vector<double> nodes(int n) {
  std::vector<double> z(n + 1);
  for (int j = 0; j <= n; ++j) z[j] = 0.5 * (1 - std::cos(M_PI * j / n));
  return z;
}

Eigen::MatrixXd diff_matrix(int n) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
  auto c = [&](int i) { return (i == 0 || i == n ? 2.0 : 1.0) * (i % 2 ? -1.0 : 1.0); };
  // z_i - z_j in product form avoids cancellation between nearby nodes.
  auto dz = [&](int i, int j) { return std::sin(M_PI * (i + j) / (2.0 * n)) * std::sin(M_PI * (i - j) / (2.0 * n)); };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (i != j) D(i, j) = c(i) / (c(j) * dz(i, j));
  for (int i = 0; i <= n; ++i) D(i, i) = -D.row(i).sum();
  return D;
}

std::vector<double> cc_weights(int n) {
  // Trefethen's clencurt on [-1, 1], halved for [0, 1]; symmetric so the
  // ascending ordering needs no flip.
  std::vector<double> w(n + 1, 0.0);
  std::vector<double> v(n - 1, 1.0);
  auto theta = [&](int j) { return M_PI * j / n; };
  if (n % 2 == 0) {
    w[0] = w[n] = 1.0 / (n * n - 1.0);
    for (int i = 1; i < n; ++i) {
      double s = 1;
      for (int k = 1; k < n / 2; ++k) s -= 2 * std::cos(2 * k * theta(i)) / (4.0 * k * k - 1);
      s -= std::cos(n * theta(i)) / (n * n - 1.0);
      w[i] = 2 * s / n;
    }
  } else {
    w[0] = w[n] = 1.0 / (n * n);
    for (int i = 1; i < n; ++i) {
      double s = 1;
      for (int k = 1; k <= (n - 1) / 2; ++k) s -= 2 * std::cos(2 * k * theta(i)) / (4.0 * k * k - 1);
      w[i] = 2 * s / n;
    }
  }
  for (double& x : w) x *= 0.5;
  return w;
}

Eigen::MatrixXd vandermonde(int n) {
  auto z = nodes(n);
  Eigen::MatrixXd V(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) {
    double t = 2 * z[j] - 1;
    double a = 1, b = t;
    for (int p = 0; p <= n; ++p) {
      if (p == 0) {
        V(j, p) = 1;
      } else if (p == 1) {
        V(j, p) = t;
      } else {
        double c = 2 * t * b - a;
        a = b;
        b = c;
        V(j, p) = c;
      }
    }
  }
  return V;
}

Eigen::MatrixXd second_derivative_coeffs(int n) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    double ck = k == 0 ? 2.0 : 1.0;
    for (int p = k + 2; p <= n; p += 2) M(k, p) = 4.0 * p * (p * p - k * k) / ck;  // factor 4 from d/dz = 2 d/dt
  }
  return M;
}

Eigen::RowVectorXd derivative_row(int n, bool top) {
  Eigen::RowVectorXd r(n + 1);
  for (int p = 0; p <= n; ++p) {
    double v = static_cast<double>(p) * p;
    if (!top && p % 2 == 0) v = -v;
    r(p) = 2 * v;
  }
  return r;
}

Eigen::RowVectorXd integral_row(int n) {
  Eigen::RowVectorXd r(n + 1);
  for (int p = 0; p <= n; ++p) r(p) = p % 2 ? 0.0 : 0.5 * 2.0 / (1.0 - static_cast<double>(p) * p);
  return r;
}

Eigen::VectorXd derivative_coeffs(const Eigen::VectorXd& a) {
  const int n = static_cast<int>(a.size()) - 1;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (int k = n - 1; k >= 0; --k) b(k) = (k + 2 <= n ? b(k + 2) : 0.0) + 2.0 * (k + 1) * a(k + 1);
  b(0) *= 0.5;
  return 2.0 * b;  // d/dz = 2 d/dt
}

}  // namespace slipstokes::cheb
