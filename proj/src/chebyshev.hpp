// Chebyshev utilities on [0, 1] with Gauss-Lobatto nodes in ascending order.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace slipstokes::cheb {

// z_j = (1 - cos(pi j / n)) / 2, j = 0..n.
std::vector<double> nodes(int n);
// First-derivative collocation matrix.
Eigen::MatrixXd diff_matrix(int n);
// Clenshaw-Curtis weights for the nodes above.
std::vector<double> cc_weights(int n);
// V(j, p) = T_p(t_j), t = 2z - 1; V maps coefficients to nodal values.
Eigen::MatrixXd vandermonde(int n);
// Coefficients of d^2/dz^2 in the T_p basis.
Eigen::MatrixXd second_derivative_coeffs(int n);
// Rows r with r . a = f'(z0) for z0 = 0 and z0 = 1.
Eigen::RowVectorXd derivative_row(int n, bool top);
// Row with r . a = integral of f over [0, 1].
Eigen::RowVectorXd integral_row(int n);
// Chebyshev coefficients of d/dz of the series with coefficients a.
Eigen::VectorXd derivative_coeffs(const Eigen::VectorXd& a);

}  // namespace slipstokes::cheb
