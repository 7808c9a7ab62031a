// Galerkin truncation of the Navier-Stokes equations on the Stokes
// eigenbasis: convection tensor, time integration, energy ledger, weak-form
// residual and the strong-solution monitor.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "stokes_spectrum.hpp"

namespace slipstokes {

struct TensorEntry {
  int k, i, j;
  double v;
};

// B_kij = int <a_k, a_i . grad a_j>, CSR over k.
struct ConvectionTensor {
  int n = 0;
  std::vector<TensorEntry> entries;  // sorted by (k, i, j)
  std::vector<int> row_start;        // size n + 1
  double skew_defect = 0;            // max |B_kij + B_jik| of the raw quadrature
  double scale = 0;                  // max |B_kij|
  double get(int k, int i, int j) const;
  int nnz() const { return static_cast<int>(entries.size()); }
};

QuadratureSpec galerkin_quadrature(const EigenBasis& b);
// Channel wavevector selection rule: kappa_k = +-kappa_i +- kappa_j. Always
// true on the ball.
bool selection_allowed(const EigenBasis& b, int k, int i, int j);
// Throws NumericError when the raw skew defect exceeds 1e-8.
ConvectionTensor assemble_convection_tensor(const EigenBasis& b);
ConvectionTensor assemble_convection_tensor(const EigenBasis& b, const QuadratureSpec& q);

// dc_k/dt = mu lambda_k c_k - sum_ij c_i c_j B_kij
void galerkin_rhs(const std::vector<double>& c, const ConvectionTensor& B, const std::vector<double>& lambda,
                  double mu, std::vector<double>& out);
// sum_k c_k sum_ij c_i c_j B_kij
double nonlinear_contraction(const std::vector<double>& c, const ConvectionTensor& B);
std::vector<double> eigenvalues(const EigenBasis& b);

// Gram matrices of the quadratic quantities in the energy ledger.
struct QuadraticForms {
  Eigen::MatrixXd grad;         // int grad a_i : grad a_j
  Eigen::MatrixXd boundary;     // int_G a_i . a_j
  Eigen::MatrixXd boundary_pi;  // int_G pi(a_i, a_j)
  Eigen::MatrixXd curl;         // int curl a_i . curl a_j
  Eigen::MatrixXd lap;          // int Lap a_i . Lap a_j
};
QuadraticForms assemble_quadratic_forms(const EigenBasis& b, const QuadratureSpec& q);

enum class Integrator { RK4, Exponential, Adaptive };
Integrator integrator_from_name(const std::string& s);
const char* integrator_name(Integrator i);

struct SimConfig {
  double mu = 0.05;
  double T = 1.0;
  double dt = 1e-3;
  Integrator integrator = Integrator::RK4;
  double rtol = 1e-10, atol = 1e-12;  // adaptive only
  int output_every = 1;               // trajectory cadence in steps
  double guard = 1e6;                 // blow-up at |c|^2 > guard |c0|^2
  std::vector<double> c0;
  void validate(int n) const;
};

enum class RunStatus { Completed, Blowup };

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> c;
  RunStatus status = RunStatus::Completed;
  double dt = 0;  // fixed-step size actually used (0 for adaptive)
};

// Every accepted step is recorded; output_every thins only the CSV.
Trajectory integrate(const EigenBasis& b, const ConvectionTensor& B, const SimConfig& cfg);
// Fixed step satisfying mu |lambda|_max dt <= 0.5 and dividing T.
double stable_dt(const EigenBasis& b, double mu, double dt, double T);

struct LedgerRow {
  double t, kinetic, grad_norm, boundary_l2, boundary_pi, identity_residual, F, rho;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
  double max_identity_residual = 0;  // pointwise energy balance, relative
  double integrated_gap = 0;         // max_t |K(t) + 2 mu int D - K(0)|
  double boundary_time_integral = 0; // int_0^T int_G |u|^2
};

EnergyLedger energy_ledger(const EigenBasis& b, const QuadraticForms& Q, const Trajectory& tr, double mu);

// Weak-form residual over [0, T] for a test field phi = sum_k d_k(t) a_k,
// d given at the trajectory times (empty means phi = 0).
double weak_form_residual(const EigenBasis& b, const QuadraticForms& Q, const Trajectory& tr, double mu,
                          const std::vector<std::vector<double>>& d, const QuadratureSpec& q);

// Comparison ODE rho' = M1 rho + M2 rho^2.
double riccati_solution(double M1, double M2, double rho0, double t);
double riccati_blowup_time(double M1, double M2, double rho0);

struct StrongMonitor {
  std::vector<double> F, dF, rho;
  double M = 0;     // fitted M1 = M2: max over t of F' / (F + F^2), floored at 0
  double rho0 = 0;  // = F(0)
  double blowup_time = 0;
  bool bounded = false;  // F <= rho on [0, min(T, blowup_time))
};

// F = ||(psi, u, u_t)||^2 with psi = -Lap u^N and u_t from the Galerkin RHS;
// dF/dt exact through the RHS Jacobian.
StrongMonitor strong_monitor(const EigenBasis& b, const ConvectionTensor& B, const QuadraticForms& Q,
                             const Trajectory& tr, double mu);
void attach_monitor(EnergyLedger& led, const StrongMonitor& m);

void write_trajectory_csv(const std::string& path, const Trajectory& tr, int every = 1);
void write_ledger_csv(const std::string& path, const EnergyLedger& led);

// Lagrange weights on nonuniform nodes (exposed for tests).
std::vector<double> derivative_weights(const std::vector<double>& x, double at);
std::vector<double> interval_weights(const std::vector<double>& x, double a, double b);
// Derivative at every sample (5-point windows) and cumulative integral
// (cubic windows), both fourth order.
std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& f);
std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f);

}  // namespace slipstokes
