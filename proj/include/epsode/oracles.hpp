#pragma once

#include "epsode/constraints.hpp"
#include "epsode/loss.hpp"

namespace epsode::oracle {

// Reference solvers for testing. They are slow, meant for small problems,
// and share no numerical kernels with the path solver.

struct OracleResult {
  Vector solution;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
};

struct AdmmOptions {
  double tol = 1e-10;
  long max_iterations = 200000;
};

/// Minimizer of f(b) + rho ||V b - d||_1 + rho ||W b - e||_+ at fixed rho.
/// Alternating direction method of multipliers on the split z = U b - c.
/// Throws ErrorCode::no_convergence.
OracleResult prox_grad_fixed_rho(const LossModel& m, const ConstraintSystem& cs, double rho,
                                 const AdmmOptions& opts = {});

/// Minimizer of f subject to V b = d and W b <= e (same splitting).
OracleResult constrained_solve(const LossModel& m, const ConstraintSystem& cs,
                               const AdmmOptions& opts = {});

/// Pool-adjacent-violators solution of min 1/2 ||b - y||^2 under a monotone order.
Vector pava(const Vector& y, bool nondecreasing = true);

/// Graphical lasso by blockwise coordinate descent:
/// min -log det(Omega) + tr(S Omega) + rho sum_{i>j} |omega_ij|,
/// diagonal unpenalized. Returns Omega. Throws ErrorCode::no_convergence.
Matrix glasso_coordinate(const SymMatrix& sigma_hat, double rho, double gap_tol = 1e-10);

/// Same objective for p = 2 by a shrinking three-parameter grid.
Matrix glasso_grid_2x2(const SymMatrix& sigma_hat, double rho);

/// Adaptive Simpson quadrature of int_0^1 (1-t)^a t^b exp((1-t) r + t s) dt to
/// absolute error tol (and about 1e-12 relative for small integrals).
double quadrature_j(int a, int b, double r, double s, double tol = 1e-11);

struct KktReport {
  double stationarity = 0.0;    // ||grad f + V'mu + W_A' lambda||_inf, lambda >= 0
  double feasibility = 0.0;     // max(|V b - d|, (W b - e)_+)
  double complementarity = 0.0; // max lambda_j |w_j'b - e_j|
  Vector multipliers;           // lambda over all inequality rows (0 off the active set)
};

/// First-order conditions of min f s.t. V b = d, W b <= e at b; rows with
/// w_j'b - e_j >= -active_tol carry multipliers (nonnegative least squares).
KktReport kkt_residual(const LossModel& m, const ConstraintSystem& cs, const Vector& b,
                       double active_tol = 1e-7);

}  // namespace epsode::oracle
