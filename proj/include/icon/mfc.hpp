#pragma once

#include <Eigen/Core>

#include "icon/errors.hpp"

namespace icon {

// Mean-field control problem on [0,1] (time) x [0,1] (space, periodic):
//   inf_{rho,m}  integral c m^2/(2 rho) dx dt + integral g(x) rho(1,x) dx
//   s.t.  rho_t + m_x = mu rho_xx,  rho(0,.) = rho0.
// Space grid: n_x points, right endpoint omitted (periodic). Time grid: n_t
// points including both ends.
struct MfcProblem {
  Eigen::VectorXd g;     // terminal cost on the x-grid, zero spatial mean
  Eigen::VectorXd rho0;  // initial density, nonnegative, integral 1
  double c_coef = 20.0;
  double mu = 0.02;
  int n_t = 51;
  int n_x = 100;

  double dt() const { return 1.0 / (n_t - 1); }
  double dx() const { return 1.0 / n_x; }
  void validate() const;
};

struct MfcSolution {
  Eigen::MatrixXd rho;      // n_t x n_x, clipped to >= 0
  Eigen::MatrixXd psi;      // Hopf-Cole factors, kept for diagnostics
  Eigen::MatrixXd psi_hat;
};

// One Crank-Nicolson step of v_t = mu v_xx on the periodic grid
// (cyclic tridiagonal system, Sherman-Morrison correction).
Eigen::VectorXd heat_step_periodic(const Eigen::VectorXd& v, double mu, double dt, double dx);

// Hopf-Cole factorization:
//   psi(1,.) = exp(-g/(2 mu c)), heat flow backward to t=0,
//   psi_hat(0,.) = rho0/psi(0,.), heat flow forward,
//   rho = psi .* psi_hat.
MfcSolution solve_mfc(const MfcProblem& p);

struct PdhgOptions {
  int max_iters = 200000;
  int check_every = 200;
  double gap_tol = 1e-5;  // relative duality-gap target
};

struct PdhgResult {
  Eigen::MatrixXd rho;  // n_t x n_x including the fixed initial slice
  bool converged = false;
  int iters = 0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;  // primal_obj - dual_obj at termination
};

// Independent Chambolle-Pock solve of the discretized convex program in
// (rho, m). Verification oracle for small grids only (n_t * n_x <= ~500).
PdhgResult pdhg_oracle(const MfcProblem& p, const PdhgOptions& opts = {});

}  // namespace icon
