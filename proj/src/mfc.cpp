#include "icon/mfc.hpp"

#include <cmath>

#include "icon/ode_solvers.hpp"
#include "icon/stochastic.hpp"

namespace icon {

void MfcProblem::validate() const {
  if (n_t < 2 || n_x < 4) throw InvalidInputError("MfcProblem: grid too small");
  if (g.size() != n_x || rho0.size() != n_x)
    throw InvalidInputError("MfcProblem: g/rho0 size != n_x");
  if (!(c_coef > 0.0) || !(mu > 0.0))
    throw InvalidInputError("MfcProblem: c_coef and mu must be > 0");
  if (rho0.minCoeff() < 0.0) throw InvalidInputError("MfcProblem: rho0 must be nonnegative");
  if (std::abs(periodic_integral(rho0, dx()) - 1.0) > 1e-6)
    throw InvalidInputError("MfcProblem: rho0 must integrate to 1");
}

namespace {

// Solve the cyclic tridiagonal system with constant stencil
// (off, diag, off) and wrap-around corners `off`, via Sherman-Morrison.
Eigen::VectorXd solve_cyclic_constant(double off, double diag, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = rhs.size();
  // Perturbed system: subtract gamma at (0,0) and diag' at (n-1,n-1).
  const double gamma = -diag;  // conventional choice, keeps pivots away from 0
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(n - 1, off);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(n - 1, off);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(n, diag);
  d[0] -= gamma;
  d[n - 1] -= off * off / gamma;
  const Eigen::VectorXd y = solve_tridiagonal(lower, d, upper, rhs);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u[0] = gamma;
  u[n - 1] = off;
  const Eigen::VectorXd z = solve_tridiagonal(lower, d, upper, u);
  const double vy = y[0] + (off / gamma) * y[n - 1];
  const double vz = z[0] + (off / gamma) * z[n - 1];
  return y - z * (vy / (1.0 + vz));
}

}  // namespace

Eigen::VectorXd heat_step_periodic(const Eigen::VectorXd& v, double mu, double dt, double dx) {
  const Eigen::Index n = v.size();
  if (n < 4) throw InvalidInputError("heat_step_periodic: grid too small");
  const double a = 0.5 * mu * dt / (dx * dx);
  // rhs = (I + a L) v with periodic Laplacian L.
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double vm = v[(i + n - 1) % n];
    const double vp = v[(i + 1) % n];
    rhs[i] = v[i] + a * (vm - 2.0 * v[i] + vp);
  }
  // Solve (I - a L) v_new = rhs.
  return solve_cyclic_constant(-a, 1.0 + 2.0 * a, rhs);
}

MfcSolution solve_mfc(const MfcProblem& p) {
  p.validate();
  const int nt = p.n_t, nx = p.n_x;
  const double dt = p.dt(), dx = p.dx();
  const double scale = 2.0 * p.mu * p.c_coef;

  MfcSolution sol;
  sol.psi.resize(nt, nx);
  sol.psi_hat.resize(nt, nx);
  sol.rho.resize(nt, nx);

  // psi(1,.) = exp(-g/(2 mu c)); backward heat flow is a forward CN sweep
  // on the time-reversed variable.
  sol.psi.row(nt - 1) = (-p.g.array() / scale).exp().transpose();
  for (int j = nt - 2; j >= 0; --j)
    sol.psi.row(j) = heat_step_periodic(sol.psi.row(j + 1).transpose(), p.mu, dt, dx).transpose();

  if (sol.psi.row(0).minCoeff() < 1e-12)
    throw NumericalError("solve_mfc: psi(0,.) underflow, terminal cost too extreme");

  sol.psi_hat.row(0) = (p.rho0.array() / sol.psi.row(0).transpose().array()).transpose();
  for (int j = 1; j < nt; ++j)
    sol.psi_hat.row(j) = heat_step_periodic(sol.psi_hat.row(j - 1).transpose(), p.mu, dt, dx).transpose();

  sol.rho = sol.psi.cwiseProduct(sol.psi_hat).cwiseMax(0.0);
  sol.rho.row(0) = p.rho0.transpose();  // exact by construction; avoids (a/b)*b rounding
  return sol;
}

}  // namespace icon
