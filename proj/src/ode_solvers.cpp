#include "icon/ode_solvers.hpp"

#include <cmath>

#include "icon/errors.hpp"

namespace icon {

namespace {

double ode_rhs(const OdeParams& p, double u, double c) {
  switch (p.family) {
    case OdeFamily::Ode1:
      return p.a1 * c + p.a2;
    case OdeFamily::Ode2:
      return p.a1 * c * u + p.a2;
    case OdeFamily::Ode3:
      return p.a1 * u + p.a2 * c + p.a3;
    case OdeFamily::NewOde:
      return p.a1 * u * c + p.b * u + p.a2;
  }
  return 0.0;
}

// Linear interpolation of the sampled c within grid interval i.
double interp_c(const Eigen::VectorXd& c, int i, double frac) {
  if (i + 1 >= c.size()) return c[c.size() - 1];
  return c[i] * (1.0 - frac) + c[i + 1] * frac;
}

}  // namespace

Eigen::VectorXd solve_ode_forward(const OdeParams& params, double u0,
                                  const Eigen::VectorXd& c, const Grid1D& grid,
                                  int substeps) {
  if (c.size() != grid.n) throw InvalidInputError("solve_ode_forward: c size != grid.n");
  if (!c.allFinite() || !std::isfinite(u0))
    throw InvalidInputError("solve_ode_forward: non-finite input");
  if (substeps < 1) throw InvalidInputError("solve_ode_forward: substeps < 1");

  const double dt = grid.dx();
  const double h = dt / substeps;
  Eigen::VectorXd u(grid.n);
  u[0] = u0;
  double y = u0;
  for (int i = 0; i + 1 < grid.n; ++i) {
    for (int s = 0; s < substeps; ++s) {
      const double f0 = double(s) / substeps;
      const double f1 = (double(s) + 0.5) / substeps;
      const double f2 = double(s + 1) / substeps;
      const double c0 = interp_c(c, i, f0);
      const double cm = interp_c(c, i, f1);
      const double c1 = interp_c(c, i, f2);
      const double k1 = ode_rhs(params, y, c0);
      const double k2 = ode_rhs(params, y + 0.5 * h * k1, cm);
      const double k3 = ode_rhs(params, y + 0.5 * h * k2, cm);
      const double k4 = ode_rhs(params, y + h * k3, c1);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!std::isfinite(y) || std::abs(y) > 1e12)
      throw NumericalError("solve_ode_forward: integration diverged");
    u[i + 1] = y;
  }
  return u;
}

Eigen::VectorXd oscillator(const OscParams& params, const Eigen::VectorXd& ts) {
  const double omega = 2.0 * M_PI / params.period;
  return params.amplitude *
         (omega * ts.array() + params.phase).sin() * (-params.damping * ts.array()).exp();
}

Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& lower, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& upper, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  if (lower.size() != n - 1 || upper.size() != n - 1 || rhs.size() != n)
    throw InvalidInputError("solve_tridiagonal: inconsistent sizes");
  Eigen::VectorXd cp(n - 1), dp(n);
  double den = diag[0];
  if (den == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
  cp[0] = upper[0] / den;
  dp[0] = rhs[0] / den;
  for (Eigen::Index i = 1; i < n; ++i) {
    den = diag[i] - lower[i - 1] * cp[i - 1];
    if (den == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
    if (i < n - 1) cp[i] = upper[i] / den;
    dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / den;
  }
  Eigen::VectorXd x(n);
  x[n - 1] = dp[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

Eigen::VectorXd solve_poisson(const Eigen::VectorXd& c, const Grid1D& grid,
                              double u0, double u1) {
  if (c.size() != grid.n) throw InvalidInputError("solve_poisson: c size != grid.n");
  if (grid.n < 3) throw InvalidInputError("solve_poisson: n < 3");
  const int m = grid.n - 2;  // interior unknowns
  const double h2 = grid.dx() * grid.dx();
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(m - 1, 1.0);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(m, -2.0);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(m - 1, 1.0);
  Eigen::VectorXd rhs = h2 * c.segment(1, m);
  rhs[0] -= u0;
  rhs[m - 1] -= u1;
  Eigen::VectorXd u(grid.n);
  u[0] = u0;
  u[grid.n - 1] = u1;
  u.segment(1, m) = solve_tridiagonal(lower, diag, upper, rhs);
  return u;
}

Eigen::VectorXd solve_linear_rd(const Eigen::VectorXd& k, const Grid1D& grid,
                                const BvpParams& params) {
  if (k.size() != grid.n) throw InvalidInputError("solve_linear_rd: k size != grid.n");
  if (grid.n < 3) throw InvalidInputError("solve_linear_rd: n < 3");
  if (!(params.a > 0.0)) throw InvalidInputError("solve_linear_rd: a must be > 0");
  const int m = grid.n - 2;
  const double h2 = grid.dx() * grid.dx();
  const double nu = params.lambda() * params.a;  // diffusion weight
  // -nu (u[i-1] - 2u[i] + u[i+1])/h2 + k[i] u[i] = c
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(m - 1, -nu / h2);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(m - 1, -nu / h2);
  Eigen::VectorXd diag(m);
  for (int i = 0; i < m; ++i) diag[i] = 2.0 * nu / h2 + k[i + 1];
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(m, params.c_const);
  rhs[0] += nu / h2 * params.u0;
  rhs[m - 1] += nu / h2 * params.u1;
  Eigen::VectorXd u(grid.n);
  u[0] = params.u0;
  u[grid.n - 1] = params.u1;
  u.segment(1, m) = solve_tridiagonal(lower, diag, upper, rhs);
  return u;
}

Eigen::VectorXd second_derivative(const Eigen::VectorXd& v, double dx) {
  const Eigen::Index n = v.size();
  if (n < 3) throw InvalidInputError("second_derivative: n < 3");
  const double h2 = dx * dx;
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
  if (n >= 4) {
    // Second-order one-sided stencils.
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
  } else {
    d[0] = d[1];
    d[n - 1] = d[1];
  }
  return d;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> nonlinear_rd_construct(
    const Eigen::VectorXd& u_hat, const Grid1D& grid, const BvpParams& params) {
  if (u_hat.size() != grid.n) throw InvalidInputError("nonlinear_rd_construct: size mismatch");
  if (grid.n < 3) throw InvalidInputError("nonlinear_rd_construct: n < 3");
  const Eigen::VectorXd xs = grid.points();
  const double alpha = params.u0 - u_hat[0];
  const double beta = (params.u1 - u_hat[grid.n - 1]) - alpha;
  Eigen::VectorXd u = u_hat.array() + alpha + beta * xs.array();
  const Eigen::VectorXd upp = second_derivative(u, grid.dx());
  Eigen::VectorXd c =
      -params.lambda() * params.a * upp.array() + params.k_const * u.array().cube();
  return {std::move(u), std::move(c)};
}

}  // namespace icon
