#pragma once

#include <Eigen/Core>
#include <utility>

#include "icon/grid.hpp"

namespace icon {

enum class OdeFamily { Ode1, Ode2, Ode3, NewOde };

// du/dt = rhs(u, c(t)) on [0,1]. Which coefficients are read depends on
// the family; the rest stay zero.
//   Ode1:   u' = a1 c(t) + a2
//   Ode2:   u' = a1 c(t) u + a2
//   Ode3:   u' = a1 u + a2 c(t) + a3
//   NewOde: u' = a1 u c(t) + b u + a2
struct OdeParams {
  OdeFamily family = OdeFamily::Ode1;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, b = 0.0;
};

enum class BvpFamily { Poisson, LinearRd, NonlinearRd };

struct BvpParams {
  BvpFamily family = BvpFamily::Poisson;
  double u0 = 0.0, u1 = 0.0;
  double a = 1.0, c_const = 0.0, k_const = 0.0;
  // lambda is fixed per family: 0.05 (linear RD), 0.1 (nonlinear RD).
  double lambda() const { return family == BvpFamily::LinearRd ? 0.05 : 0.1; }
};

// Damped oscillator u(t) = A sin(2*pi*t/T + eta) exp(-k t).
struct OscParams {
  double amplitude = 1.0;
  double period = 1.0;
  double phase = 0.0;
  double damping = 0.0;
};

// RK4 integration of the family ODE on the grid, c linearly interpolated
// between its samples, `substeps` RK4 steps per grid interval.
Eigen::VectorXd solve_ode_forward(const OdeParams& params, double u0,
                                  const Eigen::VectorXd& c, const Grid1D& grid,
                                  int substeps = 10);

Eigen::VectorXd oscillator(const OscParams& params, const Eigen::VectorXd& ts);

// u'' = c on [0,1] with Dirichlet data, central differences + Thomas solve.
Eigen::VectorXd solve_poisson(const Eigen::VectorXd& c, const Grid1D& grid,
                              double u0, double u1);

// -lambda a u'' + k(x) u = c with Dirichlet data.
Eigen::VectorXd solve_linear_rd(const Eigen::VectorXd& k, const Grid1D& grid,
                                const BvpParams& params);

// Manufactured pair for the nonlinear RD equation: shift the GP draw
// affinely to meet the boundary data, then evaluate c = -lambda a u'' + k u^3
// pointwise. Returns (u, c).
std::pair<Eigen::VectorXd, Eigen::VectorXd> nonlinear_rd_construct(
    const Eigen::VectorXd& u_hat, const Grid1D& grid, const BvpParams& params);

// Second derivative: central stencil inside, second-order one-sided at the ends.
Eigen::VectorXd second_derivative(const Eigen::VectorXd& v, double dx);

// Tridiagonal (Thomas) solve; diag/lower/upper are modified copies internally.
Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& lower, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& upper, const Eigen::VectorXd& rhs);

}  // namespace icon
