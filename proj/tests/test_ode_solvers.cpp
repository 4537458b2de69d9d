#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "icon/errors.hpp"
#include "icon/ode_solvers.hpp"
#include "icon/rng.hpp"
#include "icon/stochastic.hpp"

using namespace icon;

namespace {

// Integrating-factor oracle for the three linear-in-u ODE families,
//   u' = p(t) u + s(t),  u(t) = e^{P(t)} (u0 + int_0^t s e^{-P}),
// with c linearly interpolated between samples, evaluated by fine composite
// Simpson quadrature. Independent of the RK4 implementation path.
Eigen::VectorXd integrating_factor_oracle(const OdeParams& params, double u0,
                                          const Eigen::VectorXd& c, const Grid1D& grid,
                                          int fine = 64) {
  const auto cval = [&](double t) {
    const double h = grid.dx();
    const double s = std::clamp(t / h, 0.0, double(grid.n - 1));
    const int i = std::min(int(s), grid.n - 2);
    const double f = s - i;
    return c[i] * (1.0 - f) + c[i + 1] * f;
  };
  const auto pcoef = [&](double t) {
    switch (params.family) {
      case OdeFamily::Ode1:
        return 0.0;
      case OdeFamily::Ode2:
        return params.a1 * cval(t);
      case OdeFamily::Ode3:
        return params.a1;
      case OdeFamily::NewOde:
        return params.a1 * cval(t) + params.b;
    }
    return 0.0;
  };
  const auto scoef = [&](double t) {
    switch (params.family) {
      case OdeFamily::Ode1:
        return params.a1 * cval(t) + params.a2;
      case OdeFamily::Ode2:
        return params.a2;
      case OdeFamily::Ode3:
        return params.a2 * cval(t) + params.a3;
      case OdeFamily::NewOde:
        return params.a2;
    }
    return 0.0;
  };

  // March interval by interval with composite Simpson on both integrals.
  Eigen::VectorXd u(grid.n);
  u[0] = u0;
  double bigP = 0.0;       // P(t) at the left node
  double integral = 0.0;   // int_0^t s e^{-P}
  for (int i = 0; i + 1 < grid.n; ++i) {
    const double t0 = grid.lo + i * grid.dx();
    const double h = grid.dx() / fine;
    for (int k = 0; k < fine; ++k) {
      const double a = t0 + k * h, m = a + 0.5 * h, b2 = a + h;
      const double Pa = bigP;
      const double Pm = Pa + (h / 12.0) * (pcoef(a) + 4.0 * pcoef(0.5 * (a + m)) + pcoef(m));
      const double Pb = Pa + (h / 6.0) * (pcoef(a) + 4.0 * pcoef(m) + pcoef(b2));
      integral += (h / 6.0) * (scoef(a) * std::exp(-Pa) + 4.0 * scoef(m) * std::exp(-Pm) +
                               scoef(b2) * std::exp(-Pb));
      bigP = Pb;
    }
    u[i + 1] = std::exp(bigP) * (u0 + integral);
  }
  return u;
}

}  // namespace

TEST_CASE("ODE1 constant rate") {
  Grid1D grid(50, 0, 1);
  OdeParams p{OdeFamily::Ode1, 1.0, 0.5};
  Eigen::VectorXd c = Eigen::VectorXd::Zero(50);
  Eigen::VectorXd u = solve_ode_forward(p, 1.0, c, grid);
  Eigen::VectorXd t = grid.points();
  CHECK((u - (1.0 + 0.5 * t.array()).matrix()).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("ODE3 exponential decay") {
  Grid1D grid(50, 0, 1);
  OdeParams p{OdeFamily::Ode3, -1.0, 0.0, 0.0};
  Eigen::VectorXd c = Eigen::VectorXd::Zero(50);
  Eigen::VectorXd u = solve_ode_forward(p, 1.0, c, grid);
  Eigen::VectorXd t = grid.points();
  CHECK((u.array() - (-t.array()).exp()).abs().maxCoeff() < 1e-8);
}

TEST_CASE("ODE families vs integrating-factor oracle") {
  Grid1D grid(50, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  SeedTree root(2024);
  for (int rep = 0; rep < 5; ++rep) {
    Rng rng = root.child("rep", rep).rng();
    Eigen::VectorXd c = sample_gp(grid.points(), spec, rng);
    const double u0 = rng.uniform(-1, 1);
    OdeParams p2{OdeFamily::Ode2, rng.uniform(0.5, 1.5), rng.uniform(-1, 1)};
    Eigen::VectorXd u = solve_ode_forward(p2, u0, c, grid);
    Eigen::VectorXd ref = integrating_factor_oracle(p2, u0, c, grid);
    const double rel = (u - ref).lpNorm<Eigen::Infinity>() / ref.lpNorm<Eigen::Infinity>();
    CHECK(rel < 1e-6);
  }
}

TEST_CASE("RK4 convergence order") {
  Grid1D grid(50, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Rng rng(31);
  Eigen::VectorXd c = sample_gp(grid.points(), spec, rng);
  OdeParams p{OdeFamily::Ode2, 1.2, 0.4};
  Eigen::VectorXd ref = integrating_factor_oracle(p, 0.5, c, grid, 256);
  const double e_coarse = (solve_ode_forward(p, 0.5, c, grid, 2) - ref).lpNorm<Eigen::Infinity>();
  const double e_fine = (solve_ode_forward(p, 0.5, c, grid, 4) - ref).lpNorm<Eigen::Infinity>();
  const double ratio = e_coarse / e_fine;
  CHECK(ratio > 8.0);
  CHECK(ratio < 32.0);
}

TEST_CASE("oscillator closed form") {
  Eigen::VectorXd t0(1);
  t0 << 0.0;
  CHECK(oscillator({1.0, 1.0, 0.0, 0.5}, t0)[0] == doctest::Approx(0.0));

  Eigen::VectorXd ts = Grid1D(101, 0, 1).points();
  Eigen::VectorXd u = oscillator({1.0, 0.3, 1.1, 0.0}, ts);
  CHECK(u.lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);

  Eigen::VectorXd t1(1);
  t1 << 1.0;
  CHECK(oscillator({1.0, 0.1, M_PI / 2, 2.0}, t1)[0] ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("Poisson solver") {
  Grid1D grid(100, 0, 1);
  Eigen::VectorXd x = grid.points();

  Eigen::VectorXd u = solve_poisson(Eigen::VectorXd::Zero(100), grid, -0.5, 1.5);
  CHECK((u.array() - (-0.5 + 2.0 * x.array())).abs().maxCoeff() < 1e-12);

  u = solve_poisson(Eigen::VectorXd::Constant(100, 2.0), grid, 0.0, 0.0);
  CHECK((u.array() - (x.array().square() - x.array())).abs().maxCoeff() < 1e-10);
}

TEST_CASE("Poisson second-order convergence") {
  const auto err = [](int n) {
    Grid1D grid(n, 0, 1);
    Eigen::VectorXd x = grid.points();
    Eigen::VectorXd c = (M_PI * x.array()).sin();
    Eigen::VectorXd u = solve_poisson(c, grid, 0.0, 0.0);
    Eigen::VectorXd exact = -(M_PI * x.array()).sin() / (M_PI * M_PI);
    return (u - exact).lpNorm<Eigen::Infinity>();
  };
  const double ratio = err(51) / err(101);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("Poisson linearity") {
  Grid1D grid(100, 0, 1);
  Rng rng(4);
  GpSpec spec{KernelKind::Rbf, 2.0, 0.5, 0.0};
  Eigen::VectorXd c1 = sample_gp(grid.points(), spec, rng);
  Eigen::VectorXd c2 = sample_gp(grid.points(), spec, rng);
  Eigen::VectorXd lhs = solve_poisson(c1 + c2, grid, 0.0, 0.0);
  Eigen::VectorXd rhs = solve_poisson(c1, grid, 0.0, 0.0) + solve_poisson(c2, grid, 0.0, 0.0);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("linear RD reduces to Poisson when k == 0") {
  Grid1D grid(100, 0, 1);
  BvpParams p;
  p.family = BvpFamily::LinearRd;
  p.u0 = 0.3;
  p.u1 = -0.2;
  p.a = 1.1;
  p.c_const = 0.7;
  Eigen::VectorXd u = solve_linear_rd(Eigen::VectorXd::Zero(100), grid, p);
  const double nu = p.lambda() * p.a;
  Eigen::VectorXd ref =
      solve_poisson(Eigen::VectorXd::Constant(100, -p.c_const / nu), grid, p.u0, p.u1);
  CHECK((u - ref).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("linear RD constant solution") {
  Grid1D grid(100, 0, 1);
  BvpParams p;
  p.family = BvpFamily::LinearRd;
  p.u0 = 1.0;
  p.u1 = 1.0;
  p.a = 0.9;
  p.c_const = 1.0;
  Eigen::VectorXd u = solve_linear_rd(Eigen::VectorXd::Ones(100), grid, p);
  CHECK((u.array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("linear RD residual with GP-drawn k") {
  Grid1D grid(100, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Rng rng(21);
  Eigen::VectorXd k = softplus(sample_gp(grid.points(), spec, rng));
  BvpParams p;
  p.family = BvpFamily::LinearRd;
  p.u0 = 0.4;
  p.u1 = -0.8;
  p.a = 1.3;
  p.c_const = -1.5;
  Eigen::VectorXd u = solve_linear_rd(k, grid, p);
  const double h2 = grid.dx() * grid.dx();
  double worst = 0.0;
  for (int i = 1; i + 1 < grid.n; ++i) {
    const double lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
    worst = std::max(worst, std::abs(-p.lambda() * p.a * lap + k[i] * u[i] - p.c_const));
  }
  CHECK(worst / std::abs(p.c_const) < 1e-8);
}

TEST_CASE("nonlinear RD construction") {
  Grid1D grid(100, 0, 1);
  Eigen::VectorXd x = grid.points();
  BvpParams p;
  p.family = BvpFamily::NonlinearRd;
  p.u0 = 0.0;
  p.u1 = 1.0;
  p.a = 1.0;
  p.k_const = 1.0;
  auto [u, c] = nonlinear_rd_construct(Eigen::VectorXd::Zero(100), grid, p);
  CHECK((u - x).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((c.array() - x.array().cube()).abs().maxCoeff() < 1e-9);

  p.u1 = 0.0;
  auto [u2, c2] = nonlinear_rd_construct(Eigen::VectorXd::Zero(100), grid, p);
  CHECK(u2.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(c2.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("nonlinear RD self-consistency") {
  Grid1D grid(100, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Rng rng(55);
  Eigen::VectorXd uh = sample_gp(grid.points(), spec, rng);
  BvpParams p;
  p.family = BvpFamily::NonlinearRd;
  p.u0 = rng.uniform(-1, 1);
  p.u1 = rng.uniform(-1, 1);
  p.a = rng.uniform(0.5, 1.5);
  p.k_const = rng.uniform(0.5, 1.5);
  auto [u, c] = nonlinear_rd_construct(uh, grid, p);
  CHECK(u[0] == doctest::Approx(p.u0).epsilon(1e-14));
  CHECK(u[grid.n - 1] == doctest::Approx(p.u1).epsilon(1e-14));
  Eigen::VectorXd res = (-p.lambda() * p.a * second_derivative(u, grid.dx()).array() +
                         p.k_const * u.array().cube() - c.array())
                            .matrix();
  CHECK(res.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("second_derivative") {
  Grid1D grid(100, 0, 1);
  Eigen::VectorXd x = grid.points();
  CHECK((second_derivative(x.array().square().matrix(), grid.dx()).array() - 2.0).abs().maxCoeff() < 1e-9);
  CHECK(second_derivative(Eigen::VectorXd::Constant(100, 3.0), grid.dx()).lpNorm<Eigen::Infinity>() <
        1e-9);

  Grid1D fine(101, 0, 1);
  Eigen::VectorXd xf = fine.points();
  Eigen::VectorXd v = (2.0 * M_PI * xf.array()).sin();
  Eigen::VectorXd d = second_derivative(v, fine.dx());
  const double w2 = 4.0 * M_PI * M_PI;
  for (int i = 1; i + 1 < fine.n; ++i)
    CHECK(std::abs(d[i] + w2 * v[i]) < 0.005 * w2);

  Eigen::VectorXd tiny(2);
  tiny << 0.0, 1.0;
  CHECK_THROWS_AS(second_derivative(tiny, 0.1), InvalidInputError);
}

TEST_CASE("invalid ODE input") {
  Grid1D grid(50, 0, 1);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(50);
  c[10] = std::nan("");
  CHECK_THROWS_AS(solve_ode_forward({OdeFamily::Ode1, 1.0, 0.0}, 0.0, c, grid),
                  InvalidInputError);
}
