#include <Eigen/Core>
#include <cmath>

#include "doctest.h"
#include "icon/errors.hpp"
#include "icon/grid.hpp"
#include "icon/mfc.hpp"
#include "icon/rng.hpp"
#include "icon/stochastic.hpp"

using namespace icon;

namespace {

MfcProblem random_problem(int nt, int nx, std::uint64_t seed) {
  PeriodicGrid1D xg(nx, 0, 1);
  GpSpec spec{KernelKind::Periodic, 1.0, 1.0, 0.0};
  SeedTree root(seed);
  Rng rg = root.child("g").rng();
  Rng rr = root.child("rho0").rng();
  MfcProblem p;
  p.n_t = nt;
  p.n_x = nx;
  p.g = zero_mean(sample_gp(xg.points(), spec, rg), xg.dx(), true);
  p.rho0 = normalize_density(softplus(sample_gp(xg.points(), spec, rr)), xg.dx(), true);
  return p;
}

}  // namespace

TEST_CASE("heat step fixes constants") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(100, 1.7);
  Eigen::VectorXd w = heat_step_periodic(v, 0.02, 0.02, 0.01);
  CHECK((w.array() - 1.7).abs().maxCoeff() < 1e-14);
}

TEST_CASE("heat step damps a Fourier mode by the CN symbol") {
  const int n = 100;
  const double dx = 1.0 / n, dt = 0.02, mu = 0.02;
  PeriodicGrid1D grid(n, 0, 1);
  Eigen::VectorXd x = grid.points();
  Eigen::VectorXd v = (2.0 * M_PI * x.array()).cos();
  const double ksq = 2.0 * (1.0 - std::cos(2.0 * M_PI * dx)) / (dx * dx);
  const double factor = (1.0 - 0.5 * mu * ksq * dt) / (1.0 + 0.5 * mu * ksq * dt);
  Eigen::VectorXd w = heat_step_periodic(v, mu, dt, dx);
  CHECK((w - factor * v).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("heat step conserves mass") {
  Rng rng(5);
  Eigen::VectorXd v(100);
  for (int i = 0; i < 100; ++i) v[i] = rng.uniform(0, 2);
  Eigen::VectorXd w = heat_step_periodic(v, 0.02, 0.02, 0.01);
  CHECK(std::abs(periodic_integral(w, 0.01) - periodic_integral(v, 0.01)) < 1e-13);
}

TEST_CASE("solve_mfc with zero terminal cost is plain diffusion") {
  MfcProblem p = random_problem(51, 100, 7);
  p.g.setZero();
  MfcSolution sol = solve_mfc(p);
  Eigen::VectorXd rho = p.rho0;
  for (int j = 1; j < p.n_t; ++j) {
    rho = heat_step_periodic(rho, p.mu, p.dt(), p.dx());
    CHECK((sol.rho.row(j).transpose() - rho).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("constant terminal cost and uniform density stay uniform") {
  MfcProblem p;
  p.n_t = 51;
  p.n_x = 100;
  p.g = Eigen::VectorXd::Constant(100, 0.4);
  p.rho0 = Eigen::VectorXd::Ones(100);
  MfcSolution sol = solve_mfc(p);
  CHECK((sol.rho.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_mfc invariants on random data") {
  MfcProblem p = random_problem(51, 100, 13);
  MfcSolution sol = solve_mfc(p);
  // Mass conservation at every time slice.
  for (int j = 0; j < p.n_t; ++j)
    CHECK(std::abs(periodic_integral(sol.rho.row(j).transpose(), p.dx()) - 1.0) < 1e-6);
  // Nonnegativity before clipping.
  CHECK((sol.psi.cwiseProduct(sol.psi_hat)).minCoeff() > -1e-10);
  // Factorization consistency at t = 0.
  CHECK((sol.psi.row(0).cwiseProduct(sol.psi_hat.row(0)).transpose() - p.rho0)
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("g-shift invariance") {
  MfcProblem p = random_problem(51, 100, 19);
  MfcSolution a = solve_mfc(p);
  MfcProblem q = p;
  q.g.array() += 0.35;
  MfcSolution b = solve_mfc(q);
  CHECK((a.rho - b.rho).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("time-grid refinement is second order") {
  const auto terminal = [](int nt, std::uint64_t seed) {
    MfcProblem p = random_problem(nt, 50, seed);
    return solve_mfc(p).rho.row(nt - 1).eval();
  };
  const Eigen::RowVectorXd fine = terminal(201, 23);
  const Eigen::RowVectorXd mid = terminal(101, 23);
  const Eigen::RowVectorXd coarse = terminal(51, 23);
  const double e_coarse = (coarse - fine).lpNorm<Eigen::Infinity>();
  const double e_mid = (mid - fine).lpNorm<Eigen::Infinity>();
  const double ratio = e_coarse / e_mid;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("psi underflow raises a conditioning error") {
  MfcProblem p;
  p.n_t = 11;
  p.n_x = 20;
  // Uniform extreme terminal cost: psi == exp(-75) at every node, which
  // the heat flow preserves, so the 1e-12 floor trips at t = 0.
  p.g = Eigen::VectorXd::Constant(20, 60.0);
  p.rho0 = Eigen::VectorXd::Ones(20);
  CHECK_THROWS_AS(solve_mfc(p), NumericalError);
}

TEST_CASE("pdhg with zero terminal cost matches diffusion") {
  MfcProblem p = random_problem(11, 20, 31);
  p.g.setZero();
  PdhgResult res = pdhg_oracle(p);
  CHECK(res.converged);
  Eigen::VectorXd rho = p.rho0;
  double worst = 0.0;
  for (int j = 1; j < p.n_t; ++j) {
    rho = heat_step_periodic(rho, p.mu, p.dt(), p.dx());
    worst = std::max(worst, (res.rho.row(j).transpose() - rho).lpNorm<Eigen::Infinity>() /
                                rho.lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 0.01);
}

TEST_CASE("pdhg duality gap at termination") {
  MfcProblem p = random_problem(11, 20, 37);
  PdhgResult res = pdhg_oracle(p);
  CHECK(res.converged);
  CHECK(std::abs(res.gap) <= 1e-4 * (1.0 + std::abs(res.primal_obj)));
}

TEST_CASE("pdhg agrees with Hopf-Cole on coarse grids") {
  for (std::uint64_t seed : {41, 43}) {
    MfcProblem p = random_problem(11, 20, seed);
    MfcSolution hc = solve_mfc(p);
    PdhgResult res = pdhg_oracle(p);
    CHECK(res.converged);
    const double rel = (res.rho - hc.rho).norm() / hc.rho.norm();
    CHECK(rel <= 0.02);
  }
}
