#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "icon/mfc.hpp"

// Chambolle-Pock solve of the discrete MFC program. Decision variables
//   x = (rho_1..rho_T, m_0..m_{T-1}),  T = n_t - 1, each slice of size n_x,
// rho_0 fixed. Continuity constraint per step (Crank-Nicolson diffusion,
// centered divergence):
//   (rho_{j+1}-rho_j)/dt + D m_j - (mu/2) L (rho_j + rho_{j+1}) = 0.
// Kinetic cost uses the time-averaged density rhobar_j = (rho_j+rho_{j+1})/2:
//   sum_j sum_i  w * m_{j,i}^2 / (2 rhobar_{j,i}),  w = c dx dt,
// plus the linear terminal cost <g, rho_T> dx. The split is
//   min_x  Phi(P x + r) + <q, x>   s.t.  A x = b,
// with Phi the perspective kinetic cost (+ indicator rhobar >= 0), P the
// averaging/selection map, and the equality handled by a dual multiplier.

namespace icon {

namespace {

// prox of lam * w m^2/(2 rho) (+ indicator rho >= 0), jointly in (rho, m).
// Reduces to a monotone scalar root-find in rho.
void perspective_prox(double rho_in, double m_in, double lamw, double& rho_out, double& m_out) {
  const double m2 = m_in * m_in;
  if (rho_in + m2 / (2.0 * lamw) <= 0.0) {
    rho_out = 0.0;
    m_out = 0.0;
    return;
  }
  // f(rho) = rho - rho_in - lamw*m2 / (2 (rho+lamw)^2), f' > 0.
  double lo = std::max(rho_in, 0.0);
  double hi = std::max(rho_in, 0.0) + m2 / (2.0 * lamw) + 1e-30;
  double rho = 0.5 * (lo + hi);
  for (int it = 0; it < 80; ++it) {
    const double s = rho + lamw;
    const double f = rho - rho_in - lamw * m2 / (2.0 * s * s);
    if (f > 0.0)
      hi = rho;
    else
      lo = rho;
    const double fp = 1.0 + lamw * m2 / (s * s * s);
    double next = rho - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - rho) < 1e-15 * (1.0 + rho)) {
      rho = next;
      break;
    }
    rho = next;
  }
  rho_out = rho;
  m_out = m_in * rho / (rho + lamw);
}

}  // namespace

PdhgResult pdhg_oracle(const MfcProblem& p, const PdhgOptions& opts) {
  p.validate();
  if (p.n_t * p.n_x > 2000)
    throw InvalidInputError("pdhg_oracle: grid too large for the dense oracle");

  const int nt = p.n_t, nx = p.n_x, T = nt - 1;
  const double dt = p.dt(), dx = p.dx();
  const double w = p.c_coef * dx * dt;
  const int nr = T * nx;        // rho unknowns (also m unknowns, also rows of A)
  const int nv = 2 * T * nx;    // total unknowns

  const auto rho_idx = [nx](int j, int i) { return j * nx + i; };          // rho_{j+1}
  const auto m_idx = [nx, nr](int j, int i) { return nr + j * nx + i; };   // m_j

  // Dense constraint matrix A (nr x nv) and rhs b.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nr);
  const double ad = 0.5 * p.mu / (dx * dx);
  for (int j = 0; j < T; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = j * nx + i;
      const int im = (i + nx - 1) % nx, ip = (i + 1) % nx;
      // rho_{j+1} terms: 1/dt - (mu/2) L
      A(row, rho_idx(j, i)) += 1.0 / dt + 2.0 * ad;
      A(row, rho_idx(j, im)) -= ad;
      A(row, rho_idx(j, ip)) -= ad;
      // rho_j terms
      if (j >= 1) {
        A(row, rho_idx(j - 1, i)) += -1.0 / dt + 2.0 * ad;
        A(row, rho_idx(j - 1, im)) -= ad;
        A(row, rho_idx(j - 1, ip)) -= ad;
      } else {
        b[row] += p.rho0[i] / dt - 2.0 * ad * p.rho0[i] + ad * (p.rho0[im] + p.rho0[ip]);
      }
      // staggered divergence: m_{j,i} lives at x_{i+1/2}
      A(row, m_idx(j, i)) += 1.0 / dx;
      A(row, m_idx(j, im)) -= 1.0 / dx;
    }
  }

  // P x + r = (rhobar, m). The density seen by m_{j,i} (at t_{j+1/2},
  // x_{i+1/2}) averages the four surrounding rho nodes; rho_0 enters r.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
  for (int j = 0; j < T; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int cell = j * nx + i;
      const int ip = (i + 1) % nx;
      P(cell, rho_idx(j, i)) += 0.25;
      P(cell, rho_idx(j, ip)) += 0.25;
      if (j >= 1) {
        P(cell, rho_idx(j - 1, i)) += 0.25;
        P(cell, rho_idx(j - 1, ip)) += 0.25;
      } else {
        r[cell] += 0.25 * (p.rho0[i] + p.rho0[ip]);
      }
      P(nr + cell, m_idx(j, i)) = 1.0;
    }
  }

  // Linear cost: terminal <g, rho_T> dx.
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < nx; ++i) q[rho_idx(T - 1, i)] = p.g[i] * dx;

  // Stacked operator K = [A; P]; power iteration for ||K||.
  Eigen::VectorXd pw(nv);
  for (int i = 0; i < nv; ++i) pw[i] = std::sin(1.0 + i);  // deterministic seed vector
  pw.normalize();
  double knorm = 1.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd u1 = A * pw, u2 = P * pw;
    Eigen::VectorXd back = A.transpose() * u1 + P.transpose() * u2;
    knorm = std::sqrt(back.norm());
    pw = back.normalized();
  }
  const double sigma = 0.95 / knorm, tau = 0.95 / knorm;

  // Projection onto {A x = b} for primal-objective evaluation.
  Eigen::LLT<Eigen::MatrixXd> aat_llt((A * A.transpose()).eval());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nv), xbar = x;
  // Warm start rho with the flat density, m = 0.
  for (int j = 0; j < T; ++j)
    for (int i = 0; i < nx; ++i) x[rho_idx(j, i)] = 1.0;
  xbar = x;
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nr);   // equality multiplier
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nv);     // (alpha, beta) for Phi

  const auto primal_objective = [&](const Eigen::VectorXd& xf) {
    const Eigen::VectorXd v = P * xf + r;
    double obj = q.dot(xf);
    for (int cell = 0; cell < nr; ++cell) {
      const double rho = v[cell], m = v[nr + cell];
      if (rho > 1e-12)
        obj += w * m * m / (2.0 * rho);
      else if (std::abs(m) > 1e-8)
        return std::numeric_limits<double>::infinity();
    }
    return obj;
  };

  PdhgResult result;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    phi += sigma * (A * xbar - b);
    Eigen::VectorXd ytil = y + sigma * (P * xbar + r);
    // prox of sigma * Phi* == projection onto the dual cell constraints,
    // via Moreau and the perspective prox.
    for (int cell = 0; cell < nr; ++cell) {
      double rho_p, m_p;
      perspective_prox(ytil[cell] / sigma, ytil[nr + cell] / sigma, w / sigma, rho_p, m_p);
      y[cell] = ytil[cell] - sigma * rho_p;
      y[nr + cell] = ytil[nr + cell] - sigma * m_p;
    }
    const Eigen::VectorXd xnew =
        x - tau * (A.transpose() * phi + P.transpose() * y + q);
    xbar = 2.0 * xnew - x;
    x = xnew;

    if (iter % opts.check_every == 0 || iter == opts.max_iters) {
      // Feasible primal point: least-squares correction onto {A x = b}.
      Eigen::VectorXd xf = x - A.transpose() * aat_llt.solve(A * x - b);
      const double primal = primal_objective(xf);
      // Dual value with the cell-feasible y from the prox step.
      const double dual = y.dot(r) - phi.dot(b);
      const double gap = primal - dual;
      result.primal_obj = primal;
      result.dual_obj = dual;
      result.gap = gap;
      result.iters = iter;
      if (std::isfinite(primal) && std::abs(gap) <= opts.gap_tol * (1.0 + std::abs(primal))) {
        result.converged = true;
        x = xf;
        break;
      }
      if (iter == opts.max_iters) x = xf;
    }
  }

  result.rho.resize(nt, nx);
  for (int i = 0; i < nx; ++i) result.rho(0, i) = p.rho0[i];
  for (int j = 0; j < T; ++j)
    for (int i = 0; i < nx; ++i) result.rho(j + 1, i) = std::max(x[rho_idx(j, i)], 0.0);
  return result;
}

}  // namespace icon
