#include "icon/stochastic.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "icon/errors.hpp"

namespace icon {

void GpSpec::validate() const {
  if (!(sigma2 > 0.0)) throw InvalidInputError("GpSpec: sigma2 must be > 0");
  if (!(length_scale > 0.0)) throw InvalidInputError("GpSpec: length_scale must be > 0");
  if (jitter < 0.0) throw InvalidInputError("GpSpec: jitter must be >= 0");
}

double sample_uniform(double lo, double hi, Rng& rng) {
  if (lo > hi) throw InvalidInputError("sample_uniform: lo > hi");
  if (lo == hi) return lo;
  return rng.uniform(lo, hi);
}

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double kernel_eval(double x, double y, const GpSpec& spec) {
  const double l2 = spec.length_scale * spec.length_scale;
  if (spec.kernel == KernelKind::Rbf) {
    const double d = x - y;
    return spec.sigma2 * std::exp(-0.5 * d * d / l2);
  }
  const double ds = std::sin(kTwoPi * x) - std::sin(kTwoPi * y);
  const double dc = std::cos(kTwoPi * x) - std::cos(kTwoPi * y);
  return spec.sigma2 * std::exp(-(ds * ds + dc * dc) / (2.0 * l2));
}
}  // namespace

Eigen::MatrixXd gp_covariance(const Eigen::VectorXd& xs, const GpSpec& spec) {
  spec.validate();
  const Eigen::Index n = xs.size();
  if (n == 0) throw InvalidInputError("gp_covariance: empty grid");
  if (!xs.allFinite()) throw InvalidInputError("gp_covariance: non-finite coordinates");
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = spec.sigma2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel_eval(xs[i], xs[j], spec);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::VectorXd sample_gp(const Eigen::VectorXd& xs, const GpSpec& spec, Rng& rng) {
  const Eigen::MatrixXd cov = gp_covariance(xs, spec);
  const Eigen::Index n = xs.size();

  double jitter = spec.jitter > 0.0 ? spec.jitter : 1e-8 * spec.sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
  for (int attempt = 0; attempt < 4; ++attempt) {  // initial try + 3 escalations
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
    jitter *= 10.0;
  }
  if (!ok) throw NumericalError("sample_gp: covariance not factorizable after jitter escalation");

  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return llt.matrixL() * z;
}

Eigen::VectorXd softplus(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v[i];
    // log1p(exp(-|x|)) + max(x, 0) avoids overflow on both tails.
    out[i] = std::log1p(std::exp(-std::abs(x))) + (x > 0.0 ? x : 0.0);
  }
  return out;
}

double trapezoid(const Eigen::VectorXd& v, double dx) {
  const Eigen::Index n = v.size();
  if (n < 2) throw InvalidInputError("trapezoid: need at least 2 points");
  return dx * (v.sum() - 0.5 * (v[0] + v[n - 1]));
}

double periodic_integral(const Eigen::VectorXd& v, double dx) {
  if (v.size() == 0) throw InvalidInputError("periodic_integral: empty input");
  return dx * v.sum();
}

Eigen::VectorXd normalize_density(const Eigen::VectorXd& v, double dx, bool periodic) {
  const double mass = periodic ? periodic_integral(v, dx) : trapezoid(v, dx);
  if (!(mass > 0.0)) throw InvalidInputError("normalize_density: integral not positive");
  return v / mass;
}

Eigen::VectorXd zero_mean(const Eigen::VectorXd& v, double dx, bool periodic) {
  const double length = periodic ? dx * double(v.size()) : dx * double(v.size() - 1);
  const double mass = periodic ? periodic_integral(v, dx) : trapezoid(v, dx);
  return v.array() - mass / length;
}

}  // namespace icon
