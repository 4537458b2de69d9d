#pragma once

#include <Eigen/Core>

#include "icon/rng.hpp"

namespace icon {

enum class KernelKind { Rbf, Periodic };

// Gaussian-process prior: zero mean, variance sigma2, length scale l.
// The periodic kernel wraps the coordinate onto the unit circle.
struct GpSpec {
  KernelKind kernel = KernelKind::Rbf;
  double sigma2 = 1.0;
  double length_scale = 0.5;
  double jitter = 0.0;  // 0 means "auto": 1e-8 * sigma2, escalated on failure

  void validate() const;
};

double sample_uniform(double lo, double hi, Rng& rng);

// Kernel matrix on a coordinate grid. Symmetric PSD, diagonal == sigma2.
Eigen::MatrixXd gp_covariance(const Eigen::VectorXd& xs, const GpSpec& spec);

// One zero-mean draw on the grid. Cholesky with jitter escalation (x10, up
// to 3 retries); throws NumericalError if the factorization never succeeds.
Eigen::VectorXd sample_gp(const Eigen::VectorXd& xs, const GpSpec& spec, Rng& rng);

// Numerically stable log(1 + exp(v)), elementwise.
Eigen::VectorXd softplus(const Eigen::VectorXd& v);

// Trapezoidal integral on a uniform grid with both endpoints stored.
double trapezoid(const Eigen::VectorXd& v, double dx);

// Rectangle-rule integral on a periodic uniform grid (right endpoint omitted).
double periodic_integral(const Eigen::VectorXd& v, double dx);

// Scale nonnegative values so the chosen integral is exactly 1.
// Throws InvalidInputError when the integral is not positive.
Eigen::VectorXd normalize_density(const Eigen::VectorXd& v, double dx, bool periodic = false);

// Subtract the integral over the domain, so the result integrates to 0.
Eigen::VectorXd zero_mean(const Eigen::VectorXd& v, double dx, bool periodic = false);

}  // namespace icon
