#include <Eigen/Core>
#include <cmath>

#include "doctest.h"
#include "icon/errors.hpp"
#include "icon/grid.hpp"
#include "icon/rng.hpp"
#include "icon/stochastic.hpp"

using namespace icon;

TEST_CASE("sample_uniform basics") {
  Rng rng(1);
  CHECK(sample_uniform(0.7, 0.7, rng) == 0.7);
  for (int i = 0; i < 100; ++i) {
    const double v = sample_uniform(0.5, 1.5, rng);
    CHECK(v >= 0.5);
    CHECK(v <= 1.5);
  }
  CHECK_THROWS_AS(sample_uniform(1.0, 0.0, rng), InvalidInputError);
}

TEST_CASE("sample_uniform empirical mean") {
  Rng rng(42);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_uniform(-1.0, 1.0, rng);
  CHECK(std::abs(sum / n) < 0.01);
}

TEST_CASE("seed tree determinism and independence") {
  SeedTree root(12345);
  Rng a = root.child("gp", 3).rng();
  Rng b = root.child("gp", 3).rng();
  for (int i = 0; i < 10; ++i) CHECK(a.raw() == b.raw());
  Rng c = root.child("gp", 4).rng();
  Rng d = root.child("param", 3).rng();
  CHECK(root.child("gp", 3).rng().raw() != c.raw());
  CHECK(root.child("gp", 3).rng().raw() != d.raw());
}

TEST_CASE("gp_covariance rbf values") {
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Eigen::VectorXd xs(2);
  xs << 0.0, 0.5;
  Eigen::MatrixXd k = gp_covariance(xs, spec);
  CHECK(k(0, 0) == doctest::Approx(1.0));
  CHECK(k(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK((k - k.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("gp_covariance periodic wrap and translation invariance") {
  GpSpec spec{KernelKind::Periodic, 1.7, 1.0, 0.0};
  Eigen::VectorXd xs(2);
  xs << 0.0, 1.0;
  Eigen::MatrixXd k = gp_covariance(xs, spec);
  CHECK(k(0, 1) == doctest::Approx(1.7).epsilon(1e-12));  // full-period wrap

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(0, 1), y = rng.uniform(0, 1), delta = rng.uniform(-2, 2);
    Eigen::VectorXd p(2), ps(2);
    p << x, y;
    ps << x + delta, y + delta;
    CHECK(gp_covariance(p, spec)(0, 1) ==
          doctest::Approx(gp_covariance(ps, spec)(0, 1)).epsilon(1e-12));
  }
}

TEST_CASE("sample_gp single point is standard normal") {
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Eigen::VectorXd xs(1);
  xs << 0.3;
  Rng rng(11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_gp(xs, spec, rng)[0];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sample_gp degenerate variance") {
  GpSpec spec{KernelKind::Rbf, 1e-30, 0.5, 0.0};
  Eigen::VectorXd xs = Grid1D(10, 0, 1).points();
  Rng rng(3);
  Eigen::VectorXd v = sample_gp(xs, spec, rng);
  CHECK(v.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("sample_gp empirical covariance matches kernel") {
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Eigen::VectorXd xs = Grid1D(5, 0, 1).points();
  Rng rng(99);
  const int n = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = sample_gp(xs, spec, rng);
    acc += v * v.transpose();
  }
  acc /= n;
  const Eigen::MatrixXd k = gp_covariance(xs, spec);
  CHECK(((acc - k).cwiseAbs().maxCoeff()) < 0.05 * spec.sigma2);
}

TEST_CASE("softplus values and asymptotes") {
  Eigen::VectorXd v(3);
  v << 0.0, 50.0, -50.0;
  Eigen::VectorXd s = softplus(v);
  CHECK(s[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(s[1] - 50.0) < 1e-12);
  CHECK(s[2] == doctest::Approx(std::exp(-50.0)).epsilon(1e-6));
}

TEST_CASE("normalize_density") {
  const double dx = 1.0 / 99;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(100, 2.0);
  CHECK((normalize_density(v, dx).array() - 1.0).abs().maxCoeff() < 1e-12);
  v.setConstant(0.25);
  CHECK((normalize_density(v, dx).array() - 1.0).abs().maxCoeff() < 1e-12);
  v.setZero();
  CHECK_THROWS_AS(normalize_density(v, dx), InvalidInputError);
}

TEST_CASE("normalize_density of a softplus GP draw, and idempotence") {
  Grid1D grid(100, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  Rng rng(5);
  Eigen::VectorXd v = softplus(sample_gp(grid.points(), spec, rng));
  Eigen::VectorXd d = normalize_density(v, grid.dx());
  CHECK(trapezoid(d, grid.dx()) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::VectorXd d2 = normalize_density(d, grid.dx());
  CHECK((d - d2).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("zero_mean") {
  Grid1D grid(100, 0, 1);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(100, 3.0);
  CHECK(zero_mean(v, grid.dx()).lpNorm<Eigen::Infinity>() < 1e-12);

  GpSpec spec{KernelKind::Periodic, 1.0, 1.0, 0.0};
  Rng rng(8);
  Eigen::VectorXd g = sample_gp(grid.points(), spec, rng);
  Eigen::VectorXd z = zero_mean(g, grid.dx());
  CHECK(std::abs(trapezoid(z, grid.dx())) < 1e-12);
  CHECK((zero_mean(z, grid.dx()) - z).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("periodic integral and zero_mean on periodic grid") {
  PeriodicGrid1D grid(100, 0, 1);
  GpSpec spec{KernelKind::Periodic, 1.0, 1.0, 0.0};
  Rng rng(17);
  Eigen::VectorXd g = sample_gp(grid.points(), spec, rng);
  Eigen::VectorXd z = zero_mean(g, grid.dx(), /*periodic=*/true);
  CHECK(std::abs(periodic_integral(z, grid.dx())) < 1e-12);
}

TEST_CASE("gp draws deterministic per seed path") {
  Grid1D grid(50, 0, 1);
  GpSpec spec{KernelKind::Rbf, 1.0, 0.5, 0.0};
  SeedTree root(77);
  Rng a = root.child("draw", 0).rng();
  Rng b = root.child("draw", 0).rng();
  Eigen::VectorXd va = sample_gp(grid.points(), spec, a);
  Eigen::VectorXd vb = sample_gp(grid.points(), spec, b);
  CHECK((va - vb).lpNorm<Eigen::Infinity>() == 0.0);
}
