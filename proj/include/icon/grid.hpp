#pragma once

#include <Eigen/Core>

#include "icon/errors.hpp"

namespace icon {

// Equidistant 1-D grid with both endpoints included.
struct Grid1D {
  int n = 0;
  double lo = 0.0, hi = 1.0;

  Grid1D() = default;
  Grid1D(int n_, double lo_, double hi_) : n(n_), lo(lo_), hi(hi_) {
    if (n < 2) throw InvalidInputError("Grid1D: n < 2");
    if (!(lo < hi)) throw InvalidInputError("Grid1D: lo >= hi");
  }

  double dx() const { return (hi - lo) / (n - 1); }

  Eigen::VectorXd points() const {
    Eigen::VectorXd p(n);
    const double h = dx();
    for (int i = 0; i < n; ++i) p[i] = lo + h * i;
    p[n - 1] = hi;
    return p;
  }
};

// Equidistant points on a periodic domain: n points, right endpoint omitted.
struct PeriodicGrid1D {
  int n = 0;
  double lo = 0.0, hi = 1.0;

  PeriodicGrid1D() = default;
  PeriodicGrid1D(int n_, double lo_, double hi_) : n(n_), lo(lo_), hi(hi_) {
    if (n < 2) throw InvalidInputError("PeriodicGrid1D: n < 2");
    if (!(lo < hi)) throw InvalidInputError("PeriodicGrid1D: lo >= hi");
  }

  double dx() const { return (hi - lo) / n; }

  Eigen::VectorXd points() const {
    Eigen::VectorXd p(n);
    const double h = dx();
    for (int i = 0; i < n; ++i) p[i] = lo + h * i;
    return p;
  }
};

}  // namespace icon
