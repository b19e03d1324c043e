#pragma once

#include <functional>

namespace wiener::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Globally adaptive Gauss-Kronrod (7/15) on a finite interval: the interval
// with the largest error estimate is bisected until the summed estimate
// drops below max(abs_tol, rel_tol * |value|) or max_intervals is reached.
Result gauss_kronrod(const std::function<double(double)>& f, double a, double b, double rel_tol,
                     double abs_tol = 0.0, int max_intervals = 2000);

}  // namespace wiener::quadrature
