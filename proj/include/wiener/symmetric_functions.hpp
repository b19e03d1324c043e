#pragma once

#include <Eigen/Core>

namespace wiener {

// Power sums N_p = sum_k w_k^p for p = 1..p_max; entry p-1 holds N_p.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> power_sums(const Eigen::MatrixBase<Derived>& w,
                                                                      int p_max) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(p_max);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> pw = w.derived().array();
  for (int p = 0; p < p_max; ++p) {
    out(p) = pw.sum();
    pw *= w.derived().array();
  }
  return out;
}

// Newton-Girard recursion p*S_p = sum_{i=1}^p (-1)^{i-1} N_i S_{p-i}, S_0 = 1.
// Input entry p-1 holds N_p; output entry p-1 holds S_p.
Eigen::VectorXd elementary_from_power_sums(const Eigen::VectorXd& newton);

}  // namespace wiener
