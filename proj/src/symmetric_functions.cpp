#include "wiener/symmetric_functions.hpp"

namespace wiener {

Eigen::VectorXd elementary_from_power_sums(const Eigen::VectorXd& newton) {
  const Eigen::Index p_max = newton.size();
  Eigen::VectorXd s(p_max + 1);
  s(0) = 1.0;
  for (Eigen::Index p = 1; p <= p_max; ++p) {
    double acc = 0.0;
    double sign = 1.0;
    for (Eigen::Index i = 1; i <= p; ++i) {
      acc += sign * newton(i - 1) * s(p - i);
      sign = -sign;
    }
    s(p) = acc / static_cast<double>(p);
  }
  return s.tail(p_max);
}

}  // namespace wiener
