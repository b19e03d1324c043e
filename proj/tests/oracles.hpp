#pragma once
// Independent reference computations used only by the tests.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

// Random coefficient vector rescaled so that 2 sum a^2 = 1.
inline Eigen::VectorXd unit_alphas(std::mt19937_64& gen, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd a(m);
  for (int i = 0; i < m; ++i) a(i) = u(gen);
  return a / std::sqrt(2.0 * a.squaredNorm());
}

// e_p of the values w by brute-force subset enumeration.
inline double elementary_by_subsets(const std::vector<double>& w, int p) {
  const int n = static_cast<int>(w.size());
  if (p == 0) return 1.0;
  if (p > n) return 0.0;
  double total = 0.0;
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  while (true) {
    double prod = 1.0;
    for (int i : idx) prod *= w[i];
    total += prod;
    int pos = p - 1;
    while (pos >= 0 && idx[pos] == n - p + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < p; ++i) idx[i] = idx[i - 1] + 1;
  }
  return total;
}

// Explicit Girard formula: e_p = sum over partitions of p with m_i parts of
// size i of prod (-1)^{(i-1) m_i} N_i^{m_i} / (i^{m_i} m_i!).
inline double elementary_by_partitions(const std::vector<double>& newton, int p) {
  double total = 0.0;
  std::vector<int> mult(p + 1, 0);
  std::function<void(int, int)> rec = [&](int remaining, int largest) {
    if (remaining == 0) {
      double term = 1.0;
      for (int i = 1; i <= p; ++i) {
        if (mult[i] == 0) continue;
        const double sign = ((i - 1) * mult[i]) % 2 ? -1.0 : 1.0;
        term *= sign * std::pow(newton[i - 1] / i, mult[i]) / std::tgamma(mult[i] + 1.0);
      }
      total += term;
      return;
    }
    for (int part = std::min(remaining, largest); part >= 1; --part) {
      ++mult[part];
      rec(remaining - part, part);
      --mult[part];
    }
  };
  rec(p, p);
  return total;
}

// Density of (S - k) / sqrt(2k) with S ~ chi-square(k), k = 4.
inline double chi2_4_standardized_density(double x) {
  const double s = 4.0 + std::sqrt(8.0) * x;
  if (s <= 0.0) return 0.0;
  return std::sqrt(8.0) * 0.25 * s * std::exp(-0.5 * s);
}

// Largest-modulus root of -l^3 + (a^2+b^2+c^2) l + 2abc, the characteristic
// polynomial of [[0,c,b],[c,0,a],[b,a,0]], by the trigonometric cubic formula.
inline double zero_diagonal_3x3_radius(double a, double b, double c) {
  const double p = a * a + b * b + c * c;
  if (p == 0.0) return 0.0;
  const double q = 2.0 * a * b * c;
  const double r = 2.0 * std::sqrt(p / 3.0);
  const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
  const double phi = std::acos(arg) / 3.0;
  double best = 0.0;
  for (int k = 0; k < 3; ++k) best = std::max(best, std::abs(r * std::cos(phi - 2.0 * M_PI * k / 3.0)));
  return best;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// E lambda_1^2 for the sharp matrix of F = X1 X2 X3, whose entries are xhat/2
// in the zero-diagonal 3x3 pattern. lambda_1 is homogeneous of degree one, so
// E lambda_1^2 = E|xhat|^2 * E_u[r(u)^2] / 4 with u uniform on the sphere.
inline double x1x2x3_radius_second_moment(int n_theta = 400, int n_phi = 800) {
  std::vector<double> z, wz;
  gauss_legendre(n_theta, z, wz);
  double acc = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double s = std::sqrt(1.0 - z[i] * z[i]);
    double ring = 0.0;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / n_phi;
      const double r = zero_diagonal_3x3_radius(s * std::cos(phi), s * std::sin(phi), z[i]);
      ring += r * r;
    }
    acc += wz[i] * ring / n_phi;
  }
  return 3.0 * 0.25 * acc / 2.0;
}

}  // namespace oracle
