#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "wiener/mc.hpp"
#include "wiener/wick.hpp"

namespace wiener::chaos2 {

// F = sum_k alpha_k (G_k^2 - 1).
class DiagonalSecondChaos {
 public:
  // Throws ValidationError for an empty or all-zero coefficient vector.
  explicit DiagonalSecondChaos(Eigen::VectorXd alphas);

  // Rescales alphas by (2 sum alpha^2)^{-1/2} so that Var F = 1.
  static DiagonalSecondChaos normalized(Eigen::VectorXd alphas);

  const Eigen::VectorXd& alphas() const { return alphas_; }
  Eigen::Index size() const { return alphas_.size(); }
  Eigen::Index nonzero_count() const;
  double variance() const { return 2.0 * alphas_.squaredNorm(); }
  bool is_unit_variance(double tol = 1e-12) const;

  // F and Gamma[F,F] = 4 sum alpha_k^2 g_k^2 at a point g.
  double value(const Eigen::Ref<const Eigen::VectorXd>& g) const;
  double gamma(const Eigen::Ref<const Eigen::VectorXd>& g) const;

  wick::GaussianPolynomial to_polynomial() const;

 private:
  Eigen::VectorXd alphas_;
};

struct SymmetricFunctionTable {
  int p_max = 0;
  Eigen::VectorXd newton;      // entry p-1: N_p = sum alpha^{2p}
  Eigen::VectorXd elementary;  // entry p-1: S_p
  Eigen::VectorXd cumulants;   // entry p-1: kappa_{2p}
};

// kappa_{2p} = 2^{2p-1} (2p-1)! N_p.
double cumulant_from_newton_sum(int p, double newton_sum);

SymmetricFunctionTable newton_cumulants(const DiagonalSecondChaos& f, int p_max);

inline double kappa4(const DiagonalSecondChaos& f) { return 48.0 * f.alphas().array().pow(4).sum(); }

struct SpDeviation {
  double lhs = 0.0;  // |S_p - 1/(2^p p!)|
  double rhs = 0.0;  // p kappa_4 / 48
  bool holds = false;
};

// Requires a unit-variance F (PreconditionError otherwise).
SpDeviation check_sp_deviation(const DiagonalSecondChaos& f, int p);

// E exp(-lambda Gamma[F,F]) = prod_k (1 + 8 lambda alpha_k^2)^{-1/2}.
double laplace_gamma(const DiagonalSecondChaos& f, double lambda);

struct Thm1Certificate {
  double threshold = 0.0;  // 24 / (2^p (p+1)!)
  bool certified = false;
  double q_sup = 0.0;  // 1/Gamma in L^q certified for every q < q_sup (p/2 when certified, else 0)
};

Thm1Certificate thm1_certificate(double kappa4, int p);

// Largest p <= p_cap certified for this kappa_4 (0 if none).
int max_certified_level(double kappa4, int p_cap = 64);

// sqrt(2 p!) / 2^p * eps^{p/2}.
double smallball_bound(int p, double eps);

struct NegativeMomentOptions {
  double rel_tol = 1e-8;
  double tail_cutoff = 1e-12;
};

// E Gamma[F,F]^{-q} through the Mellin integral of the Laplace transform.
// q >= m/2 (m nonzero coefficients) -> DivergenceError.
double negative_moment(const DiagonalSecondChaos& f, double q, NegativeMomentOptions opts = {});

// E exp(i xi F) with sqrt(1 + i x) = (1 + x^2)^{1/4} exp(i arctan(x) / 2).
std::complex<double> char_function(const DiagonalSecondChaos& f, double xi);

struct DensityGrid {
  double lo = -4.0;
  double hi = 4.0;
  double step = 0.01;
};

struct DensityResult {
  Eigen::VectorXd x;
  Eigen::VectorXd density;
  double xi_max = 0.0;   // truncation of the frequency integral
  double xi_step = 0.0;  // trapezoid step in frequency
};

// Fourier inversion f(x) = (1/pi) int_0^inf Re(exp(-i xi x) phi(xi)) d xi by
// the truncated trapezoid rule. Needs at least 3 nonzero coefficients.
DensityResult density_by_inversion(const DiagonalSecondChaos& f, const DensityGrid& grid,
                                   double tail_tol = 1e-8);

// Trapezoid integral of the sampled density.
double integrate_samples(const DensityResult& d);

// (1/2) int |f - phi| over the grid.
double tv_distance_to_normal(const DensityResult& d);

// F_i = X^T A_i X - Tr A_i.
class MultivariateSecondChaos {
 public:
  // Throws ValidationError for empty input, mismatched sizes or asymmetric
  // matrices (tolerance relative to the largest entry).
  explicit MultivariateSecondChaos(std::vector<Eigen::MatrixXd> mats, double symmetry_tol = 1e-12);

  const std::vector<Eigen::MatrixXd>& mats() const { return mats_; }
  Eigen::Index count() const { return static_cast<Eigen::Index>(mats_.size()); }
  Eigen::Index dim() const { return mats_.front().rows(); }

  // 2 Tr(A_i A_j).
  Eigen::MatrixXd covariance() const;
  bool has_identity_covariance(double tol = 1e-12) const;

  // Same family rotated by Cov^{-1/2} so that the covariance is the identity.
  // Throws ValidationError when the covariance is singular.
  MultivariateSecondChaos whitened() const;

  Eigen::MatrixXd combination(const Eigen::Ref<const Eigen::VectorXd>& t) const;
  wick::GaussianPolynomial component_polynomial(Eigen::Index i) const;

 private:
  std::vector<Eigen::MatrixXd> mats_;
};

// kappa_4 of X^T A X - Tr A: 48 Tr(A^4).
double kappa4_of_matrix(const Eigen::MatrixXd& a);

struct DirectionCheck {
  Eigen::VectorXd t;
  double var_gamma = 0.0;
  bool holds = false;
};

struct CrossGammaStats {
  Eigen::VectorXd var_gamma_diag;  // Var Gamma[F_i, F_i]
  Eigen::MatrixXd gamma_l2;        // ||Gamma[F_i, F_j]||_2
  double bound = 0.0;              // max_i Var + d^2 max_{i != j} ||.||_2
  std::vector<DirectionCheck> directions;
  bool holds = false;
};

// Exact statistics (Isserlis) of Gamma[F_i,F_j] = 4 X^T A_i A_j X and the
// combined-variance bound on `directions` sphere points. The bound presumes
// identity covariance; without it the inequality can fail.
CrossGammaStats cross_gamma_stats(const MultivariateSecondChaos& m, int directions = 64);

// Quasi-uniform directions on S^{d-1}: +-1 for d = 1, equispaced for d = 2,
// a Fibonacci lattice for d = 3 and seeded Gaussian directions for d > 3.
std::vector<Eigen::VectorXd> sphere_grid(Eigen::Index d, int count, std::uint64_t seed = 1);

struct SphereMax {
  double value = 0.0;
  Eigen::VectorXd argmax;
};

// max over the sphere of kappa_4(sum t_i F_i) = 48 Tr(A_t^4), grid search
// followed by projected gradient ascent. A lower bound of the true max.
SphereMax sphere_kappa4_max(const MultivariateSecondChaos& m, int resolution = 256);

}  // namespace wiener::chaos2
