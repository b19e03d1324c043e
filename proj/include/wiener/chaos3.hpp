#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "wiener/chaos2.hpp"
#include "wiener/mc.hpp"
#include "wiener/wick.hpp"

namespace wiener::chaos3 {

// Symmetric 3-tensor vanishing on coincident indices, stored by its strictly
// increasing triples (0-based). F = sum over ordered triples a(i,j,k) x_i x_j x_k
// = 6 sum_{i<j<k} a(i,j,k) x_i x_j x_k, so E F^2 = 36 sum_{i<j<k} a^2.
class SymThreeTensor {
 public:
  struct Entry {
    int i = 0;
    int j = 0;
    int k = 0;
    double value = 0.0;
  };

  SymThreeTensor() = default;

  // Entries may list a triple in any order; duplicates accumulate. Throws
  // ValidationError for coincident or out-of-range indices, and for an
  // all-zero tensor when normalize is set.
  static SymThreeTensor make(int dim, const std::vector<Entry>& entries, bool normalize);

  int dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Symmetrized full-tensor access.
  double operator()(int i, int j, int k) const;

  double variance() const;  // E F^2
  bool is_unit_variance(double tol = 1e-12) const;

  // Slice matrix a(i, ., .) for every i.
  std::vector<Eigen::MatrixXd> slices() const;

  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  wick::GaussianPolynomial to_polynomial() const;

 private:
  int dim_ = 0;
  std::vector<Entry> entries_;  // i < j < k, sorted
};

SymThreeTensor make_tensor(int dim, const std::vector<SymThreeTensor::Entry>& entries, bool normalize);

// Partial derivatives d_i F = 3 sum_{j,k} a(i,j,k) x_j x_k.
Eigen::VectorXd gradient(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x);

// Gamma[F,F](x) = sum_i (d_i F)^2.
double gamma_F(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x);

// Sharp gradient sum_i d_i F(x) xhat_i.
double sharp_value(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& xhat);

struct SharpMatrixSample {
  Eigen::MatrixXd matrix;  // entries 3 sum_k a(i1,i2,k) xhat_k
  Eigen::VectorXd source;  // xhat
};

SharpMatrixSample sample_sharp_matrix(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& xhat);

struct SpectrumSample {
  Eigen::VectorXd eigs;  // |eigs(0)| >= |eigs(1)| >= ...
  bool recentered = false;
};

inline constexpr double kSpectrumTol = 1e-10;

// Symmetric eigensolve, eigenvalues sorted by decreasing modulus. The
// residual of every pair is checked against tol * ||A||.
SpectrumSample spectrum(const SharpMatrixSample& s, double tol = kSpectrumTol);
SpectrumSample spectrum(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol = kSpectrumTol);

// prod_k (1 - 2 i xi lambda_k)^{-1/2} with the principal branch per factor.
std::complex<double> det_inverse_sqrt(const Eigen::Ref<const Eigen::VectorXd>& eigs, double xi);

struct GammaSpecResult {
  double xi = 0.0;
  mc::EstimatorResult lhs;     // E exp(-xi^2 Gamma / 2)
  mc::EstimatorResult rhs_re;  // Re E prod (1 - 2 i xi lambda)^{-1/2}
  mc::EstimatorResult rhs_im;
  double combined_se() const;
};

// The two sides use independent streams (stream, stream + 1) of the seed.
std::vector<GammaSpecResult> verify_gamma_spec(const SymThreeTensor& t, const std::vector<double>& xis,
                                               std::size_t n_samples, mc::RngSpec spec);
GammaSpecResult verify_gamma_spec(const SymThreeTensor& t, double xi, std::size_t n_samples, mc::RngSpec spec);

struct TraceFormSpectrum {
  Eigen::MatrixXd b;      // B_{kl} = 9 sum_{i1,i2} a(i1,i2,k) a(i1,i2,l)
  Eigen::VectorXd betas;  // eigenvalues of B, decreasing
  double expected_trace = 0.0;   // sum beta = E Tr(A^2)
  double variance_trace = 0.0;   // 2 Tr(B^2) = Var Tr(A^2)

  // Second-chaos variable whose carré du champ has the law of Tr(A^2):
  // alpha_k = sqrt(beta_k) / 2, so 4 sum alpha_k^2 G_k^2 = sum beta_k G_k^2.
  chaos2::DiagonalSecondChaos gamma_carrier() const;
};

// Requires a unit-variance tensor; asserts sum beta = 3/2 to 1e-12.
TraceFormSpectrum trace_form(const SymThreeTensor& t);

// Tr(A^2) = xhat^T B xhat.
double trace_square(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& xhat);

enum class Mode { exact, mc };

inline constexpr int kExactDimCap = 6;

struct Kappa4VarGamma {
  double kappa4 = 0.0;
  double var_gamma = 0.0;
  double kappa4_se = 0.0;    // mc mode only
  double var_gamma_se = 0.0;  // mc mode only
  bool bound_holds = false;  // sqrt(Var Gamma) <= 3 sqrt(kappa4) (+ 3 SE slack in mc mode)
};

// exact: Isserlis on F^4 and Gamma^2 (dim <= 6, CapacityError above).
// mc: plain sample moments with delta-method errors.
Kappa4VarGamma kappa4_and_var_gamma(const SymThreeTensor& t, Mode mode, std::size_t n_samples = 0,
                                    mc::RngSpec spec = {});

// kappa_4 from the Wick diagram expansion of E F^4: the two connected
// diagram shapes give kappa_4 = 1944 Tr(M^2) + 1296 T, with
// M_{kl} = sum_{ij} a(i,j,k) a(i,j,l) and T the tetrahedral contraction.
// Exact at any dimension.
double kappa4_contraction(const SymThreeTensor& t);

// (E |lambda_1|^{2p})^{1/(2p)} with delta-method standard error.
mc::EstimatorResult spectral_radius_moments(const SymThreeTensor& t, int p, std::size_t n_samples,
                                            mc::RngSpec spec);

struct SmallBallRow {
  double eps = 0.0;
  double p = 0.0;
  double se = 0.0;
  std::size_t hits = 0;
};

struct SmallBallResult {
  std::vector<SmallBallRow> rows;
  mc::SlopeFit fit;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinSmallBallHits = 50;

// Empirical P(Gamma < eps) on the grid and the log-log slope. If the smallest
// eps has fewer than 50 hits it is widened to the smallest order statistic
// with 50 hits (recorded as a warning).
SmallBallResult smallball_gamma3(const SymThreeTensor& t, std::vector<double> eps_grid, std::size_t n_samples,
                                 mc::RngSpec spec);

struct NegMomentResult {
  mc::EstimatorResult estimate;
  double top_share = 0.0;  // mass fraction carried by the top 0.1% of samples
  bool unstable = false;   // top_share > 0.5
};

NegMomentResult negative_moment_gamma3(const SymThreeTensor& t, double theta, std::size_t n_samples,
                                       mc::RngSpec spec);

// S_p of the squared eigenvalues through the Newton-Girard recursion.
double elementary_symmetric_spectrum(const SpectrumSample& s, int p);

struct SpBatchResult {
  int p = 0;
  mc::EstimatorResult mean_sp;
  double lower_bound = 0.0;  // (1/2) 3^p / (2^p p!)
  bool bound_holds = false;  // mean_sp.mean >= lower_bound
  std::vector<double> alphas;
  std::vector<mc::EstimatorResult> smallball;  // P(S_p <= alpha)
};

SpBatchResult sp_batch(const SymThreeTensor& t, int p, const std::vector<double>& alpha_grid, std::size_t n_samples,
                       mc::RngSpec spec);

struct DtvBound {
  double raw = 0.0;
  double clamped = 0.0;
};

// sqrt(kappa4 / 3), with the TV-trivial clamp at 1.
DtvBound dtv_bound(double kappa4);

}  // namespace wiener::chaos3
