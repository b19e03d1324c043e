#include "wiener/chaos3.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "wiener/errors.hpp"
#include "wiener/symmetric_functions.hpp"

namespace wiener::chaos3 {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

void require_dim(const SymThreeTensor& t, Eigen::Index n, const char* what) {
  if (n != t.dim()) {
    throw ValidationError(std::string(what) + " has dimension " + std::to_string(n) + ", tensor has " +
                          std::to_string(t.dim()));
  }
}

}  // namespace

SymThreeTensor SymThreeTensor::make(int dim, const std::vector<Entry>& entries, bool normalize) {
  if (dim < 1) throw ValidationError("tensor dimension must be positive");
  std::map<std::tuple<int, int, int>, double> acc;
  for (const Entry& e : entries) {
    std::array<int, 3> idx{e.i, e.j, e.k};
    for (int v : idx) {
      if (v < 0 || v >= dim) {
        throw ValidationError("tensor index " + std::to_string(v) + " outside [0, " + std::to_string(dim) + ")");
      }
    }
    std::sort(idx.begin(), idx.end());
    if (idx[0] == idx[1] || idx[1] == idx[2]) {
      throw ValidationError("tensor entry (" + std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                            std::to_string(e.k) + ") has coincident indices");
    }
    if (!std::isfinite(e.value)) throw ValidationError("tensor entries must be finite");
    acc[{idx[0], idx[1], idx[2]}] += e.value;
  }
  SymThreeTensor t;
  t.dim_ = dim;
  for (const auto& [key, v] : acc) {
    if (v != 0.0) t.entries_.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  }
  if (normalize) {
    if (t.entries_.empty()) throw ValidationError("cannot normalize an all-zero tensor (degenerate)");
    const double scale = 1.0 / std::sqrt(t.variance());
    for (Entry& e : t.entries_) e.value *= scale;
  }
  if (dim <= kExactDimCap && !t.entries_.empty()) {
    const wick::GaussianPolynomial f = t.to_polynomial();
    const double oracle = wick::isserlis_expectation(f * f);
    if (std::abs(oracle - t.variance()) > 1e-12 * std::max(1.0, oracle)) {
      throw Error("tensor variance disagrees with the Isserlis oracle");
    }
  }
  return t;
}

SymThreeTensor make_tensor(int dim, const std::vector<SymThreeTensor::Entry>& entries, bool normalize) {
  return SymThreeTensor::make(dim, entries, normalize);
}

double SymThreeTensor::operator()(int i, int j, int k) const {
  std::array<int, 3> idx{i, j, k};
  std::sort(idx.begin(), idx.end());
  if (idx[0] == idx[1] || idx[1] == idx[2]) return 0.0;
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), idx, [](const Entry& e, const auto& key) {
    return std::tie(e.i, e.j, e.k) < std::tie(key[0], key[1], key[2]);
  });
  if (it != entries_.end() && it->i == idx[0] && it->j == idx[1] && it->k == idx[2]) return it->value;
  return 0.0;
}

double SymThreeTensor::variance() const {
  double s = 0.0;
  for (const Entry& e : entries_) s += e.value * e.value;
  return 36.0 * s;
}

bool SymThreeTensor::is_unit_variance(double tol) const { return std::abs(variance() - 1.0) <= tol; }

std::vector<Eigen::MatrixXd> SymThreeTensor::slices() const {
  std::vector<Eigen::MatrixXd> s(static_cast<std::size_t>(dim_), Eigen::MatrixXd::Zero(dim_, dim_));
  for (const Entry& e : entries_) {
    s[e.i](e.j, e.k) = s[e.i](e.k, e.j) = e.value;
    s[e.j](e.i, e.k) = s[e.j](e.k, e.i) = e.value;
    s[e.k](e.i, e.j) = s[e.k](e.j, e.i) = e.value;
  }
  return s;
}

double SymThreeTensor::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  require_dim(*this, x.size(), "point");
  double s = 0.0;
  for (const Entry& e : entries_) s += e.value * x(e.i) * x(e.j) * x(e.k);
  return 6.0 * s;
}

wick::GaussianPolynomial SymThreeTensor::to_polynomial() const {
  const auto n = static_cast<std::size_t>(dim_);
  wick::GaussianPolynomial p(n);
  for (const Entry& e : entries_) {
    wick::Exponents ex(n, 0);
    ex[e.i] = ex[e.j] = ex[e.k] = 1;
    p.add_term(ex, 6.0 * e.value);
  }
  return p;
}

Eigen::VectorXd gradient(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_dim(t, x.size(), "point");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(t.dim());
  for (const auto& e : t.entries()) {
    const double c = 6.0 * e.value;
    g(e.i) += c * x(e.j) * x(e.k);
    g(e.j) += c * x(e.i) * x(e.k);
    g(e.k) += c * x(e.i) * x(e.j);
  }
  return g;
}

double gamma_F(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return gradient(t, x).squaredNorm();
}

double sharp_value(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& xhat) {
  require_dim(t, xhat.size(), "sharp copy");
  return gradient(t, x).dot(xhat);
}

SharpMatrixSample sample_sharp_matrix(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& xhat) {
  require_dim(t, xhat.size(), "sharp copy");
  SharpMatrixSample s{Eigen::MatrixXd::Zero(t.dim(), t.dim()), xhat};
  for (const auto& e : t.entries()) {
    const double c = 3.0 * e.value;
    s.matrix(e.i, e.j) += c * xhat(e.k);
    s.matrix(e.i, e.k) += c * xhat(e.j);
    s.matrix(e.j, e.k) += c * xhat(e.i);
  }
  s.matrix.triangularView<Eigen::StrictlyLower>() = s.matrix.transpose().triangularView<Eigen::StrictlyLower>();
  return s;
}

SpectrumSample spectrum(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol) {
  if (m.rows() != m.cols()) throw ValidationError("spectrum needs a square matrix");
  const double norm = m.norm();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(norm, 1.0)) {
    throw ValidationError("spectrum needs a symmetric matrix");
  }
  SpectrumSample out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  const double scale = std::max(norm, std::numeric_limits<double>::min());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    const double residual = (m * vecs.col(k) - ev(k) * vecs.col(k)).norm();
    if (residual > tol * scale) {
      throw ConvergenceError("eigenpair residual " + std::to_string(residual) + " exceeds tolerance");
    }
  }
  out.eigs = ev;
  const double drift = out.eigs.sum() - m.trace();
  if (std::abs(drift) > tol * std::max(norm, 1.0)) {
    out.eigs.array() -= drift / static_cast<double>(out.eigs.size());
    out.recentered = true;
  }
  std::sort(out.eigs.begin(), out.eigs.end(), [](double a, double b) {
    const double aa = std::abs(a), ab = std::abs(b);
    return aa != ab ? aa > ab : a > b;
  });
  return out;
}

SpectrumSample spectrum(const SharpMatrixSample& s, double tol) { return spectrum(s.matrix, tol); }

std::complex<double> det_inverse_sqrt(const Eigen::Ref<const Eigen::VectorXd>& eigs, double xi) {
  double log_mod = 0.0;
  double phase = 0.0;
  for (double l : eigs) {
    const double y = 2.0 * xi * l;
    log_mod -= 0.25 * std::log1p(y * y);
    // 1 - i y = sqrt-branch argument x = -y: phase of the inverse is -atan(-y)/2.
    phase += 0.5 * std::atan(y);
  }
  return std::polar(std::exp(log_mod), phase);
}

double GammaSpecResult::combined_se() const {
  return std::sqrt(lhs.std_error * lhs.std_error + rhs_re.std_error * rhs_re.std_error);
}

std::vector<GammaSpecResult> verify_gamma_spec(const SymThreeTensor& t, const std::vector<double>& xis,
                                               std::size_t n_samples, mc::RngSpec spec) {
  if (n_samples < 1000) throw PreconditionError("gamma-spec check needs at least 1000 samples");
  const std::size_t k = xis.size();
  const Eigen::Index n = t.dim();
  const std::vector<mc::EstimatorResult> lhs = mc::estimate_many(
      k,
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const double g = gamma_F(t, rng.gaussian_vector(n));
        for (std::size_t j = 0; j < k; ++j) out[j] = std::exp(-0.5 * xis[j] * xis[j] * g);
      },
      n_samples, spec);
  const mc::RngSpec hat_spec{spec.seed, spec.stream + 1};
  const std::vector<mc::EstimatorResult> rhs = mc::estimate_many(
      2 * k,
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const SpectrumSample s = spectrum(sample_sharp_matrix(t, rng.gaussian_vector(n)));
        for (std::size_t j = 0; j < k; ++j) {
          const std::complex<double> z = det_inverse_sqrt(s.eigs, xis[j]);
          out[2 * j] = z.real();
          out[2 * j + 1] = z.imag();
        }
      },
      n_samples, hat_spec);
  std::vector<GammaSpecResult> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = {xis[j], lhs[j], rhs[2 * j], rhs[2 * j + 1]};
  return out;
}

GammaSpecResult verify_gamma_spec(const SymThreeTensor& t, double xi, std::size_t n_samples, mc::RngSpec spec) {
  return verify_gamma_spec(t, std::vector<double>{xi}, n_samples, spec).front();
}

chaos2::DiagonalSecondChaos TraceFormSpectrum::gamma_carrier() const {
  return chaos2::DiagonalSecondChaos((betas.array().max(0.0).sqrt() * 0.5).matrix());
}

TraceFormSpectrum trace_form(const SymThreeTensor& t) {
  if (!t.is_unit_variance()) {
    throw PreconditionError("trace form requires a unit-variance tensor (E F^2 = " + std::to_string(t.variance()) +
                            ")");
  }
  const Eigen::Index n = t.dim();
  const std::vector<Eigen::MatrixXd> s = t.slices();
  TraceFormSpectrum out;
  out.b.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k; l < n; ++l) out.b(k, l) = out.b(l, k) = 9.0 * s[k].cwiseProduct(s[l]).sum();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.b, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("trace-form eigensolver did not converge");
  out.betas = solver.eigenvalues().reverse();
  out.expected_trace = out.betas.sum();
  out.variance_trace = 2.0 * out.b.squaredNorm();
  if (std::abs(out.expected_trace - 1.5) > 1e-12) {
    throw Error("trace-form eigenvalues sum to " + std::to_string(out.expected_trace) + ", expected 3/2");
  }
  return out;
}

double trace_square(const SymThreeTensor& t, const Eigen::Ref<const Eigen::VectorXd>& xhat) {
  return sample_sharp_matrix(t, xhat).matrix.squaredNorm();
}

Kappa4VarGamma kappa4_and_var_gamma(const SymThreeTensor& t, Mode mode, std::size_t n_samples, mc::RngSpec spec) {
  Kappa4VarGamma r;
  if (mode == Mode::exact) {
    if (t.dim() > kExactDimCap) {
      throw CapacityError("exact kappa_4 / Var Gamma limited to dimension " + std::to_string(kExactDimCap) +
                          ", got " + std::to_string(t.dim()));
    }
    const wick::GaussianPolynomial f = t.to_polynomial();
    const wick::GaussianPolynomial f2 = f * f;
    const double m2 = wick::isserlis_expectation(f2);
    r.kappa4 = wick::isserlis_expectation(f2 * f2) - 3.0 * m2 * m2;
    const wick::GaussianPolynomial g = wick::gamma_of_polynomial(f);
    const double eg = wick::isserlis_expectation(g);
    r.var_gamma = wick::isserlis_expectation(g * g) - eg * eg;
    r.bound_holds = std::sqrt(std::max(r.var_gamma, 0.0)) <= 3.0 * std::sqrt(std::max(r.kappa4, 0.0)) + 1e-12;
    return r;
  }
  const Eigen::Index n = t.dim();
  const std::vector<mc::EstimatorResult> est = mc::estimate_many(
      4,
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const Eigen::VectorXd x = rng.gaussian_vector(n);
        const double f = t.value(x);
        const double g = gamma_F(t, x);
        out[0] = f * f;
        out[1] = f * f * f * f;
        out[2] = g;
        out[3] = g * g;
      },
      n_samples, spec);
  const double m2 = est[0].mean;
  r.kappa4 = est[1].mean - 3.0 * m2 * m2;
  r.kappa4_se = est[1].std_error + 6.0 * std::abs(m2) * est[0].std_error;
  r.var_gamma = est[3].mean - est[2].mean * est[2].mean;
  r.var_gamma_se = est[3].std_error + 2.0 * std::abs(est[2].mean) * est[2].std_error;
  const double var_low = std::max(0.0, r.var_gamma - 3.0 * r.var_gamma_se);
  const double k4_high = std::max(0.0, r.kappa4 + 3.0 * r.kappa4_se);
  r.bound_holds = std::sqrt(var_low) <= 3.0 * std::sqrt(k4_high);
  return r;
}

double kappa4_contraction(const SymThreeTensor& t) {
  const Eigen::Index n = t.dim();
  const std::vector<Eigen::MatrixXd> s = t.slices();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k; l < n; ++l) m(k, l) = m(l, k) = s[k].cwiseProduct(s[l]).sum();
  }
  // Tetrahedral contraction: all six orderings of a triple give the same
  // Tr(A_i A_j A_k) for symmetric slices.
  double tetra = 0.0;
  int cached_i = -1, cached_j = -1;
  Eigen::MatrixXd prod;
  for (const auto& e : t.entries()) {
    if (e.i != cached_i || e.j != cached_j) {
      prod = s[e.i] * s[e.j];
      cached_i = e.i;
      cached_j = e.j;
    }
    tetra += 6.0 * e.value * prod.cwiseProduct(s[e.k]).sum();
  }
  return 1944.0 * m.squaredNorm() + 1296.0 * tetra;
}

mc::EstimatorResult spectral_radius_moments(const SymThreeTensor& t, int p, std::size_t n_samples,
                                            mc::RngSpec spec) {
  if (p < 1) throw DomainError("moment order p must be at least 1");
  const Eigen::Index n = t.dim();
  mc::EstimatorResult m = mc::estimate(
      [&](mc::GaussianStream& rng) {
        const SpectrumSample s = spectrum(sample_sharp_matrix(t, rng.gaussian_vector(n)));
        return std::pow(std::abs(s.eigs(0)), 2.0 * p);
      },
      n_samples, spec);
  const double inv = 1.0 / (2.0 * p);
  mc::EstimatorResult out = m;
  out.mean = std::pow(m.mean, inv);
  out.std_error = m.mean > 0.0 ? inv * std::pow(m.mean, inv - 1.0) * m.std_error : 0.0;
  return out;
}

SmallBallResult smallball_gamma3(const SymThreeTensor& t, std::vector<double> eps_grid, std::size_t n_samples,
                                 mc::RngSpec spec) {
  if (eps_grid.empty()) throw DomainError("small-ball grid is empty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0) || (i > 0 && !(eps_grid[i] > eps_grid[i - 1]))) {
      throw DomainError("small-ball grid must be positive and strictly increasing");
    }
  }
  const Eigen::Index n = t.dim();
  std::vector<double> values = mc::sample_values(
      [&](mc::GaussianStream& rng) { return gamma_F(t, rng.gaussian_vector(n)); }, n_samples, spec);
  std::sort(values.begin(), values.end());

  SmallBallResult out;
  const auto count_below = [&](double eps) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), eps) - values.begin());
  };
  double floor_eps = 0.0;
  if (values.size() >= kMinSmallBallHits) {
    floor_eps = std::nextafter(values[kMinSmallBallHits - 1], std::numeric_limits<double>::infinity());
  }
  const double nn = static_cast<double>(n_samples);
  for (double eps : eps_grid) {
    std::size_t hits = count_below(eps);
    if (hits < kMinSmallBallHits) {
      if (floor_eps <= 0.0) {
        out.warnings.push_back("too few samples to widen eps=" + std::to_string(eps));
        continue;
      }
      out.warnings.push_back("eps=" + std::to_string(eps) + " had " + std::to_string(hits) +
                             " hits; widened to " + std::to_string(floor_eps));
      eps = floor_eps;
      if (!out.rows.empty() && out.rows.back().eps >= eps) continue;
      hits = count_below(eps);
    }
    const double p = static_cast<double>(hits) / nn;
    out.rows.push_back({eps, p, std::sqrt(p * (1.0 - p) / nn), hits});
  }
  std::vector<mc::SlopePoint> pts;
  for (const auto& r : out.rows) pts.push_back({r.eps, r.p, r.se});
  if (pts.size() >= 3) {
    out.fit = mc::loglog_slope(pts);
    out.warnings.insert(out.warnings.end(), out.fit.warnings.begin(), out.fit.warnings.end());
  } else {
    out.warnings.push_back("fewer than 3 usable grid points; slope not fitted");
  }
  return out;
}

NegMomentResult negative_moment_gamma3(const SymThreeTensor& t, double theta, std::size_t n_samples,
                                       mc::RngSpec spec) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0, 1)");
  const Eigen::Index n = t.dim();
  std::vector<double> values = mc::sample_values(
      [&](mc::GaussianStream& rng) { return std::pow(gamma_F(t, rng.gaussian_vector(n)), -theta); }, n_samples,
      spec);
  NegMomentResult r;
  r.estimate = mc::summarize(values, spec);
  const std::size_t top = std::max<std::size_t>(1, values.size() / 1000);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(top), values.end(),
                   std::greater<>());
  const double total = mc::pairwise_sum(values);
  const double head = mc::pairwise_sum(std::span<const double>(values.data(), top));
  r.top_share = total > 0.0 ? head / total : 0.0;
  r.unstable = r.top_share > 0.5;
  return r;
}

double elementary_symmetric_spectrum(const SpectrumSample& s, int p) {
  if (p < 1 || p > s.eigs.size()) {
    throw DomainError("S_p needs 1 <= p <= N (p = " + std::to_string(p) + ", N = " + std::to_string(s.eigs.size()) +
                      ")");
  }
  const Eigen::VectorXd sq = s.eigs.array().square().matrix();
  return elementary_from_power_sums(power_sums(sq, p))(p - 1);
}

SpBatchResult sp_batch(const SymThreeTensor& t, int p, const std::vector<double>& alpha_grid, std::size_t n_samples,
                       mc::RngSpec spec) {
  if (p < 1 || p > t.dim()) throw DomainError("S_p needs 1 <= p <= N");
  const Eigen::Index n = t.dim();
  const std::size_t k = alpha_grid.size();
  const std::vector<mc::EstimatorResult> est = mc::estimate_many(
      1 + k,
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const double sp = elementary_symmetric_spectrum(spectrum(sample_sharp_matrix(t, rng.gaussian_vector(n))), p);
        out[0] = sp;
        for (std::size_t j = 0; j < k; ++j) out[1 + j] = sp <= alpha_grid[j] ? 1.0 : 0.0;
      },
      n_samples, spec);
  SpBatchResult r;
  r.p = p;
  r.mean_sp = est[0];
  r.lower_bound = 0.5 * std::pow(3.0, p) / (std::ldexp(1.0, p) * factorial(p));
  r.bound_holds = r.mean_sp.mean >= r.lower_bound;
  r.alphas = alpha_grid;
  r.smallball.assign(est.begin() + 1, est.end());
  return r;
}

DtvBound dtv_bound(double kappa4) {
  if (!(kappa4 >= 0.0)) throw DomainError("dtv bound needs kappa_4 >= 0");
  const double raw = std::sqrt(kappa4 / 3.0);
  return {raw, std::min(raw, 1.0)};
}

}  // namespace wiener::chaos3
