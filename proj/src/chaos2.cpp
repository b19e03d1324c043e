#include "wiener/chaos2.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wiener/errors.hpp"
#include "wiener/quadrature.hpp"
#include "wiener/symmetric_functions.hpp"

namespace wiener::chaos2 {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

// log(1 + exp(s)) without overflow.
double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

// log E exp(-lambda Gamma) at lambda = exp(u).
double log_laplace_at_log_lambda(const Eigen::VectorXd& alphas, double u) {
  double acc = 0.0;
  for (double a : alphas) {
    if (a == 0.0) continue;
    acc -= 0.5 * softplus(u + std::log(8.0 * a * a));
  }
  return acc;
}

wick::GaussianPolynomial quadratic_form(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  wick::GaussianPolynomial p(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double c = m(a, b);
      if (c == 0.0) continue;
      wick::Exponents e(n, 0);
      ++e[a];
      ++e[b];
      p.add_term(e, c);
    }
  }
  return p;
}

double exact_variance(const wick::GaussianPolynomial& p) {
  const double mean = wick::isserlis_expectation(p);
  return wick::isserlis_expectation(p * p) - mean * mean;
}

}  // namespace

DiagonalSecondChaos::DiagonalSecondChaos(Eigen::VectorXd alphas) : alphas_(std::move(alphas)) {
  if (alphas_.size() == 0) throw ValidationError("second-chaos coefficient vector is empty");
  if (!alphas_.allFinite()) throw ValidationError("second-chaos coefficients must be finite");
  if (alphas_.squaredNorm() == 0.0) throw ValidationError("all-zero coefficients give a degenerate (variance 0) variable");
}

DiagonalSecondChaos DiagonalSecondChaos::normalized(Eigen::VectorXd alphas) {
  DiagonalSecondChaos f(std::move(alphas));
  f.alphas_ /= std::sqrt(f.variance());
  return f;
}

Eigen::Index DiagonalSecondChaos::nonzero_count() const { return (alphas_.array() != 0.0).count(); }

bool DiagonalSecondChaos::is_unit_variance(double tol) const {
  return std::abs(alphas_.squaredNorm() - 0.5) <= tol;
}

double DiagonalSecondChaos::value(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  if (g.size() != alphas_.size()) throw ValidationError("sample dimension does not match coefficient count");
  return (alphas_.array() * (g.array().square() - 1.0)).sum();
}

double DiagonalSecondChaos::gamma(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  if (g.size() != alphas_.size()) throw ValidationError("sample dimension does not match coefficient count");
  return 4.0 * (alphas_.array().square() * g.array().square()).sum();
}

wick::GaussianPolynomial DiagonalSecondChaos::to_polynomial() const {
  const auto n = static_cast<std::size_t>(alphas_.size());
  wick::GaussianPolynomial p(n);
  for (std::size_t k = 0; k < n; ++k) {
    wick::Exponents e(n, 0);
    e[k] = 2;
    p.add_term(e, alphas_(static_cast<Eigen::Index>(k)));
    p.add_term(wick::Exponents(n, 0), -alphas_(static_cast<Eigen::Index>(k)));
  }
  return p;
}

double cumulant_from_newton_sum(int p, double newton_sum) {
  return std::ldexp(factorial(2 * p - 1), 2 * p - 1) * newton_sum;
}

SymmetricFunctionTable newton_cumulants(const DiagonalSecondChaos& f, int p_max) {
  if (p_max < 1) throw DomainError("p_max must be at least 1");
  SymmetricFunctionTable t;
  t.p_max = p_max;
  t.newton = power_sums(f.alphas().array().square().matrix(), p_max);
  t.elementary = elementary_from_power_sums(t.newton);
  t.cumulants.resize(p_max);
  for (int p = 1; p <= p_max; ++p) t.cumulants(p - 1) = cumulant_from_newton_sum(p, t.newton(p - 1));
  return t;
}

SpDeviation check_sp_deviation(const DiagonalSecondChaos& f, int p) {
  if (p < 1) throw DomainError("p must be at least 1");
  if (!f.is_unit_variance()) {
    throw PreconditionError("S_p deviation bound requires a unit-variance variable (2 sum alpha^2 = " +
                            std::to_string(f.variance()) + ")");
  }
  const SymmetricFunctionTable t = newton_cumulants(f, p);
  SpDeviation d;
  d.lhs = std::abs(t.elementary(p - 1) - 1.0 / (std::ldexp(1.0, p) * factorial(p)));
  d.rhs = p * kappa4(f) / 48.0;
  d.holds = d.lhs <= d.rhs;
  return d;
}

double laplace_gamma(const DiagonalSecondChaos& f, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("Laplace transform needs lambda >= 0");
  double log_l = 0.0;
  for (double a : f.alphas()) log_l -= 0.5 * std::log1p(8.0 * lambda * a * a);
  return std::exp(log_l);
}

Thm1Certificate thm1_certificate(double kappa4, int p) {
  if (p < 1) throw DomainError("certificate level p must be at least 1");
  if (!(kappa4 >= 0.0)) throw DomainError("kappa_4 of a second-chaos variable is nonnegative");
  Thm1Certificate c;
  c.threshold = 24.0 / (std::ldexp(1.0, p) * factorial(p + 1));
  c.certified = kappa4 < c.threshold;
  c.q_sup = c.certified ? p / 2.0 : 0.0;
  return c;
}

int max_certified_level(double kappa4, int p_cap) {
  int best = 0;
  for (int p = 1; p <= p_cap; ++p) {
    if (!thm1_certificate(kappa4, p).certified) break;
    best = p;
  }
  return best;
}

double smallball_bound(int p, double eps) {
  if (p < 1) throw DomainError("p must be at least 1");
  if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
  return std::sqrt(2.0 * factorial(p)) / std::ldexp(1.0, p) * std::pow(eps, p / 2.0);
}

double negative_moment(const DiagonalSecondChaos& f, double q, NegativeMomentOptions opts) {
  if (!(q > 0.0)) throw DomainError("negative moment order q must be positive");
  const double half_m = 0.5 * static_cast<double>(f.nonzero_count());
  if (q >= half_m) {
    throw DivergenceError("E Gamma^{-q} diverges for q >= m/2 (q = " + std::to_string(q) +
                          ", m = " + std::to_string(f.nonzero_count()) + ")");
  }
  const Eigen::VectorXd& alphas = f.alphas();

  // [0,1] with lambda = t^{1/q}: int_0^1 lambda^{q-1} L d lambda = (1/q) int_0^1 L(t^{1/q}) dt.
  const auto head_integrand = [&](double t) {
    if (t <= 0.0) return 1.0;
    return std::exp(log_laplace_at_log_lambda(alphas, std::log(t) / q));
  };
  const quadrature::Result head = quadrature::gauss_kronrod(head_integrand, 0.0, 1.0, 0.1 * opts.rel_tol);
  if (!head.converged) throw AccuracyError("Mellin integral did not converge on [0,1]");
  double total = head.value / q;

  // [1,inf) with lambda = e^u: integrand e^{qu} L(e^u), decaying like e^{-(m/2-q)u}.
  const auto tail_integrand = [&](double u) { return std::exp(q * u + log_laplace_at_log_lambda(alphas, u)); };
  const double decay = half_m - q;
  const double width = std::clamp(4.0 / decay, 1.0, 64.0);
  double u = 0.0;
  for (int block = 0;; ++block) {
    if (block > 100000) throw AccuracyError("Mellin tail integration exceeded its block budget");
    const quadrature::Result r = quadrature::gauss_kronrod(tail_integrand, u, u + width, 0.1 * opts.rel_tol);
    if (!r.converged) throw AccuracyError("Mellin integral did not converge on the tail");
    total += r.value;
    u += width;
    const double g = tail_integrand(u);
    if (g < opts.tail_cutoff && g / decay < opts.rel_tol * total) break;
  }
  return total / std::tgamma(q);
}

std::complex<double> char_function(const DiagonalSecondChaos& f, double xi) {
  double log_mod = 0.0;
  double phase = 0.0;
  for (double a : f.alphas()) {
    const double x = 2.0 * a * xi;
    log_mod -= 0.25 * std::log1p(x * x);
    // e^{-i a xi} / sqrt(1 - i x) with sqrt(1 + i y) = (1+y^2)^{1/4} e^{i atan(y)/2}, y = -x.
    phase += -a * xi + 0.5 * std::atan(x);
  }
  return std::polar(std::exp(log_mod), phase);
}

DensityResult density_by_inversion(const DiagonalSecondChaos& f, const DensityGrid& grid, double tail_tol) {
  if (f.nonzero_count() < 3) {
    throw PreconditionError("characteristic function is not integrable with fewer than 3 nonzero coefficients");
  }
  if (!(grid.step > 0.0) || !(grid.hi >= grid.lo)) throw DomainError("invalid density grid");

  const Eigen::ArrayXd a2 = f.alphas().array().square();
  const auto log_modulus = [&](double xi) { return -0.25 * (4.0 * a2 * xi * xi).log1p().sum(); };
  // |phi| is decreasing in |xi|; bracket then bisect for |phi(xi_max)| = tail_tol.
  const double target = std::log(tail_tol);
  double hi = 1.0;
  while (log_modulus(hi) > target) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (log_modulus(mid) > target ? lo : hi) = mid;
  }
  const double xi_max = hi;

  // Aliasing period: the trapezoid rule in xi replicates the density with
  // period 2 pi / h, which must clear the grid plus the tails of F.
  const double amax = f.alphas().cwiseAbs().maxCoeff();
  const double reach = std::max(std::abs(grid.lo), std::abs(grid.hi)) + 20.0 * std::sqrt(f.variance()) + 60.0 * amax;
  const double h_max = std::numbers::pi / reach;
  const auto steps = static_cast<Eigen::Index>(std::ceil(xi_max / h_max));
  const double h = xi_max / static_cast<double>(steps);

  Eigen::VectorXcd phi(steps + 1);
  for (Eigen::Index j = 0; j <= steps; ++j) phi(j) = char_function(f, h * static_cast<double>(j));
  phi(0) *= 0.5;
  phi(steps) *= 0.5;

  const auto points = static_cast<Eigen::Index>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
  DensityResult out;
  out.x.resize(points);
  out.density.resize(points);
  out.xi_max = xi_max;
  out.xi_step = h;
  constexpr Eigen::Index kResync = 256;
  for (Eigen::Index i = 0; i < points; ++i) {
    const double x = grid.lo + grid.step * static_cast<double>(i);
    const std::complex<double> w = std::polar(1.0, -h * x);
    std::complex<double> rot = 1.0;
    double acc = 0.0;
    for (Eigen::Index j = 0; j <= steps; ++j) {
      if (j % kResync == 0) rot = std::polar(1.0, -h * x * static_cast<double>(j));
      acc += (rot * phi(j)).real();
      rot *= w;
    }
    out.x(i) = x;
    out.density(i) = acc * h / std::numbers::pi;
  }
  return out;
}

double integrate_samples(const DensityResult& d) {
  if (d.x.size() < 2) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 1; i < d.x.size(); ++i) s += 0.5 * (d.density(i) + d.density(i - 1)) * (d.x(i) - d.x(i - 1));
  return s;
}

double tv_distance_to_normal(const DensityResult& d) {
  const auto gauss = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  double s = 0.0;
  for (Eigen::Index i = 1; i < d.x.size(); ++i) {
    const double l = std::abs(d.density(i - 1) - gauss(d.x(i - 1)));
    const double r = std::abs(d.density(i) - gauss(d.x(i)));
    s += 0.5 * (l + r) * (d.x(i) - d.x(i - 1));
  }
  return 0.5 * s;
}

MultivariateSecondChaos::MultivariateSecondChaos(std::vector<Eigen::MatrixXd> mats, double symmetry_tol)
    : mats_(std::move(mats)) {
  if (mats_.empty()) throw ValidationError("multivariate second chaos needs at least one matrix");
  const Eigen::Index n = mats_.front().rows();
  for (std::size_t i = 0; i < mats_.size(); ++i) {
    const Eigen::MatrixXd& a = mats_[i];
    if (a.rows() != n || a.cols() != n || n == 0) {
      throw ValidationError("matrix " + std::to_string(i + 1) + " is not " + std::to_string(n) + "x" +
                            std::to_string(n));
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale) {
      throw ValidationError("matrix " + std::to_string(i + 1) + " is not symmetric");
    }
  }
}

Eigen::MatrixXd MultivariateSecondChaos::covariance() const {
  const Eigen::Index d = count();
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) c(i, j) = 2.0 * (mats_[i] * mats_[j]).trace();
  }
  return c;
}

bool MultivariateSecondChaos::has_identity_covariance(double tol) const {
  return (covariance() - Eigen::MatrixXd::Identity(count(), count())).cwiseAbs().maxCoeff() <= tol;
}

MultivariateSecondChaos MultivariateSecondChaos::whitened() const {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance());
  const Eigen::VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
    throw ValidationError("covariance is singular; the family cannot be whitened");
  }
  const Eigen::MatrixXd w = es.operatorInverseSqrt();
  std::vector<Eigen::MatrixXd> out;
  for (Eigen::Index i = 0; i < count(); ++i) out.push_back(combination(w.row(i).transpose()));
  return MultivariateSecondChaos(std::move(out));
}

Eigen::MatrixXd MultivariateSecondChaos::combination(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  if (t.size() != count()) throw ValidationError("direction has wrong dimension");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim(), dim());
  for (Eigen::Index i = 0; i < count(); ++i) a += t(i) * mats_[i];
  return a;
}

wick::GaussianPolynomial MultivariateSecondChaos::component_polynomial(Eigen::Index i) const {
  const Eigen::MatrixXd& a = mats_.at(static_cast<std::size_t>(i));
  return quadratic_form(a) - wick::GaussianPolynomial::constant(static_cast<std::size_t>(dim()), a.trace());
}

double kappa4_of_matrix(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd a2 = a * a;
  return 48.0 * (a2 * a2).trace();
}

std::vector<Eigen::VectorXd> sphere_grid(Eigen::Index d, int count, std::uint64_t seed) {
  if (d < 1) throw DomainError("sphere dimension must be at least 1");
  std::vector<Eigen::VectorXd> out;
  if (d == 1) {
    out.push_back(Eigen::VectorXd::Constant(1, 1.0));
    out.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return out;
  }
  if (count < 1) throw DomainError("sphere grid needs at least one point");
  out.reserve(count);
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * k / count;
      out.push_back((Eigen::VectorXd(2) << std::cos(th), std::sin(th)).finished());
    }
  } else if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back((Eigen::VectorXd(3) << r * std::cos(golden * k), r * std::sin(golden * k), z).finished());
    }
  } else {
    for (int k = 0; k < count; ++k) {
      Eigen::VectorXd v = mc::gaussian_vector({seed, static_cast<std::uint64_t>(k)}, d);
      out.push_back(v.normalized());
    }
  }
  return out;
}

CrossGammaStats cross_gamma_stats(const MultivariateSecondChaos& m, int directions) {
  const Eigen::Index d = m.count();
  CrossGammaStats s;
  s.var_gamma_diag.resize(d);
  s.gamma_l2 = Eigen::MatrixXd::Zero(d, d);
  double max_var = 0.0;
  double max_cross = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      const Eigen::MatrixXd prod = m.mats()[i] * m.mats()[j];
      const wick::GaussianPolynomial g = quadratic_form(4.0 * 0.5 * (prod + prod.transpose()));
      const double l2 = std::sqrt(std::max(0.0, wick::isserlis_expectation(g * g)));
      s.gamma_l2(i, j) = s.gamma_l2(j, i) = l2;
      if (i == j) {
        s.var_gamma_diag(i) = exact_variance(g);
        max_var = std::max(max_var, s.var_gamma_diag(i));
      } else {
        max_cross = std::max(max_cross, l2);
      }
    }
  }
  s.bound = max_var + static_cast<double>(d * d) * max_cross;
  s.holds = true;
  for (const Eigen::VectorXd& t : sphere_grid(d, directions)) {
    const Eigen::MatrixXd at = m.combination(t);
    const double var = exact_variance(quadratic_form(4.0 * at * at));
    const bool ok = var <= s.bound * (1.0 + 1e-12) + 1e-12;
    s.holds = s.holds && ok;
    s.directions.push_back({t, var, ok});
  }
  return s;
}

SphereMax sphere_kappa4_max(const MultivariateSecondChaos& m, int resolution) {
  const Eigen::Index d = m.count();
  const auto objective = [&](const Eigen::VectorXd& t) { return kappa4_of_matrix(m.combination(t)); };
  std::vector<Eigen::VectorXd> grid = sphere_grid(d, resolution);
  std::vector<std::pair<double, Eigen::Index>> scored;
  for (std::size_t k = 0; k < grid.size(); ++k) scored.emplace_back(objective(grid[k]), static_cast<Eigen::Index>(k));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  SphereMax best{scored.front().first, grid[static_cast<std::size_t>(scored.front().second)]};
  if (d == 1) return best;
  const std::size_t starts = std::min<std::size_t>(4, scored.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd t = grid[static_cast<std::size_t>(scored[s].second)];
    double value = scored[s].first;
    double step = 0.1;
    for (int it = 0; it < 500 && step > 1e-14; ++it) {
      const Eigen::MatrixXd at = m.combination(t);
      const Eigen::MatrixXd at3 = at * at * at;
      Eigen::VectorXd grad(d);
      for (Eigen::Index i = 0; i < d; ++i) grad(i) = 48.0 * 4.0 * (at3 * m.mats()[i]).trace();
      grad -= grad.dot(t) * t;  // tangent component
      if (grad.norm() < 1e-14) break;
      const Eigen::VectorXd candidate = (t + step * grad / grad.norm()).normalized();
      const double cv = objective(candidate);
      if (cv > value) {
        t = candidate;
        value = cv;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    if (value > best.value) best = {value, t};
  }
  return best;
}

}  // namespace wiener::chaos2
