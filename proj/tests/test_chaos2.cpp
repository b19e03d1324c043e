#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wiener/chaos2.hpp"
#include "wiener/errors.hpp"
#include "wiener/symmetric_functions.hpp"
#include "wiener/wick.hpp"

using namespace wiener::chaos2;
using wiener::wick::isserlis_expectation;

namespace {

DiagonalSecondChaos diag(std::initializer_list<double> a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (double x : a) v(i++) = x;
  return DiagonalSecondChaos(v);
}

const double kRootHalf = 1.0 / std::sqrt(2.0);

DiagonalSecondChaos chi2_average(int n) {
  return DiagonalSecondChaos(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(2.0 * n)));
}

// kappa_r of F from Isserlis moments.
std::vector<double> isserlis_cumulants(const DiagonalSecondChaos& f, int count) {
  const auto m = wiener::wick::moments(f.to_polynomial(), count);
  return wiener::wick::cumulants_from_moments(std::span<const double>(m));
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("construction and normalization") {
  CHECK_THROWS_AS(DiagonalSecondChaos(Eigen::VectorXd()), wiener::ValidationError);
  CHECK_THROWS_AS(DiagonalSecondChaos(Eigen::VectorXd::Zero(3)), wiener::ValidationError);
  const auto f = DiagonalSecondChaos::normalized(Eigen::Vector3d(1, 2, 3));
  CHECK(f.is_unit_variance());
  CHECK(f.variance() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(diag({0.5, 0.5}).is_unit_variance());
  CHECK_FALSE(diag({0.5, 0.6}).is_unit_variance());
}

TEST_CASE("variance agrees with the Isserlis oracle") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::VectorXd a(4);
    for (int i = 0; i < 4; ++i) a(i) = u(gen);
    const DiagonalSecondChaos f(a);
    const auto p = f.to_polynomial();
    CHECK(isserlis_expectation(p * p) == doctest::Approx(f.variance()).epsilon(1e-12));
  }
}

TEST_CASE("newton cumulant examples") {
  const auto t = newton_cumulants(diag({kRootHalf}), 2);
  CHECK(t.newton(0) == doctest::Approx(0.5));
  CHECK(t.newton(1) == doctest::Approx(0.25));
  CHECK(t.cumulants(0) == doctest::Approx(1.0));
  CHECK(t.cumulants(1) == doctest::Approx(12.0));
  CHECK(t.elementary(1) == 0.0);
  CHECK(isserlis_cumulants(diag({kRootHalf}), 4)[3] == doctest::Approx(12.0));

  const auto h = newton_cumulants(diag({0.5, 0.5}), 3);
  CHECK(h.elementary(0) == doctest::Approx(0.5));
  CHECK(h.elementary(1) == doctest::Approx(1.0 / 16));
  CHECK(h.elementary(1) == doctest::Approx((h.newton(0) * h.newton(0) - h.newton(1)) / 2));
  CHECK(h.elementary(2) == 0.0);

  const auto f = DiagonalSecondChaos::normalized(Eigen::Vector3d(1, -2, 0.5));
  CHECK(newton_cumulants(f, 1).cumulants(0) == doctest::Approx(f.variance()));
}

TEST_CASE("cumulant identity against Isserlis for random vectors") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 6;
    const DiagonalSecondChaos f(oracle::unit_alphas(gen, m));
    const auto table = newton_cumulants(f, 3);
    const auto k = isserlis_cumulants(f, 6);
    for (int p = 1; p <= 3; ++p) {
      CHECK(table.cumulants(p - 1) == doctest::Approx(k[2 * p - 1]).epsilon(1e-10));
    }
  }
}

TEST_CASE("symmetric functions against subset and partition oracles") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 8;
    const DiagonalSecondChaos f(oracle::unit_alphas(gen, m));
    const auto t = newton_cumulants(f, 6);
    std::vector<double> sq(m), newton(6);
    for (int i = 0; i < m; ++i) sq[i] = f.alphas()(i) * f.alphas()(i);
    for (int p = 0; p < 6; ++p) newton[p] = t.newton(p);
    for (int p = 1; p <= 6; ++p) {
      const double rec = t.elementary(p - 1);
      CHECK(rec == doctest::Approx(oracle::elementary_by_subsets(sq, p)).epsilon(1e-10).scale(1e-3));
      CHECK(rec == doctest::Approx(oracle::elementary_by_partitions(newton, p)).epsilon(1e-10).scale(1e-3));
      if (p > m) CHECK(std::abs(rec) < 1e-15);
    }
  }
}

TEST_CASE("symmetric function table invariants") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const DiagonalSecondChaos f(oracle::unit_alphas(gen, 5));
    const auto t = newton_cumulants(f, 8);
    for (int p = 0; p < 8; ++p) {
      CHECK(t.newton(p) >= 0.0);
      CHECK(t.elementary(p) >= -1e-15);
      if (p > 0) CHECK(t.newton(p) <= t.newton(p - 1));
    }
    CHECK((f.alphas().array().square() <= 0.5 + 1e-15).all());
  }
}

TEST_CASE("power sums template works on expressions") {
  const Eigen::Vector3d w(1, 2, 3);
  const auto n = wiener::power_sums(w.array().square().matrix(), 3);
  CHECK(n(0) == 14.0);
  CHECK(n(1) == 98.0);
  CHECK(n(2) == 794.0);
  const Eigen::Vector3f wf(1, 2, 3);
  CHECK(wiener::power_sums(wf, 2)(1) == 14.0f);
}

TEST_CASE("S_p deviation inequality") {
  const auto h = check_sp_deviation(diag({0.5, 0.5}), 2);
  CHECK(h.lhs == doctest::Approx(1.0 / 16));
  CHECK(h.rhs == doctest::Approx(0.25));
  CHECK(h.holds);

  const auto c = check_sp_deviation(chi2_average(8), 2);
  CHECK(c.rhs == doctest::Approx((12.0 / 8) / 24));
  CHECK(c.holds);

  const auto s = check_sp_deviation(diag({kRootHalf}), 2);
  CHECK(s.lhs == doctest::Approx(0.125));
  CHECK(s.rhs == doctest::Approx(0.5));
  CHECK(s.holds);

  CHECK_THROWS_AS(check_sp_deviation(diag({1.0, 1.0}), 2), wiener::PreconditionError);

  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const DiagonalSecondChaos f(oracle::unit_alphas(gen, 1 + trial % 6));
    for (int p = 1; p <= 6; ++p) CHECK(check_sp_deviation(f, p).holds);
  }
}

TEST_CASE("laplace transform") {
  CHECK(laplace_gamma(diag({0.3, 0.4}), 0.0) == 1.0);
  CHECK(laplace_gamma(diag({kRootHalf}), 1.0) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-14));
  CHECK(laplace_gamma(diag({0.5, 0.5}), 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(laplace_gamma(diag({0.5}), -0.1), wiener::DomainError);
}

TEST_CASE("theorem certificate and small-ball bound") {
  CHECK(thm1_certificate(0.0, 2).threshold == doctest::Approx(1.0));
  const auto c3 = thm1_certificate(12.0 / 192, 3);
  CHECK(c3.threshold == doctest::Approx(0.125));
  CHECK(c3.certified);
  CHECK(c3.q_sup == doctest::Approx(1.5));
  const auto c1 = thm1_certificate(12.0, 1);
  CHECK(c1.threshold == doctest::Approx(6.0));
  CHECK_FALSE(c1.certified);
  CHECK(max_certified_level(12.0 / 192) == 3);

  CHECK(smallball_bound(2, 0.01) == doctest::Approx(0.005));
  CHECK(smallball_bound(1, 1.0) == doctest::Approx(std::sqrt(2.0) / 2));
  double prev = smallball_bound(3, 1.0);
  for (double e = 0.5; e > 1e-6; e /= 2) {
    const double b = smallball_bound(3, e);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("small-ball probability respects the certified bound") {
  const auto f = chi2_average(64);
  const int p = max_certified_level(kappa4(f));
  REQUIRE(p >= 2);
  const std::size_t n = 100000;
  for (double eps : {0.5, 1.0, 1.5}) {
    const auto r = wiener::mc::estimate(
        [&](wiener::mc::GaussianStream& g) { return f.gamma(g.gaussian_vector(64)) < eps ? 1.0 : 0.0; }, n,
        {12, 0});
    const double se = std::sqrt(r.mean * (1 - r.mean) / n);
    CHECK(r.mean <= smallball_bound(p, eps) + 3 * se);
  }
}

TEST_CASE("negative moments") {
  const double closed = std::tgamma(0.25) / std::sqrt(2.0 * M_PI);
  CHECK(negative_moment(diag({kRootHalf}), 0.25) == doctest::Approx(closed).epsilon(1e-8));
  CHECK(std::abs(negative_moment(diag({kRootHalf}), 0.25) - 1.44640) < 1e-5);
  CHECK_THROWS_AS(negative_moment(diag({kRootHalf}), 0.5), wiener::DivergenceError);

  // Gamma = G1^2 + G2^2 ~ Exp(1/2): E Gamma^{-1/2} = Gamma(1/2) / sqrt(2).
  const auto h = diag({0.5, 0.5});
  CHECK(negative_moment(h, 0.5) == doctest::Approx(std::sqrt(M_PI / 2)).epsilon(1e-8));

  // Sum of m scaled squares with equal weights: E (4a^2 chi2_m)^{-q} in closed form.
  const auto f = chi2_average(10);
  const double scale = 4.0 / 20.0;
  const double q = 1.7;
  const double exact = std::pow(2.0 * scale, -q) * std::tgamma(5.0 - q) / std::tgamma(5.0);
  CHECK(negative_moment(f, q) == doctest::Approx(exact).epsilon(1e-8));

  const auto mc = wiener::mc::estimate(
      [&](wiener::mc::GaussianStream& g) { return std::pow(h.gamma(g.gaussian_vector(2)), -0.5); }, 200000, {3, 0});
  CHECK(std::abs(mc.mean - negative_moment(h, 0.5)) <= 3 * mc.std_error);
}

TEST_CASE("characteristic function") {
  const auto f = diag({0.3, -0.2, 0.5});
  CHECK(char_function(f, 0.0) == std::complex<double>(1.0, 0.0));
  CHECK(std::abs(char_function(diag({kRootHalf}), 1.0)) == doctest::Approx(std::pow(3.0, -0.25)).epsilon(1e-14));

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const DiagonalSecondChaos g(oracle::unit_alphas(gen, 1 + trial % 7));
    const double xi = u(gen) * 4;
    const auto phi = char_function(g, xi);
    const double prod = (1.0 + 4.0 * g.alphas().array().square() * xi * xi).sqrt().prod();
    CHECK(std::norm(phi) * prod == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(phi) <= 1.0 + 1e-15);
  }

  // Single coefficient: E exp(i xi a (G^2 - 1)) by direct quadrature of the Gaussian integral.
  const double a = 0.4, xi = 1.3;
  std::complex<double> acc = 0.0;
  const double h = 1e-3;
  for (double x = -12; x <= 12; x += h) {
    acc += std::exp(std::complex<double>(0, xi * a * (x * x - 1))) * std::exp(-x * x / 2) * h;
  }
  acc /= std::sqrt(2 * M_PI);
  const auto phi = char_function(diag({a}), xi);
  CHECK(phi.real() == doctest::Approx(acc.real()).epsilon(1e-6));
  CHECK(phi.imag() == doctest::Approx(acc.imag()).epsilon(1e-6));
}

TEST_CASE("density inversion") {
  SUBCASE("chi2 average n = 64 integrates to one") {
    const auto d = density_by_inversion(chi2_average(64), {-10, 10, 0.01});
    CHECK(std::abs(integrate_samples(d) - 1.0) <= 1e-3);
    for (Eigen::Index i = 0; i < d.x.size(); ++i) {
      if (std::abs(d.x(i)) <= 4) REQUIRE(d.density(i) >= -1e-3);
    }
  }
  SUBCASE("approaches the standard normal density") {
    const auto d = density_by_inversion(chi2_average(256), {-1, 1, 0.5});
    CHECK(std::abs(d.density(2) - 0.39894228) < 0.01);
  }
  SUBCASE("n = 4 against the chi-square density") {
    const auto d = density_by_inversion(chi2_average(4), {-1.4, 6, 0.02});
    double worst = 0.0;
    Eigen::Index argmax = 0;
    for (Eigen::Index i = 0; i < d.x.size(); ++i) {
      worst = std::max(worst, std::abs(d.density(i) - oracle::chi2_4_standardized_density(d.x(i))));
      if (d.density(i) > d.density(argmax)) argmax = i;
    }
    CHECK(worst < 2e-3);
    CHECK(d.x(argmax) < 0.0);
  }
  SUBCASE("too few coefficients") {
    CHECK_THROWS_AS(density_by_inversion(diag({0.5, 0.5}), {-1, 1, 0.1}), wiener::PreconditionError);
  }
}

TEST_CASE("multivariate worked example") {
  const MultivariateSecondChaos m({mat2(0.5, 0, 0, -0.5), mat2(0, 0.5, 0.5, 0)});
  CHECK(m.has_identity_covariance());
  const auto stats = cross_gamma_stats(m, 64);
  CHECK(std::abs(stats.gamma_l2(0, 1)) < 1e-12);
  CHECK(stats.var_gamma_diag(0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(stats.holds);
  CHECK(stats.directions.size() == 64);
  for (const auto& d : stats.directions) {
    CHECK(kappa4_of_matrix(m.combination(d.t)) == doctest::Approx(6.0).epsilon(1e-12));
  }
  CHECK(sphere_kappa4_max(m).value == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("multivariate covariance against Isserlis") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n01;
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd a(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(r, c) = n01(gen);
    mats.push_back((a + a.transpose()) / 2);
  }
  const MultivariateSecondChaos m(mats);
  const Eigen::MatrixXd cov = m.covariance();
  for (int i = 0; i < 3; ++i) {
    CHECK(isserlis_expectation(m.component_polynomial(i)) == doctest::Approx(0.0).scale(1.0));
    for (int j = 0; j < 3; ++j) {
      const double e = isserlis_expectation(m.component_polynomial(i) * m.component_polynomial(j));
      CHECK(cov(i, j) == doctest::Approx(e).epsilon(1e-12));
    }
  }
  // kappa_4 of one component by Isserlis.
  const auto mom = wiener::wick::moments(m.component_polynomial(0), 4);
  const auto k = wiener::wick::cumulants_from_moments(mom[0], mom[1], mom[2], mom[3]);
  CHECK(kappa4_of_matrix(mats[0]) == doctest::Approx(k.k4).epsilon(1e-10));
}

namespace {

std::vector<Eigen::MatrixXd> random_symmetric(std::mt19937_64& gen, int d, int n) {
  std::normal_distribution<double> n01;
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd a(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = n01(gen);
    mats.push_back((a + a.transpose()) / 2);
  }
  return mats;
}

}  // namespace

TEST_CASE("combined variance bound under identity covariance") {
  std::mt19937_64 gen(33);
  int tested = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 3;
    const int n = 3 + trial % 4;
    const MultivariateSecondChaos m = MultivariateSecondChaos(random_symmetric(gen, d, n)).whitened();
    REQUIRE(m.has_identity_covariance(1e-10));
    const auto stats = cross_gamma_stats(m, 64);
    CHECK(stats.holds);
    ++tested;
  }
  CHECK(tested == 60);
}

TEST_CASE("combined variance bound can fail without the covariance normalization") {
  std::mt19937_64 gen(21);
  const MultivariateSecondChaos raw(random_symmetric(gen, 3, 3));
  CHECK_FALSE(raw.has_identity_covariance());
  const auto stats = cross_gamma_stats(raw, 64);
  CHECK_FALSE(stats.holds);
  CHECK(cross_gamma_stats(raw.whitened(), 64).holds);
}

TEST_CASE("whitening rejects singular covariance") {
  const MultivariateSecondChaos m({mat2(1, 0, 0, 0), mat2(2, 0, 0, 0)});
  CHECK_THROWS_AS(m.whitened(), wiener::ValidationError);
}

TEST_CASE("multivariate degenerate and validation cases") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
  a(0, 0) = kRootHalf;
  const MultivariateSecondChaos one({a});
  const auto stats = cross_gamma_stats(one, 8);
  CHECK(stats.bound == doctest::Approx(stats.var_gamma_diag(0)));
  CHECK(stats.holds);
  CHECK(sphere_kappa4_max(one).value == doctest::Approx(12.0).epsilon(1e-12));

  const MultivariateSecondChaos lone({mat2(0.5, 0.1, 0.1, -0.3), Eigen::MatrixXd::Zero(2, 2)});
  const auto mx = sphere_kappa4_max(lone);
  CHECK(std::abs(std::abs(mx.argmax(0)) - 1.0) < 1e-6);
  CHECK(mx.value == doctest::Approx(kappa4_of_matrix(mat2(0.5, 0.1, 0.1, -0.3))).epsilon(1e-10));

  CHECK_THROWS_AS(MultivariateSecondChaos({mat2(0, 1, 0, 0)}), wiener::ValidationError);
  CHECK_THROWS_AS(MultivariateSecondChaos({mat2(0, 0, 0, 0), Eigen::MatrixXd::Zero(3, 3)}), wiener::ValidationError);
}

TEST_CASE("sphere grids are unit vectors") {
  for (Eigen::Index d : {1, 2, 3, 5}) {
    const auto g = sphere_grid(d, 40, 3);
    CHECK(g.size() >= 2);
    for (const auto& t : g) CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}
