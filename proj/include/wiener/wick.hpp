#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace wiener::wick {

using Exponents = std::vector<std::uint8_t>;

// Real polynomial in nvars independent standard Gaussians, stored as a
// canonical map exponent-vector -> coefficient. Zero coefficients are never
// stored.
class GaussianPolynomial {
 public:
  using TermMap = std::map<Exponents, double>;

  explicit GaussianPolynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static GaussianPolynomial constant(std::size_t nvars, double c);
  static GaussianPolynomial variable(std::size_t nvars, std::size_t v, double coeff = 1.0);
  static GaussianPolynomial monomial(Exponents exps, double coeff);

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  double coefficient(const Exponents& exps) const;

  void add_term(const Exponents& exps, double coeff);

  GaussianPolynomial& operator+=(const GaussianPolynomial& rhs);
  GaussianPolynomial& operator-=(const GaussianPolynomial& rhs);
  GaussianPolynomial& operator*=(double s);
  GaussianPolynomial& operator*=(const GaussianPolynomial& rhs);

  friend GaussianPolynomial operator+(GaussianPolynomial a, const GaussianPolynomial& b) { return a += b; }
  friend GaussianPolynomial operator-(GaussianPolynomial a, const GaussianPolynomial& b) { return a -= b; }
  friend GaussianPolynomial operator*(GaussianPolynomial a, double s) { return a *= s; }
  friend GaussianPolynomial operator*(double s, GaussianPolynomial a) { return a *= s; }
  friend GaussianPolynomial operator*(const GaussianPolynomial& a, const GaussianPolynomial& b);

  GaussianPolynomial pow(int k) const;
  GaussianPolynomial derivative(std::size_t v) const;
  double evaluate(std::span<const double> x) const;

 private:
  std::size_t nvars_;
  TermMap terms_;
};

inline constexpr int kDefaultDegreeCap = 16;

// E[G^m] for a standard Gaussian: (m-1)!! for even m, 0 for odd m.
double gaussian_moment(int m);

// Exact expectation by independence: each monomial contributes
// coeff * prod_v E[G^{e_v}]. Throws CapacityError when a monomial exceeds
// degree_cap.
double isserlis_expectation(const GaussianPolynomial& p, int degree_cap = kDefaultDegreeCap);

struct Cumulants {
  double k1, k2, k3, k4;
};

// Raw moments m1..m4 -> cumulants k1..k4.
Cumulants cumulants_from_moments(double m1, double m2, double m3, double m4);

// General moment-cumulant recursion; moments[r-1] = E X^r, result[r-1] = k_r.
std::vector<double> cumulants_from_moments(std::span<const double> moments);

// Carré du champ sum_i (d f / d x_i)^2.
GaussianPolynomial gamma_of_polynomial(const GaussianPolynomial& f);

// Raw moments E[f^r], r = 1..count, via the Isserlis engine.
std::vector<double> moments(const GaussianPolynomial& f, int count, int degree_cap = kDefaultDegreeCap);

}  // namespace wiener::wick
