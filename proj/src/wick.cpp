#include "wiener/wick.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wiener/errors.hpp"

namespace wiener::wick {

namespace {

int total_degree(const Exponents& e) {
  return std::accumulate(e.begin(), e.end(), 0, [](int acc, std::uint8_t v) { return acc + v; });
}

void check_same_vars(const GaussianPolynomial& a, const GaussianPolynomial& b) {
  if (a.nvars() != b.nvars()) {
    throw ValidationError("polynomials over different variable counts (" + std::to_string(a.nvars()) +
                          " vs " + std::to_string(b.nvars()) + ")");
  }
}

}  // namespace

GaussianPolynomial GaussianPolynomial::constant(std::size_t nvars, double c) {
  GaussianPolynomial p(nvars);
  p.add_term(Exponents(nvars, 0), c);
  return p;
}

GaussianPolynomial GaussianPolynomial::variable(std::size_t nvars, std::size_t v, double coeff) {
  if (v >= nvars) throw ValidationError("variable index out of range");
  Exponents e(nvars, 0);
  e[v] = 1;
  GaussianPolynomial p(nvars);
  p.add_term(e, coeff);
  return p;
}

GaussianPolynomial GaussianPolynomial::monomial(Exponents exps, double coeff) {
  GaussianPolynomial p(exps.size());
  p.add_term(exps, coeff);
  return p;
}

int GaussianPolynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
  return d;
}

double GaussianPolynomial::coefficient(const Exponents& exps) const {
  auto it = terms_.find(exps);
  return it == terms_.end() ? 0.0 : it->second;
}

void GaussianPolynomial::add_term(const Exponents& exps, double coeff) {
  if (exps.size() != nvars_) throw ValidationError("exponent vector length does not match nvars");
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exps, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

GaussianPolynomial& GaussianPolynomial::operator+=(const GaussianPolynomial& rhs) {
  check_same_vars(*this, rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, c);
  return *this;
}

GaussianPolynomial& GaussianPolynomial::operator-=(const GaussianPolynomial& rhs) {
  check_same_vars(*this, rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
  return *this;
}

GaussianPolynomial& GaussianPolynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

GaussianPolynomial& GaussianPolynomial::operator*=(const GaussianPolynomial& rhs) {
  *this = *this * rhs;
  return *this;
}

GaussianPolynomial operator*(const GaussianPolynomial& a, const GaussianPolynomial& b) {
  check_same_vars(a, b);
  GaussianPolynomial out(a.nvars());
  Exponents e(a.nvars());
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) {
      for (std::size_t v = 0; v < e.size(); ++v) {
        const int s = ea[v] + eb[v];
        if (s > 255) throw CapacityError("exponent overflow in polynomial product");
        e[v] = static_cast<std::uint8_t>(s);
      }
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

GaussianPolynomial GaussianPolynomial::pow(int k) const {
  if (k < 0) throw DomainError("negative polynomial power");
  GaussianPolynomial result = constant(nvars_, 1.0);
  GaussianPolynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

GaussianPolynomial GaussianPolynomial::derivative(std::size_t v) const {
  if (v >= nvars_) throw ValidationError("variable index out of range");
  GaussianPolynomial out(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[v] == 0) continue;
    Exponents d = e;
    --d[v];
    out.add_term(d, c * e[v]);
  }
  return out;
}

double GaussianPolynomial::evaluate(std::span<const double> x) const {
  if (x.size() != nvars_) throw ValidationError("evaluation point has wrong dimension");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (std::size_t v = 0; v < nvars_; ++v) {
      for (int r = 0; r < e[v]; ++r) term *= x[v];
    }
    sum += term;
  }
  return sum;
}

double gaussian_moment(int m) {
  if (m < 0) throw DomainError("negative moment order");
  if (m % 2 == 1) return 0.0;
  double r = 1.0;
  for (int k = m - 1; k > 1; k -= 2) r *= k;
  return r;
}

double isserlis_expectation(const GaussianPolynomial& p, int degree_cap) {
  double sum = 0.0;
  for (const auto& [e, c] : p.terms()) {
    const int deg = total_degree(e);
    if (deg > degree_cap) {
      throw CapacityError("monomial of degree " + std::to_string(deg) + " exceeds degree cap " +
                          std::to_string(degree_cap));
    }
    double term = c;
    for (std::uint8_t ev : e) {
      if (ev % 2 == 1) {
        term = 0.0;
        break;
      }
      term *= gaussian_moment(ev);
    }
    sum += term;
  }
  return sum;
}

Cumulants cumulants_from_moments(double m1, double m2, double m3, double m4) {
  const double m1s = m1 * m1;
  return {m1, m2 - m1s, m3 - 3.0 * m2 * m1 + 2.0 * m1s * m1,
          m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1s - 6.0 * m1s * m1s};
}

std::vector<double> cumulants_from_moments(std::span<const double> moments) {
  // k_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) k_k m_{n-k}
  const std::size_t n = moments.size();
  std::vector<double> k(n);
  for (std::size_t r = 1; r <= n; ++r) {
    double acc = moments[r - 1];
    double binom = 1.0;  // C(r-1, j-1), starting at j = 1
    for (std::size_t j = 1; j < r; ++j) {
      acc -= binom * k[j - 1] * moments[r - j - 1];
      binom = binom * static_cast<double>(r - j) / static_cast<double>(j);
    }
    k[r - 1] = acc;
  }
  return k;
}

GaussianPolynomial gamma_of_polynomial(const GaussianPolynomial& f) {
  GaussianPolynomial out(f.nvars());
  for (std::size_t v = 0; v < f.nvars(); ++v) {
    const GaussianPolynomial d = f.derivative(v);
    out += d * d;
  }
  return out;
}

std::vector<double> moments(const GaussianPolynomial& f, int count, int degree_cap) {
  if (count < 1) throw DomainError("moment count must be positive");
  if (static_cast<long long>(f.degree()) * count > degree_cap) {
    throw CapacityError("moment of order " + std::to_string(count) + " of a degree-" +
                        std::to_string(f.degree()) + " polynomial exceeds degree cap " +
                        std::to_string(degree_cap));
  }
  std::vector<double> m;
  m.reserve(count);
  GaussianPolynomial power = GaussianPolynomial::constant(f.nvars(), 1.0);
  for (int r = 1; r <= count; ++r) {
    power = power * f;
    m.push_back(isserlis_expectation(power, degree_cap));
  }
  return m;
}

}  // namespace wiener::wick
