#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "rmf/common.hpp"
#include "rmf/quadrature.hpp"
#include "rmf/realization.hpp"
#include "rmf/sieve.hpp"

namespace rmf {

// Finite Dirichlet polynomial A(s) = sum_{n<=N} a_n n^{-s}, dense storage,
// coefficients()[n] is a_n (index 0 unused).
class DirichletPolynomial {
 public:
  explicit DirichletPolynomial(std::size_t n_max) : a_(n_max + 1, cplx{0.0}) {
    if (n_max < 1)
      throw std::invalid_argument("DirichletPolynomial: N_max must be >= 1");
  }

  std::size_t n_max() const { return a_.size() - 1; }
  cplx& operator[](std::size_t n) { return a_.at(check(n)); }
  const cplx& operator[](std::size_t n) const { return a_.at(check(n)); }

 private:
  static std::size_t check(std::size_t n) {
    if (n == 0)
      throw std::invalid_argument(
          "DirichletPolynomial: coefficients start at n = 1");
    return n;
  }
  std::vector<cplx> a_;
};

inline cplx evaluate(const DirichletPolynomial& a, cplx s) {
  KahanCplx sum;
  for (std::size_t n = 1; n <= a.n_max(); ++n)
    if (a[n] != cplx{0.0})
      sum.add(a[n] * std::exp(-s * std::log(double(n))));
  return sum.value();
}

// Left side of the Plancherel-type identity in closed form:
//   int_0^inf |sum_{n<=x} a_n|^2 x^{-1-2s} dx
//     = sum_{m,n} a_m conj(a_n) / (2s max(m,n)^{2s}).
inline double plancherel_lhs_exact(const DirichletPolynomial& a, double sigma) {
  if (!(sigma > 0.0))
    throw std::domain_error("plancherel_lhs_exact: requires sigma > 0");
  std::vector<std::size_t> support;
  for (std::size_t n = 1; n <= a.n_max(); ++n)
    if (a[n] != cplx{0.0}) support.push_back(n);
  KahanCplx sum;
  for (std::size_t m : support)
    for (std::size_t n : support)
      sum.add(a[m] * std::conj(a[n]) /
              (2.0 * sigma * std::pow(double(std::max(m, n)), 2.0 * sigma)));
  cplx v = sum.value();
  double scale = std::max(1.0, std::abs(v.real()));
  if (std::abs(v.imag()) > 1e-12 * scale)
    throw std::logic_error("plancherel_lhs_exact: imaginary part above 1e-12");
  double out = v.real();
  if (out < 0.0 && out > -1e-12 * scale) out = 0.0;  // clamp rounding dust
  if (out < 0.0)
    throw std::logic_error("plancherel_lhs_exact: square integral went negative");
  return out;
}

// Right side by genuine quadrature: (1/2pi) int |A(sigma+it)/(sigma+it)|^2 dt,
// adaptively on |t| <= T_cut. The diagonal part of the |t| > T_cut tail is a
// Cauchy-kernel integral and is added in closed form; the oscillatory
// cross-term tail is bounded by integration by parts,
//   |int_{|t|>T} e^{iwt}/(s^2+t^2) dt| <= 4/(|w|(s^2+T^2)),
// and T_cut grows until that bound fits inside tol.
inline double plancherel_rhs_quadrature(const DirichletPolynomial& a,
                                        double sigma, double tol) {
  if (!(sigma > 0.0))
    throw std::domain_error("plancherel_rhs_quadrature: requires sigma > 0");
  if (!(tol > 0.0))
    throw std::domain_error("plancherel_rhs_quadrature: requires tol > 0");

  struct Term {
    double log_n;
    cplx coef;  // a_n n^{-sigma}
  };
  std::vector<Term> terms;
  for (std::size_t n = 1; n <= a.n_max(); ++n)
    if (a[n] != cplx{0.0})
      terms.push_back({std::log(double(n)),
                       a[n] * std::pow(double(n), -sigma)});

  double diag = 0.0;
  for (const auto& t : terms) diag += std::norm(t.coef);
  double cross_coef = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = i + 1; j < terms.size(); ++j)
      cross_coef += std::abs(terms[i].coef) * std::abs(terms[j].coef) /
                    (terms[j].log_n - terms[i].log_n);

  double t_cut = 16.0 * (1.0 + sigma);
  auto cross_tail = [&](double t) {
    return 4.0 / std::numbers::pi * cross_coef / (sigma * sigma + t * t);
  };
  int doublings = 0;
  while (cross_tail(t_cut) > 0.5 * tol) {
    t_cut *= 2.0;
    if (++doublings > 64)
      throw convergence_error(
          "plancherel_rhs_quadrature: tail bound will not fit inside tol");
  }

  auto integrand = [&](double t) {
    cplx v{0.0};
    for (const auto& term : terms) {
      double phase = -t * term.log_n;
      v += term.coef * cplx{std::cos(phase), std::sin(phase)};
    }
    return std::norm(v) / (sigma * sigma + t * t);
  };
  // one initial panel per ~1.3 oscillation periods of the fastest mode
  double omega_max = terms.empty() ? 0.0 : terms.back().log_n;
  auto initial = std::size_t(std::ceil(2.0 * t_cut * (omega_max + 1.0) / 5.0));
  double quad = integrate_adaptive(integrand, -t_cut, t_cut,
                                   std::numbers::pi * tol, 400000, initial) /
                (2.0 * std::numbers::pi);

  // Exact tail of the diagonal term against the Cauchy kernel.
  double diag_tail = diag / (2.0 * sigma) *
                     (1.0 - 2.0 / std::numbers::pi * std::atan(t_cut / sigma));
  return quad + diag_tail;
}

struct EulerRatioExpectation {
  double value;          // E |F_y(1/2+sigma+it) / F_x(1/2)|^2, exact product
  double comparison;     // exp(C t^2 log^2 x) * log y / log x, caller's C
  double implied_c;      // log(value * log x / log y) / (t^2 log^2 x); NaN at t = 0
  bool hypothesis_ok;    // sigma > 0 and sigma * log y <= 1
};

// Exact second moment of the Euler-product ratio. Factors at p <= x are
// phase averages over the circle (trapezoid quadrature); factors at
// x < p <= y collapse to the geometric-series value (1 - p^{-1-2sigma})^{-1}.
inline EulerRatioExpectation euler_ratio_expectation(double x, double y,
                                                     double sigma, double t,
                                                     const SpfTable& spf,
                                                     double c_const = 1.0) {
  if (sigma < 0.0)
    throw std::domain_error("euler_ratio_expectation: requires sigma >= 0");
  if (!(2.0 <= x && x <= y))
    throw std::invalid_argument("euler_ratio_expectation: requires 2 <= x <= y");
  if (y > double(spf.limit()))
    throw std::invalid_argument("euler_ratio_expectation: y exceeds table limit");

  double log_prod = 0.0;
  for (u32 p : spf.primes_in(0.0, y)) {
    double factor;
    if (double(p) <= x) {
      double amp = std::pow(double(p), -0.5 - sigma);
      double tlogp = t * std::log(double(p));
      cplx aa = amp * cplx{std::cos(tlogp), -std::sin(tlogp)};  // p^{-1/2-sigma-it}
      double b = std::pow(double(p), -0.5);
      factor = circle_mean([&](double theta) {
        cplx e{std::cos(theta), std::sin(theta)};
        return std::norm((1.0 - e * b) / (1.0 - e * aa));
      });
    } else {
      factor = 1.0 / (1.0 - std::pow(double(p), -1.0 - 2.0 * sigma));
    }
    log_prod += std::log(factor);
  }
  double value = std::exp(log_prod);

  double lx = std::log(x), ly = std::log(y);
  double comparison = std::exp(c_const * t * t * lx * lx) * ly / lx;
  double implied =
      (t != 0.0) ? std::log(value * lx / ly) / (t * t * lx * lx)
                 : std::numeric_limits<double>::quiet_NaN();
  bool ok = sigma > 0.0 && sigma * ly <= 1.0;
  return {value, comparison, implied, ok};
}

}  // namespace rmf
