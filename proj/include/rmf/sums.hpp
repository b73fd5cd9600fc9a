#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "rmf/common.hpp"
#include "rmf/realization.hpp"
#include "rmf/schedule.hpp"
#include "rmf/sieve.hpp"

namespace rmf {

namespace detail {

// Angle fractions of f(n) for all n <= x in one linear pass:
// frac[n] = frac[spf(n)] + frac[n / spf(n)], exact u64 arithmetic.
inline std::vector<u64> fraction_table(u64 seed, u64 x, const SpfTable& t) {
  std::vector<u64> frac(x + 1, 0);
  for (u64 n = 2; n <= x; ++n) {
    u64 p = t.spf(n);
    frac[n] = (p == n) ? steinhaus_fraction(seed, n) : frac[p] + frac[n / p];
  }
  return frac;
}

}  // namespace detail

// M_f(x) = sum_{n<=x} f(n)/sqrt(n), summed in ascending n.
inline cplx m_weighted(const SteinhausRealization& r, double x,
                       const SpfTable& t) {
  if (!(x >= 1.0) || x > double(r.limit()))
    throw std::invalid_argument("m_weighted: x must satisfy 1 <= x <= limit");
  u64 xi = u64(std::floor(x));
  auto frac = detail::fraction_table(r.seed(), xi, t);
  KahanCplx sum;
  for (u64 n = 1; n <= xi; ++n)
    sum.add(cis_fraction(frac[n]) / std::sqrt(double(n)));
  return sum.value();
}

namespace detail {

// sum over y-smooth n <= x of f(n)/sqrt(n), by recursive generation over
// the primes <= y (deterministic depth-first order).
inline cplx smooth_weighted_sum(const SteinhausRealization& r, double x,
                                std::span<const u32> primes, u64* term_count) {
  KahanCplx sum;
  u64 count = 0;
  auto emit = [&](u64 n, u64 frac) {
    sum.add(cis_fraction(frac) / std::sqrt(double(n)));
    ++count;
  };
  // Iterative stack would obscure the structure; depth is O(log x).
  auto rec = [&](auto&& self, u64 n, u64 frac, std::size_t from) -> void {
    emit(n, frac);
    for (std::size_t i = from; i < primes.size(); ++i) {
      u64 p = primes[i];
      if (double(n) * double(p) > x) break;
      u64 pf = r.prime_fraction(p);
      u64 m = n * p;
      u64 mf = frac + pf;
      while (true) {
        self(self, m, mf, i + 1);
        if (double(m) > x / double(p)) break;
        m *= p;
        mf += pf;
      }
    }
  };
  rec(rec, 1, 0, 0);
  if (term_count) *term_count = count;
  return sum.value();
}

}  // namespace detail

// Smooth-restricted weighted sum: n <= x with P(n) <= y. When y >= x every
// n qualifies and the ascending-scan path of m_weighted is used, so the
// result is bit-identical to m_weighted(x).
inline cplx m_smooth(const SteinhausRealization& r, double x, double y,
                     const SpfTable& t) {
  if (!(x >= 1.0) || x > double(r.limit()))
    throw std::invalid_argument("m_smooth: x must satisfy 1 <= x <= limit");
  if (y >= x) return m_weighted(r, x, t);
  return detail::smooth_weighted_sum(r, x, t.primes_in(0.0, y), nullptr);
}

struct DecompositionResult {
  cplx s0;                       // P(n) <= y_0 block
  std::vector<cplx> s;           // s[j-1] = S_j, j = 1..J
  u64 big_j = 0;                 // J
  cplx reconstruction;           // s0 + sum s[j]
  std::vector<u64> terms_per_block;  // (m, n') pairs: index 0 is S_0
  std::vector<double> ys;        // the y-schedule used
};

// Split M_f(x) by the prime-factorization blocks (y_{j-1}, y_j]: the outer
// integers m carry all their prime factors in one block, the inner sums are
// y_{j-1}-smooth. Outer m are generated recursively, never by scanning.
inline DecompositionResult decompose_at(const SteinhausRealization& r, u64 x,
                                        u64 l, const ScheduleParams& params,
                                        const SpfTable& t) {
  if (x < 1 || x > r.limit())
    throw std::invalid_argument("decompose: x must satisfy 1 <= x <= limit");
  double xlo = (l == 1) ? std::exp(1.0) : big_point(l - 1);
  if (!(double(x) >= xlo && double(x) < big_point(l)))
    throw std::invalid_argument(
        "decompose: x must lie in [X_{l-1}, X_l) for the given l");

  DecompositionResult out;
  out.ys = y_schedule(params, l);
  out.big_j = out.ys.size() - 1;

  u64 count0 = 0;
  out.s0 = detail::smooth_weighted_sum(r, double(x), t.primes_in(0.0, out.ys[0]),
                                       &count0);
  out.terms_per_block.push_back(count0);

  KahanCplx recon;
  recon.add(out.s0);
  for (u64 j = 1; j <= out.big_j; ++j) {
    double ylo = out.ys[j - 1];
    double yhi = out.ys[j];
    auto block_primes = t.primes_in(ylo, yhi);
    auto inner_primes = t.primes_in(0.0, ylo);
    KahanCplx sj;
    u64 count = 0;
    // Generate m <= x with every prime factor in (y_{j-1}, y_j]; m > y_{j-1}
    // holds automatically since P(m) > y_{j-1} divides m.
    auto rec = [&](auto&& self, u64 m, u64 frac, std::size_t from) -> void {
      if (m > 1) {
        u64 inner_count = 0;
        cplx inner = detail::smooth_weighted_sum(
            r, std::floor(double(x) / double(m)), inner_primes, &inner_count);
        sj.add(cis_fraction(frac) / std::sqrt(double(m)) * inner);
        count += inner_count;
      }
      for (std::size_t i = from; i < block_primes.size(); ++i) {
        u64 p = block_primes[i];
        if (double(m) * double(p) > double(x)) break;
        u64 pf = r.prime_fraction(p);
        u64 next = m * p;
        u64 nf = frac + pf;
        while (true) {
          self(self, next, nf, i + 1);
          if (double(next) > double(x) / double(p)) break;
          next *= p;
          nf += pf;
        }
      }
    };
    rec(rec, 1, 0, 0);
    out.s.push_back(sj.value());
    out.terms_per_block.push_back(count);
    recon.add(sj.value());
  }
  out.reconstruction = recon.value();
  return out;
}

inline DecompositionResult decompose_sum(const SteinhausRealization& r, u64 i,
                                         u64 l, const ScheduleParams& params,
                                         const SpfTable& t) {
  return decompose_at(r, test_point(params, i), l, params, t);
}

struct EulerProduct {
  cplx value;      // prod_{p<=y} (1 - f(p) p^{-s})^{-1}
  cplx log_value;  // sum of principal-branch logs, factor-wise
};

// Random Euler product F_y(s). Each factor satisfies |f(p) p^{-s}| <= 2^{-Re s} < 1,
// so 1 - f(p)p^{-s} stays in the right half-plane and the principal log per
// factor is safe; no branch tracking across factors is needed.
inline EulerProduct euler_product(const SteinhausRealization& r, double y,
                                  cplx s) {
  if (!(s.real() > 0.0))
    throw std::domain_error("euler_product: requires Re s > 0");
  if (y > double(r.limit()))
    throw std::invalid_argument("euler_product: y exceeds realization limit");
  cplx value = 1.0;
  KahanCplx log_sum;
  for (std::size_t i = 0; i < r.primes().size(); ++i) {
    u64 p = r.primes()[i];
    if (double(p) > y) break;
    cplx w = cis_fraction(r.fractions()[i]) *
             std::exp(-s * std::log(double(p)));
    cplx one_minus = 1.0 - w;
    value /= one_minus;
    log_sum.add(-std::log(one_minus));
  }
  return {value, log_sum.value()};
}

// sum_{p<=x} Re f(p)/sqrt(p): the prime walk behind the iterated-logarithm
// heuristic.
inline double prime_walk(const SteinhausRealization& r, double x,
                         const SpfTable& t) {
  if (x > double(r.limit()))
    throw std::invalid_argument("prime_walk: x exceeds realization limit");
  KahanSum sum;
  for (u32 p : t.primes_in(0.0, x))
    sum.add(std::cos(fraction_to_angle(r.prime_fraction(p))) /
            std::sqrt(double(p)));
  return sum.value();
}

// Var of the walk: sum_{p<=x} 1/(2p). Extended precision throughout so the
// small exact cases (31/60 at x = 5) round to the correct double.
inline double walk_variance(double x, const SpfTable& t) {
  if (x > double(t.limit()))
    throw std::invalid_argument("walk_variance: x exceeds table limit");
  long double sum = 0.0L;
  for (u32 p : t.primes_in(0.0, x)) sum += 0.5L / (long double)(p);
  return double(sum);
}

}  // namespace rmf
