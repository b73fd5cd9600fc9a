#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "rmf/common.hpp"

namespace rmf {

inline constexpr u64 kDefaultSpfCeiling = u64(1) << 31;

// Smallest-prime-factor table. Immutable after construction; shared
// freely across threads. spf[n] is the least prime dividing n, spf[p] = p.
class SpfTable {
 public:
  static SpfTable build(u64 limit, u64 ceiling = kDefaultSpfCeiling) {
    if (limit < 2)
      throw std::invalid_argument("build_spf: limit must be >= 2");
    if (limit > ceiling)
      throw resource_limit_error(
          "build_spf: limit exceeds the configured memory ceiling of " +
          std::to_string(ceiling) + " indices");
    SpfTable t;
    t.limit_ = limit;
    t.spf_.assign(limit + 1, 0);
    // Linear sieve: every composite is struck exactly once, by its
    // smallest prime factor; primes fall out as a byproduct.
    for (u64 i = 2; i <= limit; ++i) {
      if (t.spf_[i] == 0) {
        t.spf_[i] = static_cast<u32>(i);
        t.primes_.push_back(static_cast<u32>(i));
      }
      for (u32 p : t.primes_) {
        if (p > t.spf_[i] || i * p > limit) break;
        t.spf_[i * p] = p;
      }
    }
    return t;
  }

  u64 limit() const { return limit_; }

  u32 spf(u64 n) const {
    check_range(n);
    return spf_[n];
  }

  // All primes <= limit, ascending.
  std::span<const u32> primes() const { return primes_; }

  // Primes in (lo, hi] as a subrange of primes(), endpoints real-valued.
  std::span<const u32> primes_in(double lo, double hi) const {
    auto first = std::upper_bound(primes_.begin(), primes_.end(), lo,
                                  [](double v, u32 p) { return v < double(p); });
    auto last = std::upper_bound(primes_.begin(), primes_.end(), hi,
                                 [](double v, u32 p) { return v < double(p); });
    return {first, last};
  }

  u64 prime_count(double x) const { return primes_in(0.0, x).size(); }

  void check_range(u64 n) const {
    if (n < 1 || n > limit_)
      throw std::invalid_argument("argument n must satisfy 1 <= n <= " +
                                  std::to_string(limit_) + ", got " +
                                  std::to_string(n));
  }

 private:
  u64 limit_ = 0;
  std::vector<u32> spf_;
  std::vector<u32> primes_;
};

inline SpfTable build_spf(u64 limit, u64 ceiling = kDefaultSpfCeiling) {
  return SpfTable::build(limit, ceiling);
}

struct PrimePower {
  u64 p;
  u32 v;
};

using Factorization = std::vector<PrimePower>;

// n = product of p^v, p strictly increasing. n = 1 gives the empty list.
inline Factorization factorize(u64 n, const SpfTable& t) {
  t.check_range(n);
  Factorization f;
  while (n > 1) {
    u64 p = t.spf(n);
    u32 v = 0;
    while (n % p == 0) {
      n /= p;
      ++v;
    }
    f.push_back({p, v});
  }
  return f;
}

// Omega(n): prime factors counted with multiplicity.
inline u32 big_omega(u64 n, const SpfTable& t) {
  t.check_range(n);
  u32 count = 0;
  while (n > 1) {
    n /= t.spf(n);
    ++count;
  }
  return count;
}

namespace detail {
inline u64 binomial(u64 n, u64 k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u64 r = 1;
  for (u64 i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace detail

// tau_l(n): ordered l-tuples with product n. Multiplicative, with
// tau_l(p^v) = C(v + l - 1, l - 1).
inline u64 tau_l(u64 n, u32 l, const SpfTable& t) {
  if (l < 1) throw std::invalid_argument("tau_l: l must be >= 1");
  t.check_range(n);
  u64 r = 1;
  for (const auto& [p, v] : factorize(n, t))
    r *= detail::binomial(u64(v) + l - 1, l - 1);
  return r;
}

inline u64 tau(u64 n, const SpfTable& t) { return tau_l(n, 2, t); }

// P(n): largest prime factor, with P(1) = 1.
inline u64 largest_prime_factor(u64 n, const SpfTable& t) {
  t.check_range(n);
  u64 best = 1;
  while (n > 1) {
    u64 p = t.spf(n);
    best = p;
    while (n % p == 0) n /= p;
  }
  return best;
}

inline bool is_smooth(u64 n, double y, const SpfTable& t) {
  return double(largest_prime_factor(n, t)) <= y;
}

struct DivisorWindow {
  u64 exact;        // sum of tau(n) over u < n <= v
  double main_term; // v log v - u log u + (2 gamma - 1)(v - u)
};

// Window sum of the divisor function against its smooth main term.
// The caller studies the O(v^{1/3}) discrepancy; nothing is asserted here.
inline DivisorWindow divisor_sum_window(u64 u, u64 v, const SpfTable& t) {
  if (u > v) throw std::invalid_argument("divisor_sum_window: requires u <= v");
  if (v > t.limit())
    throw std::invalid_argument("divisor_sum_window: v exceeds table limit");
  u64 exact = 0;
  for (u64 n = u + 1; n <= v; ++n) exact += tau(n, t);
  auto xlogx = [](u64 x) { return x == 0 ? 0.0 : double(x) * std::log(double(x)); };
  double main = xlogx(v) - xlogx(u) +
                (2.0 * std::numbers::egamma - 1.0) * (double(v) - double(u));
  return {exact, main};
}

struct RoughSmoothWindow {
  double exact;      // sum of r^Omega(m), u <= m <= v, all p | m in [y, z]
  double comparison; // ((v-u) r / log y) * prod_{y<=p<=z} (1 - r/p)^{-1}
  bool bound_applicable;  // false when r >= y: a factor 1 - r/p is nonpositive

  // The comparison value, with the r >= y degeneracy raised as an error.
  double comparison_or_throw() const {
    if (!bound_applicable)
      throw bound_inapplicable_error(
          "smooth_r_omega_window: r >= y makes a comparison factor "
          "nonpositive; the bound shape is undefined");
    return comparison;
  }
};

inline RoughSmoothWindow smooth_r_omega_window(double u, double v, double y,
                                               double z, double r,
                                               const SpfTable& t) {
  if (!(u <= v)) throw std::invalid_argument("smooth_r_omega_window: requires u <= v");
  if (!(2.0 <= y && y <= z))
    throw std::invalid_argument("smooth_r_omega_window: requires 2 <= y <= z");
  if (r < 1.0) throw std::invalid_argument("smooth_r_omega_window: requires r >= 1");
  if (v > double(t.limit()))
    throw std::invalid_argument("smooth_r_omega_window: v exceeds table limit");

  KahanSum exact;
  u64 lo = u <= 1.0 ? 1 : u64(std::ceil(u));
  u64 hi = v < 1.0 ? 0 : u64(std::floor(v));
  for (u64 m = lo; m <= hi; ++m) {
    bool ok = true;
    u32 omega = 0;
    u64 k = m;
    while (k > 1) {
      u64 p = t.spf(k);
      if (double(p) < y || double(p) > z) {
        ok = false;
        break;
      }
      while (k % p == 0) {
        k /= p;
        ++omega;
      }
    }
    if (ok) exact.add(std::pow(r, double(omega)));
  }

  if (r >= y)
    return {exact.value(), std::numeric_limits<double>::quiet_NaN(), false};
  double prod = 1.0;
  for (u32 p : t.primes_in(std::nextafter(y, 0.0), z)) prod /= 1.0 - r / double(p);
  double comparison = (v - u) * r / std::log(y) * prod;
  return {exact.value(), comparison, true};
}

namespace detail {

// Recursive generation of y-smooth integers n <= x over the given primes,
// accumulating fn(n). Smooth values can exceed the sieve limit; bounds are
// tracked in double, exact below 2^53.
template <class Fn>
inline void for_each_smooth(std::span<const u32> primes, double x, Fn&& fn,
                            u64 n = 1, std::size_t from = 0) {
  fn(n);
  for (std::size_t i = from; i < primes.size(); ++i) {
    u64 p = primes[i];
    if (double(n) * double(p) > x) break;
    for (u64 m = n * p; double(m) <= x; m *= p) {
      for_each_smooth(primes, x, fn, m, i + 1);
      if (double(m) > x / double(p)) break;  // avoid u64 overflow on m *= p
    }
  }
}

}  // namespace detail

struct RankinTail {
  double exact_tail;   // full smooth harmonic sum minus the part with n <= x
  double rankin_bound; // x^{-1/log y} prod_{p<=y} (1 - p^{-1+1/log y})^{-1}
};

// Tail of the smooth harmonic series versus the Rankin majorant.
// For y <= e the majorant series diverges (some factor p^{-1+1/log y} >= 1)
// and the bound is reported as +infinity; the inequality holds trivially.
inline RankinTail rankin_tail(double x, double y, const SpfTable& t,
                              double y_cap = 1e5) {
  if (y < 2.0) throw std::invalid_argument("rankin_tail: requires y >= 2");
  if (x < 1.0) throw std::invalid_argument("rankin_tail: requires x >= 1");
  if (y > y_cap)
    throw resource_limit_error("rankin_tail: y exceeds the enumeration cap of " +
                               std::to_string(y_cap));
  if (y > double(t.limit()))
    throw std::invalid_argument("rankin_tail: y exceeds table limit");
  if (x > 9e15)
    throw resource_limit_error("rankin_tail: x too large for exact enumeration");

  auto primes = t.primes_in(0.0, y);
  double full = 1.0;
  for (u32 p : primes) full /= 1.0 - 1.0 / double(p);

  KahanSum finite;
  detail::for_each_smooth(primes, x, [&](u64 n) { finite.add(1.0 / double(n)); });
  double exact = full - finite.value();

  double beta = 1.0 / std::log(y);
  double bound = std::pow(x, -beta);
  for (u32 p : primes) {
    double w = std::pow(double(p), -1.0 + beta);
    if (w >= 1.0) {
      bound = std::numeric_limits<double>::infinity();
      break;
    }
    bound /= 1.0 - w;
  }
  return {exact, bound};
}

}  // namespace rmf
