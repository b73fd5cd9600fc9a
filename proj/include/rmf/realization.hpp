#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "rmf/common.hpp"
#include "rmf/sieve.hpp"

namespace rmf {

// The per-prime phase is a pure function of (seed, p): no sequential RNG
// state, so realizations extend and parallelize without reordering issues.
// The mixing constants are fixed for cross-implementation reproducibility.
inline constexpr u64 kSeedStride = 0x9E3779B97F4A7C15ull;

inline u64 mix64(u64 h) {
  h ^= h >> 30;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 27;
  h *= 0x94D049BB133111EBull;
  h ^= h >> 31;
  return h;
}

// Angle of f(p) as a 64-bit fixed-point fraction of 2*pi.
inline u64 steinhaus_fraction(u64 seed, u64 p) {
  return mix64(seed ^ (p * kSeedStride));
}

inline constexpr double kTwoPiOver2_64 =
    2.0 * std::numbers::pi / 18446744073709551616.0;

inline double fraction_to_angle(u64 frac) { return double(frac) * kTwoPiOver2_64; }

// e^{i theta} for a fixed-point fraction of 2*pi.
inline cplx cis_fraction(u64 frac) {
  double a = fraction_to_angle(frac);
  return {std::cos(a), std::sin(a)};
}

enum class RealizationKind : u8 { steinhaus = 0, rademacher = 1 };

namespace detail {

struct RealizationBase {
  u64 seed = 0;
  u64 limit = 0;
  std::vector<u64> primes;     // ascending
  std::vector<u64> fractions;  // aligned with primes

  u64 fraction_at(u64 p) const {
    auto it = std::lower_bound(primes.begin(), primes.end(), p);
    if (it == primes.end() || *it != p)
      throw std::invalid_argument("realization: " + std::to_string(p) +
                                  " is not a stored prime");
    return fractions[std::size_t(it - primes.begin())];
  }
};

inline RealizationBase realize_base(u64 seed, u64 limit, const SpfTable& t) {
  if (limit > t.limit())
    throw std::invalid_argument("realize: N exceeds the sieve limit");
  if (limit < 1) throw std::invalid_argument("realize: N must be >= 1");
  RealizationBase b;
  b.seed = seed;
  b.limit = limit;
  auto ps = t.primes_in(0.0, double(limit));
  b.primes.assign(ps.begin(), ps.end());
  b.fractions.resize(b.primes.size());
  for (std::size_t i = 0; i < b.primes.size(); ++i)
    b.fractions[i] = steinhaus_fraction(seed, b.primes[i]);
  return b;
}

}  // namespace detail

// Steinhaus realization: f(p) = e^{i theta_p} with theta_p pinned by
// (seed, p). Immutable; concurrent reads are safe.
class SteinhausRealization {
 public:
  static SteinhausRealization realize(u64 seed, u64 limit, const SpfTable& t) {
    SteinhausRealization r;
    r.b_ = detail::realize_base(seed, limit, t);
    return r;
  }

  u64 seed() const { return b_.seed; }
  u64 limit() const { return b_.limit; }
  std::size_t prime_count() const { return b_.primes.size(); }
  const std::vector<u64>& primes() const { return b_.primes; }
  const std::vector<u64>& fractions() const { return b_.fractions; }

  u64 prime_fraction(u64 p) const { return b_.fraction_at(p); }
  double angle(u64 p) const { return fraction_to_angle(prime_fraction(p)); }
  cplx f_prime(u64 p) const { return cis_fraction(prime_fraction(p)); }

  // Total angle fraction of f(n) = prod f(p)^{v_p(n)}. Addition wraps mod
  // 2^64, which is exactly addition of angles mod 2*pi.
  u64 fraction_of(u64 n, const SpfTable& t) const {
    if (n < 1 || n > b_.limit)
      throw std::invalid_argument("f_value: n must satisfy 1 <= n <= " +
                                  std::to_string(b_.limit));
    u64 total = 0;
    while (n > 1) {
      u64 p = t.spf(n);
      while (n % p == 0) {
        n /= p;
        total += b_.fraction_at(p);
      }
    }
    return total;
  }

  cplx f_value(u64 n, const SpfTable& t) const {
    return cis_fraction(fraction_of(n, t));
  }

  detail::RealizationBase& base() { return b_; }
  const detail::RealizationBase& base() const { return b_; }

 private:
  detail::RealizationBase b_;
};

// Rademacher realization: f(p) = +1 if the top bit of the per-prime hash
// is 0, else -1; f vanishes off the squarefree integers.
class RademacherRealization {
 public:
  static RademacherRealization realize(u64 seed, u64 limit, const SpfTable& t) {
    RademacherRealization r;
    r.b_ = detail::realize_base(seed, limit, t);
    return r;
  }

  u64 seed() const { return b_.seed; }
  u64 limit() const { return b_.limit; }
  const std::vector<u64>& primes() const { return b_.primes; }

  int sign(u64 p) const { return (b_.fraction_at(p) >> 63) ? -1 : +1; }

  double f_value(u64 n, const SpfTable& t) const {
    if (n < 1 || n > b_.limit)
      throw std::invalid_argument("f_value: n must satisfy 1 <= n <= " +
                                  std::to_string(b_.limit));
    int s = 1;
    while (n > 1) {
      u64 p = t.spf(n);
      n /= p;
      if (n % p == 0) return 0.0;  // p^2 | original n
      s *= sign(p);
    }
    return double(s);
  }

  detail::RealizationBase& base() { return b_; }
  const detail::RealizationBase& base() const { return b_; }

 private:
  detail::RealizationBase b_;
};

// ---------------------------------------------------------------------
// Cache file, little-endian throughout:
//   magic "RMF1" | version u16 = 1 | kind u8 | seed u64 | limit u64 |
//   count u64 | count * (prime u64, fraction u64)
// Structural deviations are format errors; short or inconsistent payload
// is a corruption error.
// ---------------------------------------------------------------------

namespace detail {

inline void put_u16(std::string& out, u16 v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}
inline void put_u64(std::string& out, u64 v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& data) : data_(data) {}
  bool exhausted() const { return pos_ == data_.size(); }
  u8 get_u8() {
    need(1);
    return u8(data_[pos_++]);
  }
  u16 get_u16() {
    need(2);
    u16 v = u16(u8(data_[pos_])) | (u16(u8(data_[pos_ + 1])) << 8);
    pos_ += 2;
    return v;
  }
  u64 get_u64() {
    need(8);
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= u64(u8(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

 private:
  void need(std::size_t k) {
    if (pos_ + k > data_.size())
      throw corruption_error("realization cache: file truncated mid-record");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

inline void save_cache_impl(const RealizationBase& b, RealizationKind kind,
                            const std::filesystem::path& path) {
  std::string out;
  out.reserve(4 + 2 + 1 + 24 + 16 * b.primes.size());
  out += "RMF1";
  put_u16(out, 1);
  out.push_back(char(u8(kind)));
  put_u64(out, b.seed);
  put_u64(out, b.limit);
  put_u64(out, b.primes.size());
  for (std::size_t i = 0; i < b.primes.size(); ++i) {
    put_u64(out, b.primes[i]);
    put_u64(out, b.fractions[i]);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("save_cache: cannot open " + path.string());
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw io_error("save_cache: write failed for " + path.string());
}

inline RealizationBase load_cache_impl(const std::filesystem::path& path,
                                       RealizationKind expected_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("load_cache: cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());

  if (data.size() < 4 || data.compare(0, 4, "RMF1") != 0)
    throw format_error("realization cache: bad magic, expected \"RMF1\"");
  ByteReader r(data);
  r.get_u8();
  r.get_u8();
  r.get_u8();
  r.get_u8();
  u16 version = r.get_u16();
  if (version != 1)
    throw format_error("realization cache: unsupported format version " +
                       std::to_string(version));
  u8 kind = r.get_u8();
  if (kind > 1)
    throw format_error("realization cache: unknown kind byte " +
                       std::to_string(kind));
  if (kind != u8(expected_kind))
    throw format_error("realization cache: kind mismatch (file has " +
                       std::to_string(kind) + ")");
  RealizationBase b;
  b.seed = r.get_u64();
  b.limit = r.get_u64();
  u64 count = r.get_u64();
  b.primes.reserve(count);
  b.fractions.reserve(count);
  u64 prev = 0;
  for (u64 i = 0; i < count; ++i) {
    u64 p = r.get_u64();
    u64 frac = r.get_u64();
    if (p <= prev || p > b.limit)
      throw corruption_error("realization cache: primes not strictly "
                             "increasing within limit");
    if (frac != steinhaus_fraction(b.seed, p))
      throw corruption_error("realization cache: stored fraction disagrees "
                             "with the (seed, prime) hash");
    b.primes.push_back(p);
    b.fractions.push_back(frac);
    prev = p;
  }
  if (!r.exhausted())
    throw format_error("realization cache: trailing bytes after last record");
  return b;
}

}  // namespace detail

inline void save_cache(const SteinhausRealization& r,
                       const std::filesystem::path& path) {
  detail::save_cache_impl(r.base(), RealizationKind::steinhaus, path);
}
inline void save_cache(const RademacherRealization& r,
                       const std::filesystem::path& path) {
  detail::save_cache_impl(r.base(), RealizationKind::rademacher, path);
}

inline SteinhausRealization load_steinhaus_cache(
    const std::filesystem::path& path) {
  SteinhausRealization r;
  r.base() = detail::load_cache_impl(path, RealizationKind::steinhaus);
  return r;
}
inline RademacherRealization load_rademacher_cache(
    const std::filesystem::path& path) {
  RademacherRealization r;
  r.base() = detail::load_cache_impl(path, RealizationKind::rademacher);
  return r;
}

}  // namespace rmf
