#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rmf/realization.hpp"

using namespace rmf;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& data) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << data;
}

}  // namespace

TEST_CASE("per-prime phases are deterministic and in range") {
  auto t = build_spf(10000);
  auto r1 = SteinhausRealization::realize(42, 10000, t);
  auto r2 = SteinhausRealization::realize(42, 10000, t);
  REQUIRE(r1.prime_count() == r2.prime_count());
  for (std::size_t i = 0; i < r1.prime_count(); ++i) {
    CHECK(r1.fractions()[i] == r2.fractions()[i]);
    double a = fraction_to_angle(r1.fractions()[i]);
    CHECK(a >= 0.0);
    CHECK(a < 2.0 * std::numbers::pi);
  }
  CHECK(steinhaus_fraction(42, 2) == steinhaus_fraction(42, 2));
  CHECK(steinhaus_fraction(42, 2) != steinhaus_fraction(43, 2));
}

TEST_CASE("extension preserves previously assigned angles") {
  auto t = build_spf(20000);
  auto small = SteinhausRealization::realize(7, 5000, t);
  auto large = SteinhausRealization::realize(7, 20000, t);
  for (std::size_t i = 0; i < small.prime_count(); ++i) {
    CHECK(small.primes()[i] == large.primes()[i]);
    CHECK(small.fractions()[i] == large.fractions()[i]);
  }
  CHECK(large.prime_count() > small.prime_count());
}

TEST_CASE("realize validates the limit") {
  auto t = build_spf(100);
  CHECK_THROWS_AS(SteinhausRealization::realize(1, 101, t),
                  std::invalid_argument);
}

TEST_CASE("phase mean across primes is CLT-small") {
  auto t = build_spf(1000000);
  auto r = SteinhausRealization::realize(2024, 1000000, t);
  REQUIRE(r.prime_count() == 78498);  // pi(10^6)
  KahanCplx mean;
  for (u64 frac : r.fractions()) mean.add(cis_fraction(frac));
  double m = std::abs(mean.value()) / double(r.prime_count());
  CHECK(m <= 3.0 / std::sqrt(double(r.prime_count())));
}

TEST_CASE("f is completely multiplicative with |f| = 1") {
  auto t = build_spf(1000000);
  auto r = SteinhausRealization::realize(5, 1000000, t);
  CHECK(r.f_value(1, t) == cplx{1.0, 0.0});

  // f(12) = f(2)^2 f(3)
  cplx f2 = r.f_prime(2), f3 = r.f_prime(3);
  CHECK(std::abs(r.f_value(12, t) - f2 * f2 * f3) < 1e-12);

  u64 state = 99;
  auto next = [&] {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return (state >> 33) % 1000 + 1;
  };
  for (int k = 0; k < 300; ++k) {
    u64 m = next(), n = next();
    cplx lhs = r.f_value(m * n, t);
    cplx rhs = r.f_value(m, t) * r.f_value(n, t);
    CHECK(std::abs(lhs - rhs) < 1e-12);
    CHECK(std::abs(std::abs(lhs) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(r.f_value(0, t), std::invalid_argument);
  CHECK_THROWS_AS(r.f_value(1000001, t), std::invalid_argument);
}

TEST_CASE("orthogonality across seeds") {
  auto t = build_spf(100);
  const u64 kSeeds = 10000;
  u64 m = 12, n = 35;
  KahanCplx cross;
  KahanCplx same;
  for (u64 seed = 1; seed <= kSeeds; ++seed) {
    auto r = SteinhausRealization::realize(seed, 100, t);
    // f(m) conj(f(n)) = cis(frac_m - frac_n) exactly in fraction space
    cross.add(cis_fraction(r.fraction_of(m, t) - r.fraction_of(n, t)));
    same.add(cis_fraction(r.fraction_of(m, t) - r.fraction_of(m, t)));
  }
  CHECK(std::abs(cross.value()) / double(kSeeds) <= 3.0 / std::sqrt(double(kSeeds)));
  CHECK(same.value().real() / double(kSeeds) == 1.0);  // exact
  CHECK(same.value().imag() == 0.0);
}

TEST_CASE("E f(p)^2 vanishes at the statistical level") {
  const u64 kSeeds = 10000;
  u64 p = 13;
  KahanCplx acc;
  for (u64 seed = 1; seed <= kSeeds; ++seed)
    acc.add(cis_fraction(2 * steinhaus_fraction(seed, p)));
  CHECK(std::abs(acc.value()) / double(kSeeds) <= 3.0 / std::sqrt(double(kSeeds)));
}

TEST_CASE("rademacher signs and squarefree support") {
  auto t = build_spf(1000);
  auto r = RademacherRealization::realize(11, 1000, t);
  auto r2 = RademacherRealization::realize(11, 1000, t);
  for (u64 p : {u64(2), u64(3), u64(5), u64(97)}) {
    CHECK(r.sign(p) == r2.sign(p));
    CHECK((r.sign(p) == 1 || r.sign(p) == -1));
    bool top_bit = steinhaus_fraction(11, p) >> 63;
    CHECK(r.sign(p) == (top_bit ? -1 : 1));
  }
  CHECK(r.f_value(12, t) == 0.0);  // 4 | 12
  CHECK(r.f_value(18, t) == 0.0);
  CHECK(r.f_value(6, t) == double(r.sign(2) * r.sign(3)));
  CHECK(r.f_value(1, t) == 1.0);
}

TEST_CASE("cache round-trips byte-exactly") {
  auto t = build_spf(5000);
  auto r = SteinhausRealization::realize(314, 5000, t);
  auto path = temp_file("rmf_test_cache.rmf");
  save_cache(r, path);
  auto back = load_steinhaus_cache(path);
  CHECK(back.seed() == r.seed());
  CHECK(back.limit() == r.limit());
  CHECK(back.primes() == r.primes());
  CHECK(back.fractions() == r.fractions());

  // saving the loaded realization reproduces the file byte-for-byte
  auto path2 = temp_file("rmf_test_cache2.rmf");
  save_cache(back, path2);
  CHECK(slurp(path) == slurp(path2));

  auto rad = RademacherRealization::realize(314, 5000, t);
  auto rad_path = temp_file("rmf_test_cache_rad.rmf");
  save_cache(rad, rad_path);
  auto rad_back = load_rademacher_cache(rad_path);
  CHECK(rad_back.primes() == rad.primes());
  CHECK_THROWS_AS(load_steinhaus_cache(rad_path), format_error);

  std::filesystem::remove(path);
  std::filesystem::remove(path2);
  std::filesystem::remove(rad_path);
}

TEST_CASE("cache rejects malformed files") {
  auto t = build_spf(100);
  auto r = SteinhausRealization::realize(1, 100, t);
  auto path = temp_file("rmf_bad_cache.rmf");
  save_cache(r, path);
  std::string good = slurp(path);

  // wrong magic
  std::string bad = good;
  bad[0] = 'X';
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), format_error);

  // wrong version
  bad = good;
  bad[4] = 9;
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), format_error);

  // unknown kind byte
  bad = good;
  bad[6] = 7;
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), format_error);

  // truncation mid-record
  bad = good.substr(0, good.size() - 5);
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), corruption_error);

  // trailing garbage
  bad = good + "zz";
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), format_error);

  // tampered fraction disagrees with the (seed, prime) hash
  bad = good;
  bad[bad.size() - 1] = char(bad[bad.size() - 1] ^ 0x5a);
  spit(path, bad);
  CHECK_THROWS_AS(load_steinhaus_cache(path), corruption_error);

  std::filesystem::remove(path);
}
