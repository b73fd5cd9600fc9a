#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rmf/spectral.hpp"
#include "rmf/stats.hpp"

using namespace rmf;

namespace {

// Coefficients uniform in the closed unit disc, deterministic.
cplx disc_coeff(u64 seed, u64 index) {
  double u = double(steinhaus_fraction(seed, 2 * index + 2)) /
             18446744073709551616.0;
  double radius = std::sqrt(u);
  double angle = fraction_to_angle(steinhaus_fraction(seed, 2 * index + 3));
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

DirichletPolynomial random_poly(u64 seed, std::size_t terms) {
  DirichletPolynomial a(terms);
  for (std::size_t n = 1; n <= terms; ++n) a[n] = disc_coeff(seed, n);
  return a;
}

}  // namespace

TEST_CASE("gauss-kronrod panel is exact on polynomials and smooth integrands") {
  // weights of the embedded rules sum to the interval length
  double wk = 0.0, wg = 0.0;
  for (int i = 0; i < 8; ++i)
    wk += detail::kKronrodWeights[i] * (i == 7 ? 1.0 : 2.0);
  for (int i = 0; i < 4; ++i)
    wg += detail::kGaussWeights[i] * (i == 3 ? 1.0 : 2.0);
  CHECK(wk == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(wg == Catch::Approx(2.0).epsilon(1e-14));

  auto cube = [](double x) { return x * x * x + 0.5 * x * x; };
  auto r = detail::gk15(cube, 0.0, 2.0);
  CHECK(r.integral == Catch::Approx(4.0 + 4.0 / 3.0).epsilon(1e-14));

  double v = integrate_adaptive([](double x) { return std::cos(x); }, 0.0,
                                10.0, 1e-12);
  CHECK(v == Catch::Approx(std::sin(10.0)).margin(1e-11));

  CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::cos(x * x); },
                                     0.0, 1000.0, 1e-15, 8),
                  convergence_error);
}

TEST_CASE("circle mean is spectrally accurate") {
  // mean of |1 - w e^{i t}|^{-2} over the circle = (1 - |w|^2)^{-1}
  double w = 0.6;
  double m = circle_mean([&](double th) {
    return 1.0 / std::norm(1.0 - w * cplx{std::cos(th), std::sin(th)});
  });
  CHECK(m == Catch::Approx(1.0 / (1.0 - w * w)).epsilon(1e-12));
}

TEST_CASE("dirichlet polynomial evaluation") {
  DirichletPolynomial delta1(4);
  delta1[1] = 1.0;
  for (cplx s : {cplx{0.5, 0.0}, cplx{0.1, 3.0}, cplx{2.0, -1.0}})
    CHECK(evaluate(delta1, s) == cplx{1.0, 0.0});

  auto a = random_poly(1, 16);
  auto b = random_poly(2, 16);
  DirichletPolynomial sum(16);
  for (std::size_t n = 1; n <= 16; ++n) sum[n] = a[n] + b[n];
  cplx s{0.3, 1.7};
  CHECK(std::abs(evaluate(sum, s) - evaluate(a, s) - evaluate(b, s)) < 1e-13);

  // Schwarz reflection for real coefficients
  DirichletPolynomial real_poly(8);
  for (std::size_t n = 1; n <= 8; ++n) real_poly[n] = double(n % 3) - 1.0;
  cplx up = evaluate(real_poly, {0.4, 2.2});
  cplx down = evaluate(real_poly, {0.4, -2.2});
  CHECK(std::abs(up - std::conj(down)) < 1e-13);

  CHECK_THROWS_AS(real_poly[0], std::invalid_argument);
}

TEST_CASE("plancherel left side closed forms") {
  DirichletPolynomial delta1(1);
  delta1[1] = 1.0;
  for (double sigma : {0.05, 0.1, 0.5, 2.0})
    CHECK(plancherel_lhs_exact(delta1, sigma) ==
          Catch::Approx(1.0 / (2.0 * sigma)).epsilon(1e-14));
  CHECK(plancherel_lhs_exact(delta1, 0.5) == Catch::Approx(1.0).epsilon(1e-14));

  DirichletPolynomial two(2);
  two[1] = 1.0;
  two[2] = 1.0;
  for (double sigma : {0.05, 0.3, 1.0}) {
    double expect = (1.0 + 3.0 * std::pow(4.0, -sigma)) / (2.0 * sigma);
    CHECK(plancherel_lhs_exact(two, sigma) ==
          Catch::Approx(expect).epsilon(1e-14));
  }

  CHECK_THROWS_AS(plancherel_lhs_exact(delta1, 0.0), std::domain_error);
  CHECK_THROWS_AS(plancherel_lhs_exact(delta1, -0.5), std::domain_error);

  // nonnegativity on a fuzz corpus
  for (u64 seed = 1; seed <= 30; ++seed)
    CHECK(plancherel_lhs_exact(random_poly(seed, 20), 0.2) >= 0.0);
}

TEST_CASE("plancherel right side matches the closed form") {
  DirichletPolynomial delta1(1);
  delta1[1] = 1.0;
  CHECK(plancherel_rhs_quadrature(delta1, 0.5, 1e-6) ==
        Catch::Approx(1.0).margin(1e-6));

  auto a = random_poly(7, 50);
  double lhs = plancherel_lhs_exact(a, 0.1);
  double rhs = plancherel_rhs_quadrature(a, 0.1, 1e-5);
  CHECK(std::abs(lhs - rhs) <= 1e-5);

  // homogeneity: doubling the coefficients quadruples the value
  DirichletPolynomial doubled(50);
  for (std::size_t n = 1; n <= 50; ++n) doubled[n] = 2.0 * a[n];
  double rhs4 = plancherel_rhs_quadrature(doubled, 0.1, 1e-5);
  CHECK(rhs4 == Catch::Approx(4.0 * rhs).margin(5e-5));

  CHECK_THROWS_AS(plancherel_rhs_quadrature(a, -0.1, 1e-5), std::domain_error);
  CHECK_THROWS_AS(plancherel_rhs_quadrature(a, 0.1, 0.0), std::domain_error);
}

TEST_CASE("plancherel equality on the fuzz corpus") {
  for (u64 seed = 100; seed < 106; ++seed) {
    auto a = random_poly(seed, 32);
    for (double sigma : {0.05, 0.1, 0.5}) {
      double lhs = plancherel_lhs_exact(a, sigma);
      double tol = std::max(1e-5 * lhs, 1e-9);
      double rhs = plancherel_rhs_quadrature(a, sigma, tol);
      CHECK(std::abs(lhs - rhs) <= tol);
    }
  }
}

TEST_CASE("euler ratio expectation: exact cases") {
  auto t = build_spf(10000);

  // y = x, sigma = 0, t = 0: the ratio is identically 1
  auto unit = euler_ratio_expectation(100.0, 100.0, 0.0, 0.0, t);
  CHECK(unit.value == 1.0);
  CHECK_FALSE(unit.hypothesis_ok);

  // single outer prime: geometric series (1 - p^{-1-2 sigma})^{-1}
  double sigma = 0.2;
  auto one_outer = euler_ratio_expectation(2.0, 3.0, sigma, 0.0, t);
  double inner_factor = circle_mean([&](double th) {
    cplx e{std::cos(th), std::sin(th)};
    double amp = std::pow(2.0, -0.5 - sigma);
    return std::norm((1.0 - e * std::pow(2.0, -0.5)) / (1.0 - e * amp));
  });
  double outer = 1.0 / (1.0 - std::pow(3.0, -1.0 - 2.0 * sigma));
  CHECK(one_outer.value == Catch::Approx(inner_factor * outer).epsilon(1e-10));

  CHECK_THROWS_AS(euler_ratio_expectation(100.0, 10.0, 0.1, 0.0, t),
                  std::invalid_argument);
  CHECK_THROWS_AS(euler_ratio_expectation(10.0, 100.0, -0.1, 0.0, t),
                  std::domain_error);
}

TEST_CASE("euler ratio expectation: symmetry, monotonicity, hypothesis flag") {
  auto t = build_spf(2000);
  double sigma = 0.05;
  for (double tt : {0.01, 0.05, 0.2}) {
    auto plus = euler_ratio_expectation(50.0, 500.0, sigma, tt, t);
    auto minus = euler_ratio_expectation(50.0, 500.0, sigma, -tt, t);
    CHECK(std::abs(plus.value - minus.value) <= 1e-12 * plus.value);
    CHECK(plus.hypothesis_ok == (sigma * std::log(500.0) <= 1.0));
  }

  // nondecreasing in y at t = 0: every added factor is >= 1
  double prev = 0.0;
  for (double y : {100.0, 200.0, 500.0, 1000.0, 2000.0}) {
    auto e = euler_ratio_expectation(100.0, y, 0.01, 0.0, t);
    CHECK(e.value >= prev);
    prev = e.value;
  }

  // hypothesis flag trips when sigma log y > 1, value still computed
  auto flagged = euler_ratio_expectation(10.0, 2000.0, 0.5, 0.0, t);
  CHECK_FALSE(flagged.hypothesis_ok);
  CHECK(flagged.value > 0.0);

  // comparison quantity and implied constant
  auto e = euler_ratio_expectation(100.0, 1000.0, 0.05, 0.1, t, 2.0);
  double lx = std::log(100.0), ly = std::log(1000.0);
  CHECK(e.comparison ==
        Catch::Approx(std::exp(2.0 * 0.01 * lx * lx) * ly / lx).epsilon(1e-12));
  CHECK(e.implied_c ==
        Catch::Approx(std::log(e.value * lx / ly) / (0.01 * lx * lx))
            .epsilon(1e-10));
}

TEST_CASE("euler ratio oracle vs Monte Carlo") {
  auto t = build_spf(2000);
  double x = 100.0, y = 1000.0, sigma = 0.02, tt = 0.0;
  auto oracle = euler_ratio_expectation(x, y, sigma, tt, t);
  EnsembleConfig cfg;
  cfg.seed_start = 1;
  cfg.count = 4000;
  auto values = ensemble_euler_ratio(t, cfg, x, y, sigma, tt);
  auto rep = make_report(values, 0);
  CHECK(std::abs(rep.mean - oracle.value) <= 3.0 * rep.se_mean);
}
