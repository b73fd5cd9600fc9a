#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rmf/common.hpp"

namespace rmf {

namespace detail {

// Gauss-Kronrod 7/15 pair (QUADPACK abscissae and weights).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.02293532201052922, 0.06309209262997855, 0.10479001032225018,
    0.14065325971552592, 0.16900472663926790, 0.19035057806478541,
    0.20443294007529889, 0.20948214108472782};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.12948496616886969, 0.27970539148927664, 0.38183005050511894,
    0.41795918367346939};

struct PanelResult {
  double integral;
  double error;
};

template <class Fn>
inline PanelResult gk15(Fn&& f, double a, double b) {
  double mid = 0.5 * (a + b);
  double half = 0.5 * (b - a);
  double fk = 0.0;  // Kronrod
  double fg = 0.0;  // embedded Gauss
  for (int i = 0; i < 8; ++i) {
    double x = kKronrodNodes[i] * half;
    double v = (i == 7) ? f(mid) : f(mid - x) + f(mid + x);
    fk += kKronrodWeights[i] * v;
    if (i % 2 == 1) fg += kGaussWeights[i / 2] * v;
  }
  double integral = fk * half;
  // Raw |K15 - G7| difference: conservative for the returned Kronrod value,
  // which is what a guaranteed absolute tolerance needs.
  double err = std::abs((fk - fg) * half);
  return {integral, err};
}

}  // namespace detail

// Globally adaptive GK15 on [a, b] to an absolute tolerance. Subdivision
// follows a fixed deterministic order (worst panel first with index
// tie-breaking), so results are reproducible. For oscillatory integrands
// the caller must pass initial_panels high enough that a panel spans only
// a few periods; a single wide panel can alias the error estimate to zero.
template <class Fn>
inline double integrate_adaptive(Fn&& f, double a, double b, double abs_tol,
                                 std::size_t max_panels = 200000,
                                 std::size_t initial_panels = 1) {
  struct Panel {
    double a, b, integral, error;
  };
  initial_panels = std::clamp<std::size_t>(initial_panels, 1,
                                           std::max<std::size_t>(1, max_panels));
  std::vector<Panel> panels;
  panels.reserve(initial_panels);
  for (std::size_t i = 0; i < initial_panels; ++i) {
    double lo = a + (b - a) * double(i) / double(initial_panels);
    double hi = a + (b - a) * double(i + 1) / double(initial_panels);
    auto r = detail::gk15(f, lo, hi);
    panels.push_back({lo, hi, r.integral, r.error});
  }

  while (true) {
    double total_err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total_err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (total_err <= abs_tol) break;
    if (panels.size() >= max_panels)
      throw convergence_error(
          "integrate_adaptive: tolerance unachievable within panel cap");
    Panel p = panels[worst];
    double mid = 0.5 * (p.a + p.b);
    auto left = detail::gk15(f, p.a, mid);
    auto right = detail::gk15(f, mid, p.b);
    panels[worst] = {p.a, mid, left.integral, left.error};
    panels.push_back({mid, p.b, right.integral, right.error});
  }

  // Deterministic summation order: by left endpoint.
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  KahanSum sum;
  for (const auto& p : panels) sum.add(p.integral);
  return sum.value();
}

// Mean of a smooth 2*pi-periodic function over the circle by the trapezoid
// rule (spectrally accurate), doubling the node count until two successive
// estimates agree to tol or the cap is hit.
template <class Fn>
inline double circle_mean(Fn&& f, double tol = 1e-13, std::size_t start = 256,
                          std::size_t cap = 1 << 16) {
  double prev = 0.0;
  bool have_prev = false;
  for (std::size_t n = start; n <= cap; n *= 2) {
    KahanSum s;
    double h = 2.0 * std::numbers::pi / double(n);
    for (std::size_t k = 0; k < n; ++k) s.add(f(double(k) * h));
    double cur = s.value() / double(n);
    if (have_prev && std::abs(cur - prev) < tol) return cur;
    prev = cur;
    have_prev = true;
  }
  throw convergence_error("circle_mean: node cap reached before convergence");
}

}  // namespace rmf
