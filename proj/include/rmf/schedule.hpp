#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "rmf/common.hpp"

namespace rmf {

// Multi-scale schedule parameters. Defaults: c = 1/2, q = 3, alpha = 1/q,
// rho = 2, lambda = 4. V only enters diagnostics; the natural choice tied
// to a test point is v_for(x) = (log x)^{2 q^2}.
struct ScheduleParams {
  double c = 0.5;
  u32 q = 3;
  double alpha = 1.0 / 3.0;
  double rho = 2.0;
  double lambda = 4.0;
  double V = 2.0;

  void validate() const {
    if (!(c > 0.0 && c < 1.0))
      throw std::invalid_argument("ScheduleParams: requires 0 < c < 1");
    if (!(alpha > 0.0))
      throw std::invalid_argument("ScheduleParams: requires alpha > 0");
    if (!(rho > 1.0))
      throw std::invalid_argument("ScheduleParams: requires rho > 1");
    if (!(lambda > 1.0))
      throw std::invalid_argument("ScheduleParams: requires lambda > 1");
    if (q < 1) throw std::invalid_argument("ScheduleParams: requires q >= 1");
    if (!(V > 1.0))
      throw std::invalid_argument("ScheduleParams: requires V > 1");
  }

  double v_for(double x) const { return std::pow(std::log(x), 2.0 * q * q); }
};

namespace detail {
// exp with an explicit range error instead of a silent infinity.
inline double checked_exp(double arg, const char* what) {
  if (arg > 709.0) throw std::range_error(std::string(what) +
                                          ": value exceeds floating-point range");
  return std::exp(arg);
}
}  // namespace detail

// x_i = floor(e^{i^c}), the dense test points.
inline u64 test_point(const ScheduleParams& params, u64 i) {
  params.validate();
  if (i < 1) throw std::invalid_argument("test_point: index must be >= 1");
  double e = std::pow(double(i), params.c);
  if (e > 43.0)
    throw std::range_error("test_point: e^{i^c} exceeds the 64-bit range");
  return u64(std::floor(std::exp(e)));
}

// X_l = e^{e^l}, the coarse intervals.
inline double big_point(u64 l) {
  if (l < 1) throw std::invalid_argument("big_point: index must be >= 1");
  return detail::checked_exp(detail::checked_exp(double(l), "big_point"),
                             "big_point");
}

// X~_k = exp(exp(rho^k)), the sparse upper-bound scales.
inline double sparse_point(const ScheduleParams& params, u64 k) {
  params.validate();
  if (k < 1) throw std::invalid_argument("sparse_point: index must be >= 1");
  return detail::checked_exp(
      detail::checked_exp(std::pow(params.rho, double(k)), "sparse_point"),
      "sparse_point");
}

// T_k = exp(exp(lambda^k)), the lower-bound scales.
inline double lb_point(const ScheduleParams& params, u64 k) {
  params.validate();
  if (k < 1) throw std::invalid_argument("lb_point: index must be >= 1");
  return detail::checked_exp(
      detail::checked_exp(std::pow(params.lambda, double(k)), "lb_point"),
      "lb_point");
}

// sigma_k = log log T / log T, defined from the upper end of a scale range.
inline double sigma_of(double t_hi) {
  if (!(t_hi > std::exp(std::exp(1.0))))
    throw std::invalid_argument("sigma_of: requires T > e^e");
  return std::log(std::log(t_hi)) / std::log(t_hi);
}

// Smoothness ladder for scale l in log space: log y_0 = c e^l / 6l,
// log y_j = e^alpha log y_{j-1}, ending at the minimal J with y_J >= X_l.
// Works far beyond the directly representable range of the y values.
inline std::vector<double> y_schedule_logs(const ScheduleParams& params, u64 l) {
  params.validate();
  if (l < 1) throw std::invalid_argument("y_schedule: index must be >= 1");
  double log_xl = detail::checked_exp(double(l), "y_schedule");  // log X_l = e^l
  double log_y = params.c * log_xl / (6.0 * double(l));
  std::vector<double> logs{log_y};
  double step = std::exp(params.alpha);
  while (log_y < log_xl) {
    log_y *= step;
    if (!std::isfinite(log_y))
      throw std::range_error("y_schedule: ladder exceeds floating-point range");
    logs.push_back(log_y);
  }
  return logs;
}

inline std::vector<double> y_schedule(const ScheduleParams& params, u64 l) {
  auto logs = y_schedule_logs(params, l);
  std::vector<double> ys;
  ys.reserve(logs.size());
  for (double lg : logs) ys.push_back(detail::checked_exp(lg, "y_schedule"));
  return ys;
}

// Minimal l >= 1 with x in [X_{l-1}, X_l), where X_0 = e.
inline u64 enclosing_scale(double x) {
  if (!(x >= std::exp(1.0)))
    throw std::invalid_argument("enclosing_scale: requires x >= e");
  for (u64 l = 1;; ++l) {
    if (x < big_point(l)) return l;
  }
}

inline constexpr double kLilBoundary = 3814279.104760220;  // e^{e^e}

// sqrt(log_2 x * log_4 x). Zero at and below the boundary x = e^{e^e}
// unless strict, in which case the boundary is a domain error.
inline double lil_normalizer(double x, bool strict = false) {
  if (!(x > kLilBoundary)) {
    if (strict)
      throw std::domain_error("lil_normalizer: requires x > e^{e^e}");
    return 0.0;
  }
  double l2 = std::log(std::log(x));
  double l4 = std::log(std::log(l2));
  return std::sqrt(l2 * l4);
}

// Same quantity from log_2 x directly, for x beyond double range.
inline double lil_normalizer_from_log2(double log2x, bool strict = false) {
  if (!(log2x > std::exp(1.0))) {
    if (strict)
      throw std::domain_error("lil_normalizer: requires log_2 x > e");
    return 0.0;
  }
  return std::sqrt(log2x * std::log(std::log(log2x)));
}

}  // namespace rmf
