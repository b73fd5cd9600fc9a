#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "rmf/common.hpp"
#include "rmf/quadrature.hpp"
#include "rmf/realization.hpp"
#include "rmf/schedule.hpp"
#include "rmf/sieve.hpp"
#include "rmf/sums.hpp"

namespace rmf {

// ---------------------------------------------------------------------
// Ensemble plumbing. Seeds are seed_start + index; each result lands in
// its index slot and reductions run as ordered folds, so reports are
// bit-identical for any worker count.
// ---------------------------------------------------------------------

struct EnsembleConfig {
  u64 seed_start = 1;
  u64 count = 1;
  u64 limit = 0;
  ScheduleParams schedule{};
  unsigned workers = 1;
  bool retain = false;

  void validate() const {
    if (count < 1)
      throw std::invalid_argument("EnsembleConfig: count must be >= 1");
    schedule.validate();
  }
};

// make_kernel() is invoked once per worker thread and returns a callable
// seed -> R; per-worker scratch buffers live in that closure.
template <class R, class MakeKernel>
std::vector<R> ensemble_collect(u64 seed_start, u64 count, unsigned workers,
                                MakeKernel&& make_kernel) {
  std::vector<R> out(count);
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    auto kernel = make_kernel();
    for (u64 i = 0; i < count; ++i) out[i] = kernel(seed_start + i);
    return out;
  }
  workers = unsigned(std::min<u64>(workers, count));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    u64 lo = count * w / workers;
    u64 hi = count * (w + 1) / workers;
    threads.emplace_back([&, lo, hi] {
      auto kernel = make_kernel();
      for (u64 i = lo; i < hi; ++i) out[i] = kernel(seed_start + i);
    });
  }
  for (auto& t : threads) t.join();
  return out;
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Two-sided Kolmogorov-Smirnov distance of samples against a CDF.
template <class Cdf>
inline double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty())
    throw insufficient_data_error("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
  }
  return d;
}

struct EnsembleReport {
  u64 config_hash = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se_mean = 0.0;
  std::vector<double> cdf_grid;  // standardized z values
  std::vector<double> cdf;       // empirical CDF at the grid
  std::optional<std::vector<double>> values;
};

inline EnsembleReport make_report(const std::vector<double>& values,
                                  u64 config_hash, bool retain = false) {
  if (values.empty())
    throw insufficient_data_error("make_report: empty ensemble");
  EnsembleReport rep;
  rep.config_hash = config_hash;
  rep.count = values.size();
  KahanSum mean;
  for (double v : values) mean.add(v);
  rep.mean = mean.value() / double(values.size());
  KahanSum var;
  for (double v : values) var.add((v - rep.mean) * (v - rep.mean));
  rep.variance =
      values.size() > 1 ? var.value() / double(values.size() - 1) : 0.0;
  rep.se_mean = std::sqrt(rep.variance / double(values.size()));
  double sd = std::sqrt(rep.variance);
  for (int i = 0; i <= 32; ++i) rep.cdf_grid.push_back(-4.0 + 0.25 * i);
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  for (double z : rep.cdf_grid) {
    double cut = rep.mean + z * sd;
    auto it = std::upper_bound(sorted.begin(), sorted.end(), cut);
    rep.cdf.push_back(double(it - sorted.begin()) / double(sorted.size()));
  }
  if (retain) rep.values = values;
  return rep;
}

// ---------------------------------------------------------------------
// Exact combinatorial expectations.
// ---------------------------------------------------------------------

using CoeffMap = std::vector<std::pair<u64, cplx>>;

struct MomentResult {
  double exact;  // E |sum a(n) f(n)/sqrt(n)|^{2l}
  double bound;  // (sum |a(n)|^2 tau_l(n)/n)^l
};

// Phase orthogonality kills every tuple pair except those with equal
// products, so the 2l-th moment is sum_P |c_P|^2 over tuple products P.
inline MomentResult moment_exact(const CoeffMap& coeffs, u32 l,
                                 const SpfTable& t) {
  if (l < 1 || l > 3)
    throw std::invalid_argument("moment_exact: l must be in 1..3");
  if (coeffs.size() > 14)
    throw resource_limit_error("moment_exact: support must be <= 14");
  for (const auto& [n, a] : coeffs) {
    t.check_range(n);
    if (n > 2'000'000)
      throw resource_limit_error(
          "moment_exact: support keys must be <= 2e6 so tuple products fit "
          "64 bits");
  }

  std::map<u64, cplx> tuple_sums;
  auto rec = [&](auto&& self, u32 depth, u64 prod, cplx weight) -> void {
    if (depth == l) {
      tuple_sums[prod] += weight;
      return;
    }
    for (const auto& [n, a] : coeffs)
      self(self, depth + 1, prod * n, weight * a / std::sqrt(double(n)));
  };
  rec(rec, 0, 1, cplx{1.0});

  KahanSum exact;
  for (const auto& [prod, c] : tuple_sums) exact.add(std::norm(c));

  KahanSum base;
  for (const auto& [n, a] : coeffs)
    base.add(std::norm(a) * double(tau_l(n, l, t)) / double(n));
  return {exact.value(), std::pow(base.value(), double(l))};
}

struct FourthMomentResult {
  double exact;  // E |sum_{u<n<=v} f(n)|^4
  double bound;  // (sum_{u<n<=v} tau(n))^2
};

inline FourthMomentResult fourth_moment_window(u64 u, u64 v,
                                               const SpfTable& t) {
  if (u > v)
    throw std::invalid_argument("fourth_moment_window: requires u <= v");
  if (v > t.limit())
    throw std::invalid_argument("fourth_moment_window: v exceeds table limit");
  if (v - u > 1000)
    throw resource_limit_error(
        "fourth_moment_window: window length must be <= 1000");
  if (u == v) return {0.0, 0.0};

  std::map<u64, u64> pair_counts;
  for (u64 m1 = u + 1; m1 <= v; ++m1)
    for (u64 m2 = u + 1; m2 <= v; ++m2) ++pair_counts[m1 * m2];
  double exact = 0.0;
  for (const auto& [prod, c] : pair_counts) exact += double(c) * double(c);

  u64 tau_sum = 0;
  for (u64 n = u + 1; n <= v; ++n) tau_sum += tau(n, t);
  return {exact, double(tau_sum) * double(tau_sum)};
}

// ---------------------------------------------------------------------
// Walk ensembles: Levy inequality and the upper exponential bound.
// ---------------------------------------------------------------------

namespace detail {

// cos(theta_p) for the per-prime phase of a seed.
inline double walk_term_cos(u64 seed, u64 p) {
  return std::cos(fraction_to_angle(steinhaus_fraction(seed, p)));
}

}  // namespace detail

struct LevyReport {
  double p_max = 0.0;       // P(max over x_points of walk > threshold)
  double p_end_doubled = 0.0;  // 2 P(walk at last point > threshold)
  double se_diff = 0.0;     // SE of (indicator_max - 2 indicator_end)
  bool violation = false;   // p_max exceeds p_end_doubled beyond 3 SE
};

inline LevyReport levy_check(const SpfTable& t, const EnsembleConfig& cfg,
                             const std::vector<double>& x_points,
                             double threshold) {
  cfg.validate();
  if (x_points.empty())
    throw std::invalid_argument("levy_check: x_points must be nonempty");
  if (!std::is_sorted(x_points.begin(), x_points.end()))
    throw std::invalid_argument("levy_check: x_points must be ascending");
  if (x_points.back() > double(t.limit()))
    throw std::invalid_argument("levy_check: x_points exceed table limit");

  auto primes = t.primes_in(0.0, x_points.back());
  std::vector<double> inv_sqrt(primes.size());
  for (std::size_t i = 0; i < primes.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(double(primes[i]));
  // index of the first prime > x for each checkpoint
  std::vector<std::size_t> cut(x_points.size());
  for (std::size_t g = 0; g < x_points.size(); ++g)
    cut[g] = t.primes_in(0.0, x_points[g]).size();

  struct MaxEnd {
    double max_at_points;
    double end;
  };
  auto per_seed = ensemble_collect<MaxEnd>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          KahanSum walk;
          double best = -std::numeric_limits<double>::infinity();
          std::size_t g = 0;
          for (std::size_t i = 0; i <= primes.size(); ++i) {
            while (g < cut.size() && cut[g] == i) {
              best = std::max(best, walk.value());
              ++g;
            }
            if (i == primes.size()) break;
            walk.add(detail::walk_term_cos(seed, primes[i]) * inv_sqrt[i]);
          }
          return MaxEnd{best, walk.value()};
        };
      });

  LevyReport rep;
  KahanSum diff, diff_sq;
  u64 n_max = 0, n_end = 0;
  for (const auto& me : per_seed) {
    double im = me.max_at_points > threshold ? 1.0 : 0.0;
    double ie = me.end > threshold ? 1.0 : 0.0;
    n_max += im > 0.5;
    n_end += ie > 0.5;
    double d = im - 2.0 * ie;
    diff.add(d);
    diff_sq.add(d * d);
  }
  double n = double(per_seed.size());
  rep.p_max = double(n_max) / n;
  rep.p_end_doubled = 2.0 * double(n_end) / n;
  double mean_d = diff.value() / n;
  double var_d = n > 1 ? (diff_sq.value() - n * mean_d * mean_d) / (n - 1) : 0.0;
  rep.se_diff = std::sqrt(std::max(0.0, var_d) / n);
  rep.violation = (rep.p_max - rep.p_end_doubled) > 3.0 * rep.se_diff;
  return rep;
}

struct UebReport {
  double empirical = 0.0;  // P(walk > level * s)
  double bound = 0.0;      // exp(-(level^2/2)(1 - level c/2)), c = 2/s
  double s = 0.0;
  double se = 0.0;
  bool violation = false;
};

inline UebReport ueb_check(const SpfTable& t, const EnsembleConfig& cfg,
                           double x, double level) {
  cfg.validate();
  double s2 = walk_variance(x, t);
  double s = std::sqrt(s2);
  double c = 2.0 / s;
  if (!(level > 0.0 && level < 1.0 / c))
    throw std::invalid_argument(
        "ueb_check: level must satisfy 0 < level < 1/c = s/2 = " +
        std::to_string(s / 2.0));

  auto primes = t.primes_in(0.0, x);
  std::vector<double> inv_sqrt(primes.size());
  for (std::size_t i = 0; i < primes.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(double(primes[i]));

  auto walks = ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          KahanSum walk;
          for (std::size_t i = 0; i < primes.size(); ++i)
            walk.add(detail::walk_term_cos(seed, primes[i]) * inv_sqrt[i]);
          return walk.value();
        };
      });

  UebReport rep;
  rep.s = s;
  u64 hits = 0;
  for (double w : walks) hits += w > level * s;
  double n = double(walks.size());
  rep.empirical = double(hits) / n;
  rep.bound = std::exp(-(level * level / 2.0) * (1.0 - level * c / 2.0));
  rep.se = std::sqrt(rep.empirical * (1.0 - rep.empirical) / n);
  rep.violation = rep.empirical - rep.bound > 3.0 * rep.se;
  return rep;
}

// ---------------------------------------------------------------------
// The sin-weighted prime statistic and its Berry-Esseen control.
// ---------------------------------------------------------------------

// Per-prime weights of the statistic
//   X_p = w1(p) Re f(p) + w2(p) Re f(p)^2,
//   w1 = 2 (log T) sin(log p / (2 log T)) / (p^{1/2+sigma} log p),
//   w2 = 1 / (2 p^{1+2sigma}),
// for primes in (lo, hi], with T = hi and sigma = log log T / log T.
struct SinWeights {
  std::span<const u32> primes;
  std::vector<double> w1, w2;
  double sigma = 0.0;
  double log_t = 0.0;

  double variance() const {
    KahanSum v;
    for (std::size_t i = 0; i < w1.size(); ++i)
      v.add(0.5 * (w1[i] * w1[i] + w2[i] * w2[i]));
    return v.value();
  }

  // sum of E|X_p|^3 by phase quadrature on the circle.
  double third_abs_moment_sum() const {
    KahanSum b;
    for (std::size_t i = 0; i < w1.size(); ++i) {
      double scale = std::max(std::abs(w1[i]), std::abs(w2[i]));
      if (scale == 0.0) continue;
      double na = w1[i] / scale, nb = w2[i] / scale;
      double m = circle_mean(
          [&](double th) {
            double c = std::cos(th);
            double v = na * c + nb * (2.0 * c * c - 1.0);
            return std::abs(v * v * v);
          },
          1e-10, 64, 1 << 14);
      b.add(m * scale * scale * scale);
    }
    return b.value();
  }
};

inline SinWeights build_sin_weights(const SpfTable& t, double lo, double hi) {
  if (hi > double(t.limit()))
    throw std::invalid_argument("sin weights: range exceeds table limit");
  SinWeights w;
  w.primes = t.primes_in(lo, hi);
  w.log_t = std::log(hi);
  w.sigma = sigma_of(hi);
  w.w1.resize(w.primes.size());
  w.w2.resize(w.primes.size());
  for (std::size_t i = 0; i < w.primes.size(); ++i) {
    double p = double(w.primes[i]);
    double lp = std::log(p);
    w.w1[i] = 2.0 * w.log_t * std::sin(lp / (2.0 * w.log_t)) /
              (std::pow(p, 0.5 + w.sigma) * lp);
    w.w2[i] = 0.5 * std::pow(p, -1.0 - 2.0 * w.sigma);
  }
  return w;
}

inline double sin_weighted_value(u64 seed, const SinWeights& w) {
  KahanSum s;
  for (std::size_t i = 0; i < w.primes.size(); ++i) {
    double c = detail::walk_term_cos(seed, u64(w.primes[i]));
    s.add(w.w1[i] * c + w.w2[i] * (2.0 * c * c - 1.0));
  }
  return s.value();
}

// Full-range statistic for one realization: primes p <= T_k.
inline double sin_weighted_statistic(const SteinhausRealization& r, u64 k,
                                     const ScheduleParams& params,
                                     const SpfTable& t) {
  double tk = lb_point(params, k);
  if (tk > double(r.limit()))
    throw std::invalid_argument(
        "sin_weighted_statistic: T_k exceeds realization limit");
  auto w = build_sin_weights(t, 0.0, tk);
  return sin_weighted_value(r.seed(), w);
}

struct BerryEsseenReport {
  double ks_distance = 0.0;
  double be_bound_shape = 0.0;  // beta^3 / s^3
  double beta3 = 0.0;
  double s = 0.0;  // exact standard deviation from the variance formula
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  std::size_t count = 0;
  std::optional<std::vector<double>> values;
};

inline BerryEsseenReport berry_esseen_gap(const SpfTable& t,
                                          const EnsembleConfig& cfg, double lo,
                                          double hi) {
  cfg.validate();
  if (cfg.count < 1000)
    throw insufficient_data_error(
        "berry_esseen_gap: needs at least 1000 samples");
  auto w = build_sin_weights(t, lo, hi);
  if (w.primes.empty())
    throw std::invalid_argument("berry_esseen_gap: no primes in range");

  auto values = ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers,
      [&] { return [&](u64 seed) { return sin_weighted_value(seed, w); }; });

  BerryEsseenReport rep;
  rep.count = values.size();
  rep.s = std::sqrt(w.variance());
  rep.beta3 = w.third_abs_moment_sum();
  rep.be_bound_shape = rep.beta3 / (rep.s * rep.s * rep.s);

  KahanSum mean;
  for (double v : values) mean.add(v);
  rep.sample_mean = mean.value() / double(values.size());
  KahanSum var;
  for (double v : values)
    var.add((v - rep.sample_mean) * (v - rep.sample_mean));
  rep.sample_variance = var.value() / double(values.size() - 1);

  std::vector<double> standardized(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    standardized[i] = values[i] / rep.s;  // exact mean is zero
  rep.ks_distance = ks_distance(standardized, normal_cdf);
  if (cfg.retain) rep.values = std::move(values);
  return rep;
}

// ---------------------------------------------------------------------
// Lower-bound chain: average versus maximum of |M_f|^2 over a scale range.
// ---------------------------------------------------------------------

struct LowerBoundResult {
  double avg = 0.0;     // (1/log T) int_{T_{k-1}}^{T_k} |M_f(t)|^2 t^{-1-2s} dt
  double max_sq = 0.0;  // max over step values of |M_f(t)|^2 on [T_{k-1}, T_k]
  double euler_lb = 0.0;  // exp(2 S_sin) / (log log T)^2, constant left out
};

namespace detail {

// One pass over n <= t_hi: composite angle fractions via the spf recursion,
// M_f accumulated ascending, integral pieces and the step maximum collected
// on [t_lo, t_hi], sin-weighted statistic collected at the primes.
struct LowerBoundKernel {
  const SpfTable& t;
  double t_lo, t_hi;
  SinWeights weights;  // full range (0, t_hi]
  double sigma;
  std::vector<u64> frac;

  LowerBoundKernel(const SpfTable& table, double lo, double hi)
      : t(table), t_lo(lo), t_hi(hi), weights(build_sin_weights(table, 0.0, hi)),
        sigma(sigma_of(hi)) {
    if (!(lo >= 1.0 && lo < hi))
      throw std::invalid_argument("lower_bound: requires 1 <= T_{k-1} < T_k");
    frac.resize(u64(std::floor(hi)) + 1);
  }

  LowerBoundResult operator()(u64 seed) {
    u64 n_hi = u64(std::floor(t_hi));
    u64 n_base = u64(std::floor(t_lo));
    KahanCplx m;
    KahanSum integral;
    KahanSum sin_stat;
    double max_sq = 0.0;
    std::size_t prime_idx = 0;
    frac[1] = 0;
    m.add(1.0);
    for (u64 n = 1; n <= n_hi; ++n) {
      if (n >= 2) {
        u64 p = t.spf(n);
        frac[n] = (p == n) ? steinhaus_fraction(seed, n)
                           : frac[p] + frac[n / p];
        m.add(cis_fraction(frac[n]) / std::sqrt(double(n)));
        if (p == n) {
          double c = std::cos(fraction_to_angle(frac[n]));
          sin_stat.add(weights.w1[prime_idx] * c +
                       weights.w2[prime_idx] * (2.0 * c * c - 1.0));
          ++prime_idx;
        }
      }
      if (n >= n_base) {
        double a = std::max(t_lo, double(n));
        double b = std::min(t_hi, double(n) + 1.0);
        if (b > a) {
          double msq = std::norm(m.value());
          integral.add(msq * (std::pow(a, -2.0 * sigma) -
                              std::pow(b, -2.0 * sigma)) /
                       (2.0 * sigma));
          max_sq = std::max(max_sq, msq);
        }
      }
    }
    LowerBoundResult out;
    out.avg = integral.value() / std::log(t_hi);
    out.max_sq = max_sq;
    double loglog = std::log(std::log(t_hi));
    double expo = 2.0 * sin_stat.value();
    out.euler_lb = expo > 700.0 ? std::numeric_limits<double>::infinity()
                                : std::exp(expo) / (loglog * loglog);
    return out;
  }
};

}  // namespace detail

inline LowerBoundResult lower_bound_integral_range(
    const SteinhausRealization& r, double t_lo, double t_hi,
    const SpfTable& t) {
  if (t_hi > double(r.limit()))
    throw std::invalid_argument("lower_bound: T_k exceeds realization limit");
  detail::LowerBoundKernel kernel(t, t_lo, t_hi);
  return kernel(r.seed());
}

inline LowerBoundResult lower_bound_integral(const SteinhausRealization& r,
                                             u64 k,
                                             const ScheduleParams& params,
                                             const SpfTable& t) {
  if (k < 2)
    throw std::invalid_argument("lower_bound_integral: requires k >= 2");
  return lower_bound_integral_range(r, lb_point(params, k - 1),
                                    lb_point(params, k), t);
}

inline std::vector<LowerBoundResult> lower_bound_ensemble(
    const SpfTable& t, const EnsembleConfig& cfg, double t_lo, double t_hi) {
  cfg.validate();
  return ensemble_collect<LowerBoundResult>(
      cfg.seed_start, cfg.count, cfg.workers,
      [&] { return detail::LowerBoundKernel(t, t_lo, t_hi); });
}

// ---------------------------------------------------------------------
// Maximal fluctuation between consecutive test points.
// ---------------------------------------------------------------------

inline double max_fluctuation(const SteinhausRealization& r, u64 i,
                              const ScheduleParams& params,
                              const SpfTable& t) {
  if (i < 2)
    throw std::invalid_argument("max_fluctuation: requires i >= 2");
  u64 x_prev = test_point(params, i - 1);
  u64 x_cur = test_point(params, i);
  if (x_cur > r.limit())
    throw std::invalid_argument("max_fluctuation: x_i exceeds realization limit");
  if (x_cur == x_prev) return 0.0;

  auto frac = detail::fraction_table(r.seed(), x_cur, t);
  KahanCplx m;
  cplx base{0.0};
  double best = 0.0;
  for (u64 n = 1; n <= x_cur; ++n) {
    m.add(cis_fraction(frac[n]) / std::sqrt(double(n)));
    if (n == x_prev) base = m.value();
    if (n > x_prev) best = std::max(best, std::abs(m.value() - base));
  }
  return best;
}

// ---------------------------------------------------------------------
// LIL-scale diagnostics of the prime walk.
// ---------------------------------------------------------------------

struct LilGridStat {
  double x = 0.0;
  double exact_sd = 0.0;    // sqrt(sum 1/(2p))
  double mean_norm = 0.0;   // sample mean of walk / exact_sd
  double var_norm = 0.0;    // sample variance of the same
  double ks = 0.0;          // KS distance of the normalized walk vs normal
};

struct LilEnsembleReport {
  std::vector<LilGridStat> grid;
  std::vector<double> run_max;  // per-seed max of walk(x)/lil_normalizer(x)
  double run_max_mean = 0.0;
  double corr = std::numeric_limits<double>::quiet_NaN();
  double corr_fisher_z = 0.0;
  double corr_se = 0.0;  // SE of Fisher z
  double corr_x = 0.0;
  std::optional<std::vector<std::vector<double>>> walk_values;  // [grid][seed]
};

// Walk distributions along a grid, the running max against the LIL
// normalizer, and (optionally, corr_x > 0) the correlation between
// log |M_f(corr_x)| and the walk at corr_x across the ensemble.
inline LilEnsembleReport lil_ensemble(const SpfTable& t,
                                      const EnsembleConfig& cfg,
                                      const std::vector<double>& x_grid,
                                      double corr_x = 0.0) {
  cfg.validate();
  if (x_grid.empty() || !std::is_sorted(x_grid.begin(), x_grid.end()))
    throw std::invalid_argument("lil_ensemble: grid must be nonempty ascending");
  if (x_grid.back() > double(t.limit()))
    throw std::invalid_argument("lil_ensemble: grid exceeds table limit");

  auto primes = t.primes_in(0.0, x_grid.back());
  std::vector<double> inv_sqrt(primes.size());
  for (std::size_t i = 0; i < primes.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(double(primes[i]));
  std::vector<std::size_t> cut(x_grid.size());
  std::vector<double> normalizer(x_grid.size());
  for (std::size_t g = 0; g < x_grid.size(); ++g) {
    cut[g] = t.primes_in(0.0, x_grid[g]).size();
    normalizer[g] = lil_normalizer(x_grid[g]);
  }

  auto rows = ensemble_collect<std::vector<double>>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          std::vector<double> at_points(x_grid.size());
          KahanSum walk;
          std::size_t g = 0;
          for (std::size_t i = 0; i <= primes.size(); ++i) {
            while (g < cut.size() && cut[g] == i) {
              at_points[g] = walk.value();
              ++g;
            }
            if (i == primes.size()) break;
            walk.add(detail::walk_term_cos(seed, primes[i]) * inv_sqrt[i]);
          }
          return at_points;
        };
      });

  LilEnsembleReport rep;
  double n = double(cfg.count);
  for (std::size_t g = 0; g < x_grid.size(); ++g) {
    LilGridStat st;
    st.x = x_grid[g];
    st.exact_sd = std::sqrt(walk_variance(x_grid[g], t));
    std::vector<double> norm(cfg.count);
    for (u64 i = 0; i < cfg.count; ++i) norm[i] = rows[i][g] / st.exact_sd;
    KahanSum mean;
    for (double v : norm) mean.add(v);
    st.mean_norm = mean.value() / n;
    KahanSum var;
    for (double v : norm) var.add((v - st.mean_norm) * (v - st.mean_norm));
    st.var_norm = var.value() / (n - 1.0);
    st.ks = ks_distance(norm, normal_cdf);
    rep.grid.push_back(st);
  }

  rep.run_max.resize(cfg.count, -std::numeric_limits<double>::infinity());
  bool any_normalized = false;
  for (u64 i = 0; i < cfg.count; ++i) {
    for (std::size_t g = 0; g < x_grid.size(); ++g) {
      if (normalizer[g] <= 0.0) continue;  // below the e^{e^e} boundary
      any_normalized = true;
      rep.run_max[i] = std::max(rep.run_max[i], rows[i][g] / normalizer[g]);
    }
  }
  if (!any_normalized) rep.run_max.assign(cfg.count, 0.0);
  KahanSum rm;
  for (double v : rep.run_max) rm.add(v);
  rep.run_max_mean = rm.value() / n;

  if (corr_x > 0.0) {
    if (corr_x > double(t.limit()))
      throw std::invalid_argument("lil_ensemble: corr_x exceeds table limit");
    rep.corr_x = corr_x;
    struct Pair {
      double log_abs_m;
      double walk;
    };
    auto pairs = ensemble_collect<Pair>(
        cfg.seed_start, cfg.count, cfg.workers, [&] {
          return
              [&, buf = std::vector<u64>(u64(std::floor(corr_x)) + 1)](
                  u64 seed) mutable {
                u64 hi = u64(std::floor(corr_x));
                KahanCplx m;
                KahanSum walk;
                buf[1] = 0;
                m.add(1.0);
                for (u64 nn = 2; nn <= hi; ++nn) {
                  u64 p = t.spf(nn);
                  buf[nn] = (p == nn) ? steinhaus_fraction(seed, nn)
                                      : buf[p] + buf[nn / p];
                  m.add(cis_fraction(buf[nn]) / std::sqrt(double(nn)));
                  if (p == nn)
                    walk.add(std::cos(fraction_to_angle(buf[nn])) /
                             std::sqrt(double(nn)));
                }
                double am = std::abs(m.value());
                return Pair{std::log(std::max(am, 1e-300)), walk.value()};
              };
        });
    KahanSum sx, sy;
    for (const auto& pr : pairs) {
      sx.add(pr.log_abs_m);
      sy.add(pr.walk);
    }
    double mx = sx.value() / n, my = sy.value() / n;
    KahanSum sxx, syy, sxy;
    for (const auto& pr : pairs) {
      sxx.add((pr.log_abs_m - mx) * (pr.log_abs_m - mx));
      syy.add((pr.walk - my) * (pr.walk - my));
      sxy.add((pr.log_abs_m - mx) * (pr.walk - my));
    }
    rep.corr = sxy.value() / std::sqrt(sxx.value() * syy.value());
    rep.corr_fisher_z = std::atanh(std::clamp(rep.corr, -0.999999, 0.999999));
    rep.corr_se = 1.0 / std::sqrt(n - 3.0);
  }

  if (cfg.retain) {
    std::vector<std::vector<double>> by_grid(
        x_grid.size(), std::vector<double>(cfg.count));
    for (u64 i = 0; i < cfg.count; ++i)
      for (std::size_t g = 0; g < x_grid.size(); ++g)
        by_grid[g][i] = rows[i][g];
    rep.walk_values = std::move(by_grid);
  }
  return rep;
}

// ---------------------------------------------------------------------
// Small Monte Carlo kernels used by the verification suites.
// ---------------------------------------------------------------------

// |M_f(x)|^2 per seed.
inline std::vector<double> ensemble_m2(const SpfTable& t,
                                       const EnsembleConfig& cfg, double x) {
  cfg.validate();
  if (x > double(t.limit()))
    throw std::invalid_argument("ensemble_m2: x exceeds table limit");
  u64 hi = u64(std::floor(x));
  return ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&, buf = std::vector<u64>(hi + 1)](u64 seed) mutable {
          KahanCplx m;
          buf[1] = 0;
          m.add(1.0);
          for (u64 n = 2; n <= hi; ++n) {
            u64 p = t.spf(n);
            buf[n] =
                (p == n) ? steinhaus_fraction(seed, n) : buf[p] + buf[n / p];
            m.add(cis_fraction(buf[n]) / std::sqrt(double(n)));
          }
          return std::norm(m.value());
        };
      });
}

// |sum a(n) f(n)/sqrt(n)|^{2l} per seed, for the moment lemma cross-check.
inline std::vector<double> ensemble_moment(const SpfTable& t,
                                           const EnsembleConfig& cfg,
                                           const CoeffMap& coeffs, u32 l) {
  cfg.validate();
  std::vector<std::pair<cplx, Factorization>> prepared;
  for (const auto& [n, a] : coeffs)
    prepared.push_back({a / std::sqrt(double(n)), factorize(n, t)});
  return ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          KahanCplx sum;
          for (const auto& [w, fact] : prepared) {
            u64 frac = 0;
            for (const auto& [p, v] : fact)
              frac += u64(v) * steinhaus_fraction(seed, p);
            sum.add(w * cis_fraction(frac));
          }
          return std::pow(std::norm(sum.value()), double(l));
        };
      });
}

// |sum_{u<n<=v} f(n)|^4 per seed.
inline std::vector<double> ensemble_fourth_moment(const SpfTable& t,
                                                  const EnsembleConfig& cfg,
                                                  u64 u, u64 v) {
  cfg.validate();
  if (u > v || v > t.limit())
    throw std::invalid_argument("ensemble_fourth_moment: bad window");
  std::vector<Factorization> facts;
  for (u64 n = u + 1; n <= v; ++n) facts.push_back(factorize(n, t));
  return ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          KahanCplx sum;
          for (const auto& fact : facts) {
            u64 frac = 0;
            for (const auto& [p, v2] : fact)
              frac += u64(v2) * steinhaus_fraction(seed, p);
            sum.add(cis_fraction(frac));
          }
          double sq = std::norm(sum.value());
          return sq * sq;
        };
      });
}

// |F_y(1/2+sigma+it)/F_x(1/2)|^2 per seed, for the Euler-ratio oracle check.
inline std::vector<double> ensemble_euler_ratio(const SpfTable& t,
                                                const EnsembleConfig& cfg,
                                                double x, double y,
                                                double sigma, double tt) {
  cfg.validate();
  if (!(2.0 <= x && x <= y) || y > double(t.limit()))
    throw std::invalid_argument("ensemble_euler_ratio: requires 2 <= x <= y <= limit");
  auto primes = t.primes_in(0.0, y);
  struct F {
    u64 p;
    cplx a;      // p^{-1/2-sigma-it}
    double b;    // p^{-1/2}, zero for the outer primes
  };
  std::vector<F> fs;
  for (u32 p : primes) {
    double amp = std::pow(double(p), -0.5 - sigma);
    double ph = tt * std::log(double(p));
    fs.push_back({u64(p), amp * cplx{std::cos(ph), -std::sin(ph)},
                  double(p) <= x ? std::pow(double(p), -0.5) : 0.0});
  }
  return ensemble_collect<double>(
      cfg.seed_start, cfg.count, cfg.workers, [&] {
        return [&](u64 seed) {
          double log_ratio = 0.0;
          for (const auto& f : fs) {
            cplx e = cis_fraction(steinhaus_fraction(seed, f.p));
            double num = f.b > 0.0 ? std::norm(1.0 - e * f.b) : 1.0;
            log_ratio += std::log(num / std::norm(1.0 - e * f.a));
          }
          return std::exp(log_ratio);
        };
      });
}

}  // namespace rmf
