// rmf: command-line front end for the random-multiplicative-function lab.
//
// Subcommands cover realization management, the weighted sums and their
// decomposition, Euler products, and the statistical verification suites.
// All numeric output is CSV with a `# config_hash=` comment line; ensemble
// subcommands accept --workers without affecting output bytes.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmf/config.hpp"
#include "rmf/realization.hpp"
#include "rmf/schedule.hpp"
#include "rmf/sieve.hpp"
#include "rmf/spectral.hpp"
#include "rmf/stats.hpp"
#include "rmf/sums.hpp"

namespace {

using rmf::u32;
using rmf::u64;
using json = nlohmann::ordered_json;

struct Common {
  std::string out;        // CSV destination; empty = stdout
  std::string json_path;  // optional JSON sidecar
  unsigned workers = 1;
  std::map<std::string, std::string> file_values;
};

// Registers options so that config-file values fill in anything the command
// line left unset, and collects the effective values for the config hash.
class OptBag {
 public:
  OptBag(CLI::App* cmd, Common& common) : cmd_(cmd), common_(&common) {
    cmd->fallthrough();  // global flags remain valid after the subcommand name
  }

  template <class T>
  void add(const std::string& name, T& var, const std::string& desc,
           bool required = false) {
    CLI::Option* opt = cmd_->add_option("--" + name, var, desc);
    finalize_.push_back([this, name, opt, &var, required] {
      if (opt->count() == 0) {
        auto it = common_->file_values.find(name);
        if (it != common_->file_values.end()) {
          if (!CLI::detail::lexical_cast(it->second, var))
            throw std::invalid_argument("config: cannot parse value for '" +
                                        name + "'");
        } else if (required) {
          throw std::invalid_argument("missing required parameter --" + name);
        }
      }
      record(name, var);
    });
  }

  // Merge config-file values, enforce required, and build the hash input.
  rmf::RunConfig finalize() {
    rmf::RunConfig rc;
    rc_ = &rc;
    rc.set("subcommand", cmd_->get_name());
    for (auto& f : finalize_) f();
    rc_ = nullptr;
    return rc;
  }

 private:
  void record(const std::string& name, double v) { rc_->set(name, v); }
  void record(const std::string& name, u64 v) { rc_->set(name, v); }
  void record(const std::string& name, unsigned v) { rc_->set(name, u64(v)); }
  void record(const std::string& name, const std::string& v) {
    rc_->set(name, v);
  }

  CLI::App* cmd_;
  Common* common_;
  rmf::RunConfig* rc_ = nullptr;
  std::vector<std::function<void()>> finalize_;
};

void write_output(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw rmf::io_error("cannot open output file " + out);
  f << text;
  if (!f) throw rmf::io_error("write failed for " + out);
}

void emit_json(const json& j, const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw rmf::io_error("cannot open JSON sidecar " + path);
  f << j.dump(2) << "\n";
  if (!f) throw rmf::io_error("write failed for " + path);
}

std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("RMF_CACHE_DIR")) return env;
  return ".";
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = rmf::RunConfig::trim(item);
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list: '" + s + "'");
  return out;
}

std::string g17(double v) { return rmf::fmt_g17(v); }

// Realization source: --seed generates, --cache loads a saved file.
rmf::SteinhausRealization obtain_realization(u64 seed, const std::string& cache,
                                             u64 limit, const rmf::SpfTable& t) {
  if (!cache.empty()) {
    std::filesystem::path p = cache;
    if (p.is_relative() && !std::filesystem::exists(p))
      p = cache_dir() / p;
    return rmf::load_steinhaus_cache(p);
  }
  return rmf::SteinhausRealization::realize(seed, limit, t);
}

// Coefficients uniform in the closed unit disc, deterministically from
// (seed, index).
rmf::cplx disc_coefficient(u64 seed, u64 index) {
  double u = double(rmf::steinhaus_fraction(seed, 2 * index + 2)) /
             18446744073709551616.0;
  double radius = std::sqrt(u);
  double angle = rmf::fraction_to_angle(
      rmf::steinhaus_fraction(seed, 2 * index + 3));
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

// Distinct support keys in [1, key_max], deterministic in seed.
std::vector<u64> random_support(u64 seed, std::size_t size, u64 key_max) {
  std::vector<u64> keys;
  u64 counter = 0;
  while (keys.size() < size) {
    u64 k = 1 + rmf::steinhaus_fraction(seed ^ 0xABCDEF, ++counter) % key_max;
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

int cmd_sieve(Common& c, OptBag& bag, u64 limit) {
  auto rc = bag.finalize();
  auto t = rmf::build_spf(limit);
  rmf::CsvWriter csv(rc.hash(), {"limit", "prime_count", "largest_prime"});
  csv.row({std::to_string(limit), std::to_string(t.primes().size()),
           std::to_string(t.primes().empty() ? 0 : t.primes().back())});
  write_output(csv.str(), c.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random multiplicative function laboratory"};
  app.require_subcommand(1);

  Common common;
  app.add_option("--config", "config file (key = value lines, # comments)")
      ->expected(1);
  app.add_option("--out", common.out, "CSV output path (default stdout)");
  app.add_option("--json", common.json_path, "JSON sidecar path");
  app.add_option("--workers", common.workers,
                 "parallel width for ensembles (does not affect outputs)");

  // Handlers run after parsing; each returns the process exit code.
  std::function<int()> handler;

  // ---- sieve ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("sieve", "build a smallest-prime-factor table");
    auto bag = std::make_shared<OptBag>(cmd, common);
    auto limit = std::make_shared<u64>(0);
    bag->add("limit", *limit, "sieve limit N", true);
    cmd->callback([&, bag, limit] {
      handler = [&, bag, limit] { return cmd_sieve(common, *bag, *limit); };
    });
  }

  // ---- realize --------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("realize", "generate and cache a realization");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0;
      std::string kind = "steinhaus";
      std::string out_cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("kind", a->kind, "steinhaus | rademacher");
    bag->add("out-cache", a->out_cache, "cache file path");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        std::filesystem::path path = a->out_cache;
        if (a->out_cache.empty())
          path = cache_dir() / (a->kind + "_" + std::to_string(a->seed) + "_" +
                                std::to_string(a->limit) + ".rmf");
        std::size_t count = 0;
        if (a->kind == "steinhaus") {
          auto r = rmf::SteinhausRealization::realize(a->seed, a->limit, t);
          rmf::save_cache(r, path);
          count = r.prime_count();
        } else if (a->kind == "rademacher") {
          auto r = rmf::RademacherRealization::realize(a->seed, a->limit, t);
          rmf::save_cache(r, path);
          count = r.primes().size();
        } else {
          throw std::invalid_argument("kind must be steinhaus or rademacher");
        }
        rmf::CsvWriter csv(rc.hash(), {"seed", "limit", "prime_count", "path"});
        csv.row({std::to_string(a->seed), std::to_string(a->limit),
                 std::to_string(count), path.string()});
        write_output(csv.str(), common.out);
        return 0;
      };
    });
  }

  // ---- msum -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("msum", "weighted sum M_f(x), optionally smooth");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0;
      double x = 0, y = std::numeric_limits<double>::infinity();
      std::string cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("cache", a->cache, "realization cache file");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("x", a->x, "upper end of the sum", true);
    bag->add("y", a->y, "smoothness bound (default: unrestricted)");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        auto r = obtain_realization(a->seed, a->cache, a->limit, t);
        rmf::cplx v = rmf::m_smooth(r, a->x, a->y, t);
        rmf::CsvWriter csv(rc.hash(), {"x", "y", "re", "im"});
        csv.row({g17(a->x), g17(a->y), g17(v.real()), g17(v.imag())});
        write_output(csv.str(), common.out);
        return 0;
      };
    });
  }

  // ---- decompose ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "decompose", "multi-scale decomposition of M_f at a test value");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0, x = 0, l = 0;
      double c = 0.5, alpha = 0.0;
      u64 q = 3;
      std::string cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("cache", a->cache, "realization cache file");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("x", a->x, "decomposition point", true);
    bag->add("l", a->l, "scale index (default: enclosing scale of x)");
    bag->add("c", a->c, "test-point exponent");
    bag->add("q", a->q, "moment order");
    bag->add("alpha", a->alpha, "smoothness step (default 1/q)");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        if (a->alpha == 0.0) {  // default follows the effective q
          a->alpha = 1.0 / double(a->q);
          rc.set("alpha", a->alpha);
        }
        rmf::ScheduleParams params;
        params.c = a->c;
        params.q = u32(a->q);
        params.alpha = a->alpha;
        auto t = rmf::build_spf(a->limit);
        auto r = obtain_realization(a->seed, a->cache, a->limit, t);
        u64 l = a->l ? a->l : rmf::enclosing_scale(double(a->x));
        auto d = rmf::decompose_at(r, a->x, l, params, t);
        rmf::cplx mf = rmf::m_weighted(r, double(a->x), t);
        rmf::CsvWriter csv(rc.hash(), {"block", "re", "im", "terms"});
        csv.row({"S0", g17(d.s0.real()), g17(d.s0.imag()),
                 std::to_string(d.terms_per_block[0])});
        for (u64 j = 1; j <= d.big_j; ++j)
          csv.row({"S" + std::to_string(j), g17(d.s[j - 1].real()),
                   g17(d.s[j - 1].imag()),
                   std::to_string(d.terms_per_block[j])});
        u64 total = 0;
        for (u64 n : d.terms_per_block) total += n;
        csv.row({"reconstruction", g17(d.reconstruction.real()),
                 g17(d.reconstruction.imag()), std::to_string(total)});
        csv.row({"m_weighted", g17(mf.real()), g17(mf.imag()),
                 std::to_string(a->x)});
        double rel = std::abs(d.reconstruction - mf) /
                     std::max(1.0, std::abs(mf));
        csv.row({"rel_err", g17(rel), "0", "0"});
        write_output(csv.str(), common.out);
        return rel <= 1e-9 ? 0 : 2;
      };
    });
  }

  // ---- euler ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("euler", "random Euler product F_y(s)");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0;
      double y = 0, sigma = 0.5, t_im = 0.0;
      std::string cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("cache", a->cache, "realization cache file");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("y", a->y, "product truncation", true);
    bag->add("sigma", a->sigma, "Re s (must be > 0)");
    bag->add("t", a->t_im, "Im s");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        auto r = obtain_realization(a->seed, a->cache, a->limit, t);
        auto e = rmf::euler_product(r, a->y, {a->sigma, a->t_im});
        rmf::CsvWriter csv(rc.hash(),
                           {"y", "sigma", "t", "re", "im", "log_re", "log_im"});
        csv.row({g17(a->y), g17(a->sigma), g17(a->t_im), g17(e.value.real()),
                 g17(e.value.imag()), g17(e.log_value.real()),
                 g17(e.log_value.imag())});
        write_output(csv.str(), common.out);
        return 0;
      };
    });
  }

  // ---- walk -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("walk", "prime walk and its variance");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0;
      double x = 0;
      std::string cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("cache", a->cache, "realization cache file");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("x", a->x, "walk endpoint", true);
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        auto r = obtain_realization(a->seed, a->cache, a->limit, t);
        double w = rmf::prime_walk(r, a->x, t);
        double v = rmf::walk_variance(a->x, t);
        rmf::CsvWriter csv(rc.hash(), {"x", "walk", "variance"});
        csv.row({g17(a->x), g17(w), g17(v)});
        write_output(csv.str(), common.out);
        return 0;
      };
    });
  }

  // ---- plancherel-check -----------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "plancherel-check", "closed form vs quadrature for random polynomials");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, terms = 50, count = 1;
      double sigma = 0.1, tol = 1e-5;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "polynomial seed");
    bag->add("terms", a->terms, "polynomial support size");
    bag->add("count", a->count, "number of polynomials");
    bag->add("sigma", a->sigma, "integration exponent (> 0)");
    bag->add("tol", a->tol, "quadrature tolerance");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        rmf::CsvWriter csv(rc.hash(), {"index", "lhs", "rhs", "abs_diff"});
        bool ok = true;
        for (u64 i = 0; i < a->count; ++i) {
          rmf::DirichletPolynomial poly(a->terms);
          for (u64 n = 1; n <= a->terms; ++n)
            poly[n] = disc_coefficient(a->seed + i, n);
          double lhs = rmf::plancherel_lhs_exact(poly, a->sigma);
          double rhs = rmf::plancherel_rhs_quadrature(poly, a->sigma, a->tol);
          double diff = std::abs(lhs - rhs);
          csv.row({std::to_string(i), g17(lhs), g17(rhs), g17(diff)});
          if (diff > std::max(a->tol, 1e-9)) ok = false;
        }
        write_output(csv.str(), common.out);
        return ok ? 0 : 2;
      };
    });
  }

  // ---- moment-check ---------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "moment-check", "exact 2l-th moments against the divisor bound");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, support = 10, count = 10, l = 2, limit = 1000;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "coefficient seed");
    bag->add("support", a->support, "coefficient support size (<= 14)");
    bag->add("count", a->count, "number of random coefficient vectors");
    bag->add("l", a->l, "moment order l in 1..3");
    bag->add("limit", a->limit, "sieve limit for tau_l");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::CsvWriter csv(rc.hash(), {"index", "l", "exact", "bound", "ok"});
        bool all_ok = true;
        for (u64 i = 0; i < a->count; ++i) {
          auto keys = random_support(a->seed + i, a->support, 100);
          rmf::CoeffMap coeffs;
          for (std::size_t k = 0; k < keys.size(); ++k)
            coeffs.push_back({keys[k], disc_coefficient(a->seed + i, k)});
          auto m = rmf::moment_exact(coeffs, u32(a->l), t);
          bool ok = m.exact <= m.bound * (1.0 + 1e-12);
          all_ok = all_ok && ok;
          csv.row({std::to_string(i), std::to_string(a->l), g17(m.exact),
                   g17(m.bound), ok ? "1" : "0"});
        }
        write_output(csv.str(), common.out);
        return all_ok ? 0 : 2;
      };
    });
  }

  // ---- window-moment --------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "window-moment", "fourth moment of an unweighted window sum");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 u = 0, v = 0, limit = 0, seed_start = 1, count = 0;
    };
    auto a = std::make_shared<Args>();
    bag->add("u", a->u, "window start (exclusive)", true);
    bag->add("v", a->v, "window end (inclusive)", true);
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("seed-start", a->seed_start, "first Monte Carlo seed");
    bag->add("count", a->count, "Monte Carlo seeds (0 = exact only)");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        auto m = rmf::fourth_moment_window(a->u, a->v, t);
        double mc_mean = 0.0, mc_se = 0.0, z = 0.0;
        if (a->count > 0) {
          rmf::EnsembleConfig cfg;
          cfg.seed_start = a->seed_start;
          cfg.count = a->count;
          cfg.workers = common.workers;
          auto rep = rmf::make_report(
              rmf::ensemble_fourth_moment(t, cfg, a->u, a->v), rc.hash());
          mc_mean = rep.mean;
          mc_se = rep.se_mean;
          z = mc_se > 0 ? (mc_mean - m.exact) / mc_se : 0.0;
        }
        rmf::CsvWriter csv(rc.hash(), {"u", "v", "exact", "bound", "mc_mean",
                                       "mc_se", "z"});
        csv.row({std::to_string(a->u), std::to_string(a->v), g17(m.exact),
                 g17(m.bound), g17(mc_mean), g17(mc_se), g17(z)});
        write_output(csv.str(), common.out);
        bool ok = m.exact <= m.bound * (1.0 + 1e-12) &&
                  (a->count == 0 || std::abs(z) <= 3.0);
        return ok ? 0 : 2;
      };
    });
  }

  // ---- rankin-check ---------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "rankin-check", "smooth harmonic tail against the Rankin bound");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 1000;
      std::string x_grid = "10,100,1000";
      std::string y_grid = "2,5,10";
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit");
    bag->add("x-grid", a->x_grid, "comma-separated x values");
    bag->add("y-grid", a->y_grid, "comma-separated y values");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::CsvWriter csv(rc.hash(),
                           {"x", "y", "exact_tail", "rankin_bound", "ok"});
        bool all_ok = true;
        for (double x : parse_grid(a->x_grid))
          for (double y : parse_grid(a->y_grid)) {
            auto r = rmf::rankin_tail(x, y, t);
            bool ok = r.rankin_bound >= r.exact_tail;
            all_ok = all_ok && ok;
            csv.row({g17(x), g17(y), g17(r.exact_tail), g17(r.rankin_bound),
                     ok ? "1" : "0"});
          }
        write_output(csv.str(), common.out);
        return all_ok ? 0 : 2;
      };
    });
  }

  // ---- levy-check -----------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "levy-check", "maximal inequality for the prime walk");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 0, seed_start = 1, count = 1000;
      double threshold = 1.0, primes_below = 0.0;
      std::string points;
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("points", a->points, "comma-separated walk checkpoints");
    bag->add("primes-below", a->primes_below,
             "use every prime <= this value as a checkpoint");
    bag->add("threshold", a->threshold, "exceedance threshold");
    bag->add("seed-start", a->seed_start, "first seed");
    bag->add("count", a->count, "ensemble size");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        std::vector<double> pts;
        if (!a->points.empty()) pts = parse_grid(a->points);
        if (a->primes_below > 0.0)
          for (u32 p : t.primes_in(0.0, a->primes_below))
            pts.push_back(double(p));
        if (pts.empty())
          throw std::invalid_argument("levy-check: need --points or --primes-below");
        std::sort(pts.begin(), pts.end());
        rmf::EnsembleConfig cfg;
        cfg.seed_start = a->seed_start;
        cfg.count = a->count;
        cfg.workers = common.workers;
        auto rep = rmf::levy_check(t, cfg, pts, a->threshold);
        rmf::CsvWriter csv(rc.hash(), {"threshold", "p_max", "p_end_doubled",
                                       "se_diff", "violation"});
        csv.row({g17(a->threshold), g17(rep.p_max), g17(rep.p_end_doubled),
                 g17(rep.se_diff), rep.violation ? "1" : "0"});
        write_output(csv.str(), common.out);
        return rep.violation ? 2 : 0;
      };
    });
  }

  // ---- ueb-check ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "ueb-check", "upper exponential bound for the prime walk");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 0, seed_start = 1, count = 1000;
      double x = 0, level = 0.25;
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("x", a->x, "walk endpoint", true);
    bag->add("level", a->level, "threshold in units of the walk sd");
    bag->add("seed-start", a->seed_start, "first seed");
    bag->add("count", a->count, "ensemble size");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::EnsembleConfig cfg;
        cfg.seed_start = a->seed_start;
        cfg.count = a->count;
        cfg.workers = common.workers;
        auto rep = rmf::ueb_check(t, cfg, a->x, a->level);
        rmf::CsvWriter csv(rc.hash(),
                           {"x", "level", "empirical", "bound", "s", "se",
                            "violation"});
        csv.row({g17(a->x), g17(a->level), g17(rep.empirical), g17(rep.bound),
                 g17(rep.s), g17(rep.se), rep.violation ? "1" : "0"});
        write_output(csv.str(), common.out);
        return rep.violation ? 2 : 0;
      };
    });
  }

  // ---- berry-esseen ---------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "berry-esseen", "normality of the sin-weighted prime statistic");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 0, seed_start = 1, count = 1000;
      double lo = 0, hi = 0;
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("lo", a->lo, "range start (exclusive)", true);
    bag->add("hi", a->hi, "range end (inclusive)", true);
    bag->add("seed-start", a->seed_start, "first seed");
    bag->add("count", a->count, "ensemble size (>= 1000)");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::EnsembleConfig cfg;
        cfg.seed_start = a->seed_start;
        cfg.count = a->count;
        cfg.workers = common.workers;
        cfg.retain = !common.json_path.empty();
        auto rep = rmf::berry_esseen_gap(t, cfg, a->lo, a->hi);
        rmf::CsvWriter csv(rc.hash(),
                           {"lo", "hi", "ks_distance", "be_bound_shape",
                            "beta3", "s", "sample_mean", "sample_variance"});
        csv.row({g17(a->lo), g17(a->hi), g17(rep.ks_distance),
                 g17(rep.be_bound_shape), g17(rep.beta3), g17(rep.s),
                 g17(rep.sample_mean), g17(rep.sample_variance)});
        write_output(csv.str(), common.out);
        if (!common.json_path.empty() && rep.values) {
          std::vector<double> std_vals;
          for (double v : *rep.values) std_vals.push_back(v / rep.s);
          auto er = rmf::make_report(std_vals, rc.hash(), false);
          json j;
          j["config_hash"] = rmf::hash_hex(rc.hash());
          j["ks_distance"] = rep.ks_distance;
          j["be_bound_shape"] = rep.be_bound_shape;
          j["cdf_grid"] = er.cdf_grid;
          j["cdf"] = er.cdf;
          emit_json(j, common.json_path);
        }
        return 0;
      };
    });
  }

  // ---- lower-bound ----------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "lower-bound", "average vs maximum of |M_f|^2 over a scale range");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 0, seed_start = 1, count = 1;
      double lo = 0, hi = 0;
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("lo", a->lo, "range start T_{k-1}", true);
    bag->add("hi", a->hi, "range end T_k", true);
    bag->add("seed-start", a->seed_start, "first seed");
    bag->add("count", a->count, "ensemble size");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::EnsembleConfig cfg;
        cfg.seed_start = a->seed_start;
        cfg.count = a->count;
        cfg.workers = common.workers;
        auto results = rmf::lower_bound_ensemble(t, cfg, a->lo, a->hi);
        rmf::CsvWriter csv(rc.hash(),
                           {"seed", "avg", "max_sq", "euler_lb", "ok"});
        bool all_ok = true;
        for (u64 i = 0; i < results.size(); ++i) {
          bool ok = results[i].max_sq >= results[i].avg;
          all_ok = all_ok && ok;
          csv.row({std::to_string(a->seed_start + i), g17(results[i].avg),
                   g17(results[i].max_sq), g17(results[i].euler_lb),
                   ok ? "1" : "0"});
        }
        write_output(csv.str(), common.out);
        return all_ok ? 0 : 2;
      };
    });
  }

  // ---- lil-ensemble ---------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "lil-ensemble", "normalized walk distributions along a grid");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 limit = 0, seed_start = 1, count = 1000;
      std::string grid;
      double corr_x = 0.0;
    };
    auto a = std::make_shared<Args>();
    bag->add("limit", a->limit, "sieve limit", true);
    bag->add("grid", a->grid, "comma-separated grid of x values", true);
    bag->add("corr-x", a->corr_x,
             "also correlate log|M_f| with the walk at this x (0 = skip)");
    bag->add("seed-start", a->seed_start, "first seed");
    bag->add("count", a->count, "ensemble size");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        auto t = rmf::build_spf(a->limit);
        rmf::EnsembleConfig cfg;
        cfg.seed_start = a->seed_start;
        cfg.count = a->count;
        cfg.workers = common.workers;
        cfg.retain = !common.json_path.empty();
        auto grid = parse_grid(a->grid);
        auto rep = rmf::lil_ensemble(t, cfg, grid, a->corr_x);
        rmf::CsvWriter csv(rc.hash(), {"x", "exact_sd", "mean_norm",
                                       "var_norm", "ks"});
        for (const auto& st : rep.grid)
          csv.row({g17(st.x), g17(st.exact_sd), g17(st.mean_norm),
                   g17(st.var_norm), g17(st.ks)});
        csv.row({"run_max_mean", g17(rep.run_max_mean), "0", "0", "0"});
        if (a->corr_x > 0.0)
          csv.row({"correlation", g17(rep.corr), g17(rep.corr_fisher_z),
                   g17(rep.corr_se), "0"});
        write_output(csv.str(), common.out);
        if (!common.json_path.empty()) {
          json j;
          j["config_hash"] = rmf::hash_hex(rc.hash());
          json grid_j = json::array();
          for (std::size_t g = 0; g < rep.grid.size(); ++g) {
            json one;
            one["x"] = rep.grid[g].x;
            one["exact_sd"] = rep.grid[g].exact_sd;
            one["mean_norm"] = rep.grid[g].mean_norm;
            one["var_norm"] = rep.grid[g].var_norm;
            one["ks"] = rep.grid[g].ks;
            if (rep.walk_values) {
              std::vector<double> norm((*rep.walk_values)[g]);
              for (double& v : norm) v /= rep.grid[g].exact_sd;
              auto er = rmf::make_report(norm, rc.hash(), false);
              one["cdf_grid"] = er.cdf_grid;
              one["cdf"] = er.cdf;
            }
            grid_j.push_back(one);
          }
          j["grid"] = grid_j;
          j["run_max_mean"] = rep.run_max_mean;
          if (a->corr_x > 0.0) {
            j["correlation"] = rep.corr;
            j["corr_fisher_z"] = rep.corr_fisher_z;
            j["corr_se"] = rep.corr_se;
          }
          emit_json(j, common.json_path);
        }
        return 0;
      };
    });
  }

  // ---- fluctuation ----------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "fluctuation", "maximal |M_f(x) - M_f(x_{i-1})| between test points");
    auto bag = std::make_shared<OptBag>(cmd, common);
    struct Args {
      u64 seed = 1, limit = 0, i = 2;
      double c = 0.5;
      std::string cache;
    };
    auto a = std::make_shared<Args>();
    bag->add("seed", a->seed, "realization seed");
    bag->add("cache", a->cache, "realization cache file");
    bag->add("limit", a->limit, "realization limit N", true);
    bag->add("i", a->i, "test-point index (>= 2)");
    bag->add("c", a->c, "test-point exponent");
    cmd->callback([&, bag, a] {
      handler = [&, bag, a] {
        auto rc = bag->finalize();
        rmf::ScheduleParams params;
        params.c = a->c;
        auto t = rmf::build_spf(a->limit);
        auto r = obtain_realization(a->seed, a->cache, a->limit, t);
        double m = rmf::max_fluctuation(r, a->i, params, t);
        u64 x_prev = rmf::test_point(params, a->i - 1);
        u64 x_cur = rmf::test_point(params, a->i);
        rmf::KahanSum bound;
        for (u64 n = x_prev + 1; n <= x_cur; ++n)
          bound.add(1.0 / std::sqrt(double(n)));
        rmf::CsvWriter csv(rc.hash(), {"i", "x_prev", "x_cur", "max_fluct",
                                       "triangle_bound"});
        csv.row({std::to_string(a->i), std::to_string(x_prev),
                 std::to_string(x_cur), g17(m), g17(bound.value())});
        write_output(csv.str(), common.out);
        return 0;
      };
    });
  }

  // Preload config-file values so that flags override them at finalize time.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      common.file_values = rmf::RunConfig::parse_file(argv[i + 1]);
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  }

  try {
    return handler ? handler() : 1;
  } catch (const rmf::resource_limit_error& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const rmf::convergence_error& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const rmf::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
