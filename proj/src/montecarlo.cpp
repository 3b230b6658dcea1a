#include "hkde/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace hkde {

int default_thread_count() {
  if (const char* env = std::getenv("HKDE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> MonitoringSchedule::dates() const {
  if (!(maturity > 0.0)) throw std::invalid_argument("schedule: maturity must be positive");
  if (intervals < 1) throw std::invalid_argument("schedule: need at least one interval");
  const double step =
      spacing == DateSpacing::uniform_t_over_m ? maturity / intervals : maturity / (intervals + 1);
  std::vector<double> t(intervals + 1);
  for (int m = 0; m <= intervals; ++m) t[m] = m * step;
  if (spacing == DateSpacing::uniform_t_over_m) t.back() = maturity;
  return t;
}

namespace {

constexpr std::string_view kKindNames[] = {
    "asian_call",  "asian_put",  "variance_swap",  "variance_call", "cliquet",
    "barrier_uo",  "barrier_do", "barrier_double", "european_call", "european_put",
};

}  // namespace

std::string_view exotic_kind_name(ExoticKind kind) { return kKindNames[static_cast<int>(kind)]; }

ExoticKind parse_exotic_kind(std::string_view name) {
  for (int k = 0; k < int(std::size(kKindNames)); ++k)
    if (kKindNames[k] == name) return static_cast<ExoticKind>(k);
  throw std::invalid_argument("unknown contract kind: " + std::string(name));
}

void ExoticSpec::validate(double spot) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("contract: ") + what);
  };
  require(schedule.maturity > 0.0, "maturity must be positive");
  require(schedule.intervals >= 1, "monitoring count must be >= 1");
  switch (kind) {
    case ExoticKind::asian_call:
    case ExoticKind::asian_put:
      require(strike >= 0.0, "strike must be non-negative");
      break;
    case ExoticKind::variance_swap:
    case ExoticKind::variance_call:
      break;
    case ExoticKind::cliquet:
      require(cap > floor, "cap must exceed floor");
      require(global_cap >= global_floor, "global cap must not be below global floor");
      break;
    case ExoticKind::barrier_uo:
      require(barrier_up > spot, "up barrier must lie above spot");
      require(strike > 0.0, "strike must be positive");
      break;
    case ExoticKind::barrier_do:
      require(barrier_down < spot && barrier_down > 0.0, "down barrier must lie in (0, spot)");
      require(strike > 0.0, "strike must be positive");
      break;
    case ExoticKind::barrier_double:
      require(barrier_up > spot, "up barrier must lie above spot");
      require(barrier_down < spot && barrier_down > 0.0, "down barrier must lie in (0, spot)");
      require(strike > 0.0, "strike must be positive");
      break;
    case ExoticKind::european_call:
    case ExoticKind::european_put:
      require(strike > 0.0, "strike must be positive");
      break;
  }
}

double discounted_payoff(const ExoticSpec& spec, const MarketContext& ctx,
                         const double* log_spot) {
  const int m_count = spec.schedule.intervals;
  const double t_end = spec.schedule.maturity;
  double payoff = 0.0;
  switch (spec.kind) {
    case ExoticKind::asian_call:
    case ExoticKind::asian_put: {
      double avg = 0.0;
      for (int m = 0; m <= m_count; ++m) avg += std::exp(log_spot[m]);
      avg /= (m_count + 1);
      payoff = spec.kind == ExoticKind::asian_call ? std::max(avg - spec.strike, 0.0)
                                                   : std::max(spec.strike - avg, 0.0);
      break;
    }
    case ExoticKind::variance_swap: {
      double acc = 0.0;
      for (int m = 1; m <= m_count; ++m) {
        const double r = log_spot[m] - log_spot[m - 1];
        acc += r * r;
      }
      payoff = acc / t_end - spec.strike;
      break;
    }
    case ExoticKind::variance_call: {
      double acc = 0.0;
      for (int m = 1; m <= m_count; ++m) {
        const double r = std::expm1(log_spot[m] - log_spot[m - 1]);
        acc += r * r;
      }
      payoff = std::max(acc / t_end - spec.strike, 0.0);
      break;
    }
    case ExoticKind::cliquet: {
      double acc = 0.0;
      for (int m = 1; m <= m_count; ++m)
        acc += std::clamp(std::expm1(log_spot[m] - log_spot[m - 1]), spec.floor, spec.cap);
      payoff = spec.strike * std::min(spec.global_cap, std::max(spec.global_floor, acc));
      break;
    }
    case ExoticKind::barrier_uo:
    case ExoticKind::barrier_do:
    case ExoticKind::barrier_double: {
      const bool up = spec.kind != ExoticKind::barrier_do;
      const bool down = spec.kind != ExoticKind::barrier_uo;
      const double log_up = up ? std::log(spec.barrier_up) : 0.0;
      const double log_down = down ? std::log(spec.barrier_down) : 0.0;
      for (int m = 1; m <= m_count; ++m) {
        if (up && log_spot[m] > log_up) return 0.0;
        if (down && log_spot[m] < log_down) return 0.0;
      }
      const double s_end = std::exp(log_spot[m_count]);
      payoff = spec.barrier_is_call ? std::max(s_end - spec.strike, 0.0)
                                    : std::max(spec.strike - s_end, 0.0);
      break;
    }
    case ExoticKind::european_call:
      payoff = std::max(std::exp(log_spot[m_count]) - spec.strike, 0.0);
      break;
    case ExoticKind::european_put:
      payoff = std::max(spec.strike - std::exp(log_spot[m_count]), 0.0);
      break;
  }
  return std::exp(-ctx.rate * t_end) * payoff;
}

double sample_kou_jump(Philox4x32& rng, const KouJumpParams& jumps) {
  const double side = rng.uniform();
  const double e = -std::log(rng.uniform());
  return side < jumps.p ? e / jumps.eta1 : -e / jumps.eta2;
}

namespace {

using Normal = boost::random::normal_distribution<double>;
using Gamma = boost::random::gamma_distribution<double>;

enum class JumpKind { none, kou, lognormal };

struct Interval {
  double dt = 0.0;        // Euler substep (or whole interval for BGM)
  int substeps = 1;
  double sqrt_dt = 0.0;
  double no_jump = 1.0;   // exp(-lam dt)
  double lam_dt = 0.0;
};

// Draws paths of ln S at fixed observation dates, one antithetic pair or one
// plain path at a time.
class PathEngine {
 public:
  PathEngine(const ModelParams& model, const MarketContext& ctx, const std::vector<double>& dates,
             std::optional<int> steps_per_interval, double steps_per_year = 250.0)
      : x0_(std::log(ctx.spot)), n_obs_(int(dates.size())) {
    validate(model);
    validate(ctx);
    if (dates.size() < 2 || dates.front() != 0.0)
      throw std::invalid_argument("observation dates must start at 0 and contain a later date");
    if (steps_per_interval && *steps_per_interval < 1)
      throw std::invalid_argument("steps_per_interval must be >= 1");
    if (!(steps_per_year > 0.0)) throw std::invalid_argument("steps_per_year must be positive");
    const double carry = ctx.rate - ctx.div_yield;

    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BGMParams>) {
            levy_ = true;
            bgm_ = p;
            drift_ = carry - p.sigma * p.sigma / 2.0 + p.alpha_p * std::log1p(-1.0 / p.lam_p) +
                     p.alpha_m * std::log1p(1.0 / p.lam_m);
          } else if constexpr (std::is_same_v<T, HestonParams>) {
            heston_ = p;
            drift_ = carry;
          } else if constexpr (std::is_same_v<T, HKDEParams>) {
            heston_ = p.heston;
            kou_ = p.jumps;
            jump_kind_ = p.jumps.lam > 0.0 ? JumpKind::kou : JumpKind::none;
            lam_ = p.jumps.lam;
            drift_ = carry + omega_kde(p.jumps);
          } else {
            heston_ = p.heston;
            lam_ = p.lam;
            mu_j_ = p.mu_j;
            sigma_j_ = p.sigma_j;
            jump_kind_ = p.lam > 0.0 ? JumpKind::lognormal : JumpKind::none;
            drift_ = carry - p.lam * std::expm1(p.mu_j + p.sigma_j * p.sigma_j / 2.0);
          }
        },
        model);

    for (std::size_t i = 1; i < dates.size(); ++i) {
      const double span = dates[i] - dates[i - 1];
      if (!(span > 0.0)) throw std::invalid_argument("observation dates must increase strictly");
      Interval iv;
      iv.substeps = levy_ ? 1
                          : steps_per_interval.value_or(
                                std::max(1, int(std::ceil(span * steps_per_year - 1e-9))));
      iv.dt = span / iv.substeps;
      iv.sqrt_dt = std::sqrt(iv.dt);
      iv.lam_dt = lam_ * iv.dt;
      iv.no_jump = std::exp(-iv.lam_dt);
      intervals_.push_back(iv);
      if (levy_) {
        gamma_p_.emplace_back(bgm_.alpha_p * span, 1.0 / bgm_.lam_p);
        gamma_m_.emplace_back(bgm_.alpha_m * span, 1.0 / bgm_.lam_m);
      }
    }
  }

  int observations() const { return n_obs_; }

  // Fills n_obs values of ln S (and variance) for path a, and for its
  // antithetic partner b when b is non-null.
  void simulate(Philox4x32& rng, Normal& normal, double* xa, double* va, double* xb,
                double* vb) {
    if (levy_) {
      simulate_levy(rng, normal, xa, va, xb, vb);
      return;
    }
    const double kappa = heston_.kappa, theta = heston_.theta, sigma = heston_.sigma_v;
    const double rho = heston_.rho, rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    double x_a = x0_, x_b = x0_, v_a = heston_.v0, v_b = heston_.v0;
    xa[0] = x_a;
    va[0] = v_a;
    if (xb) {
      xb[0] = x_b;
      vb[0] = v_b;
    }
    for (int i = 0; i < n_obs_ - 1; ++i) {
      const Interval& iv = intervals_[i];
      for (int s = 0; s < iv.substeps; ++s) {
        const double z2 = normal(rng);
        const double z1 = rho * z2 + rho_bar * normal(rng);
        const double jump = draw_jumps(rng, normal, iv);
        {
          const double vp = std::max(v_a, 0.0);
          const double root = std::sqrt(vp) * iv.sqrt_dt;
          x_a += (drift_ - 0.5 * vp) * iv.dt + root * z1 + jump;
          v_a += kappa * (theta - vp) * iv.dt + sigma * root * z2;
        }
        if (xb) {
          const double vp = std::max(v_b, 0.0);
          const double root = std::sqrt(vp) * iv.sqrt_dt;
          x_b += (drift_ - 0.5 * vp) * iv.dt - root * z1 + jump;
          v_b += kappa * (theta - vp) * iv.dt - sigma * root * z2;
        }
      }
      xa[i + 1] = x_a;
      va[i + 1] = std::max(v_a, 0.0);
      if (xb) {
        xb[i + 1] = x_b;
        vb[i + 1] = std::max(v_b, 0.0);
      }
    }
  }

 private:
  int poisson(Philox4x32& rng, const Interval& iv) {
    const double u = rng.uniform();
    double prob = iv.no_jump, cdf = prob;
    int k = 0;
    while (u > cdf && k < 10000) {
      ++k;
      prob *= iv.lam_dt / k;
      cdf += prob;
      if (prob == 0.0) break;
    }
    return k;
  }

  double draw_jumps(Philox4x32& rng, Normal& normal, const Interval& iv) {
    if (jump_kind_ == JumpKind::none) return 0.0;
    const int count = poisson(rng, iv);
    if (count == 0) return 0.0;
    if (jump_kind_ == JumpKind::lognormal)
      return count * mu_j_ + sigma_j_ * std::sqrt(double(count)) * normal(rng);
    double total = 0.0;
    for (int k = 0; k < count; ++k) total += sample_kou_jump(rng, kou_);
    return total;
  }

  void simulate_levy(Philox4x32& rng, Normal& normal, double* xa, double* va, double* xb,
                     double* vb) {
    double x_a = x0_, x_b = x0_;
    xa[0] = x_a;
    va[0] = 0.0;
    if (xb) {
      xb[0] = x_b;
      vb[0] = 0.0;
    }
    for (int i = 0; i < n_obs_ - 1; ++i) {
      const Interval& iv = intervals_[i];
      const double diff = bgm_.sigma * iv.sqrt_dt * normal(rng);
      const double jumps = gamma_p_[i](rng) - gamma_m_[i](rng);
      x_a += drift_ * iv.dt + diff + jumps;
      xa[i + 1] = x_a;
      va[i + 1] = 0.0;
      if (xb) {
        x_b += drift_ * iv.dt - diff + jumps;
        xb[i + 1] = x_b;
        vb[i + 1] = 0.0;
      }
    }
  }

  double x0_;
  int n_obs_;
  bool levy_ = false;
  double drift_ = 0.0;
  HestonParams heston_{};
  JumpKind jump_kind_ = JumpKind::none;
  KouJumpParams kou_{};
  double lam_ = 0.0, mu_j_ = 0.0, sigma_j_ = 0.0;
  BGMParams bgm_{};
  std::vector<Interval> intervals_;
  std::vector<Gamma> gamma_p_, gamma_m_;
};

struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.n == 0) return;
    const std::int64_t total = n + o.n;
    const double d = o.mean - mean;
    mean += d * double(o.n) / double(total);
    m2 += o.m2 + d * d * double(n) * double(o.n) / double(total);
    n = total;
  }
};

struct WorkUnits {
  std::int64_t units;  // pairs or single paths
  int workers;
};

WorkUnits plan_work(const SimConfig& config) {
  if (config.n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  if (config.antithetic && config.n_paths % 2 != 0)
    throw std::invalid_argument("n_paths must be even with antithetic sampling");
  const std::int64_t units = config.antithetic ? config.n_paths / 2 : config.n_paths;
  const int workers = int(std::min<std::int64_t>(
      units, config.threads > 0 ? config.threads : default_thread_count()));
  return {units, std::max(1, workers)};
}

std::pair<std::int64_t, std::int64_t> worker_range(std::int64_t units, int workers, int w) {
  const std::int64_t base = units / workers, extra = units % workers;
  const std::int64_t begin = w * base + std::min<std::int64_t>(w, extra);
  return {begin, begin + base + (w < extra ? 1 : 0)};
}

template <typename Fn>
void run_workers(int workers, const Fn& fn) {
  if (workers == 1) {
    fn(0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(fn, w);
  for (auto& t : pool) t.join();
}

// Streams paths through `evaluate(log_spot, out)`, which writes n_out
// discounted payoffs; antithetic pairs contribute the mean of both paths.
using Evaluator = std::function<void(const double*, double*)>;

std::vector<Welford> stream_paths(const ModelParams& model, const MarketContext& ctx,
                                  const std::vector<double>& dates, const SimConfig& config,
                                  int n_out, const Evaluator& evaluate) {
  const WorkUnits plan = plan_work(config);
  const PathEngine prototype(model, ctx, dates, config.steps_per_interval, config.steps_per_year);
  std::vector<std::vector<Welford>> partial(plan.workers, std::vector<Welford>(n_out));

  run_workers(plan.workers, [&](int w) {
    PathEngine engine = prototype;
    Philox4x32 rng(config.seed, std::uint64_t(w));
    Normal normal;
    const int n_obs = engine.observations();
    std::vector<double> xa(n_obs), va(n_obs), xb(n_obs), vb(n_obs);
    std::vector<double> pa(n_out), pb(n_out);
    auto& acc = partial[w];
    const auto [begin, end] = worker_range(plan.units, plan.workers, w);
    for (std::int64_t u = begin; u < end; ++u) {
      if (config.antithetic) {
        engine.simulate(rng, normal, xa.data(), va.data(), xb.data(), vb.data());
        evaluate(xa.data(), pa.data());
        evaluate(xb.data(), pb.data());
        for (int k = 0; k < n_out; ++k) acc[k].add(0.5 * (pa[k] + pb[k]));
      } else {
        engine.simulate(rng, normal, xa.data(), va.data(), nullptr, nullptr);
        evaluate(xa.data(), pa.data());
        for (int k = 0; k < n_out; ++k) acc[k].add(pa[k]);
      }
    }
  });

  std::vector<Welford> total(n_out);
  for (const auto& worker : partial)
    for (int k = 0; k < n_out; ++k) total[k].merge(worker[k]);
  return total;
}

McEstimate to_estimate(const Welford& w, std::int64_t n_paths) {
  McEstimate e;
  e.price = w.mean;
  e.std_err = w.n > 1 ? std::sqrt(std::max(0.0, w.m2 / double(w.n - 1)) / double(w.n)) : 0.0;
  e.ci95_half_width = 1.96 * e.std_err;
  e.n_paths = n_paths;
  return e;
}

}  // namespace

PathBatch simulate_paths(const ModelParams& model, const MarketContext& ctx,
                         const MonitoringSchedule& schedule, const SimConfig& config) {
  const WorkUnits plan = plan_work(config);
  PathBatch batch;
  batch.dates = schedule.dates();
  const int n_obs = int(batch.dates.size());
  const PathEngine prototype(model, ctx, batch.dates, config.steps_per_interval, config.steps_per_year);
  // Row-major scratch keeps each path contiguous; copied into the batch at the end.
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMatrix x(config.n_paths, n_obs), v(config.n_paths, n_obs);

  run_workers(plan.workers, [&](int w) {
    PathEngine engine = prototype;
    Philox4x32 rng(config.seed, std::uint64_t(w));
    Normal normal;
    const auto [begin, end] = worker_range(plan.units, plan.workers, w);
    for (std::int64_t u = begin; u < end; ++u) {
      if (config.antithetic) {
        engine.simulate(rng, normal, x.row(2 * u).data(), v.row(2 * u).data(),
                        x.row(2 * u + 1).data(), v.row(2 * u + 1).data());
      } else {
        engine.simulate(rng, normal, x.row(u).data(), v.row(u).data(), nullptr, nullptr);
      }
    }
  });
  batch.log_spot = x;
  batch.variance = v;
  return batch;
}

std::vector<McEstimate> price_exotics(const ModelParams& model, const MarketContext& ctx,
                                      const std::vector<ExoticSpec>& specs,
                                      const SimConfig& config) {
  if (specs.empty()) return {};
  const std::vector<double> dates = specs.front().schedule.dates();
  for (const auto& spec : specs) {
    spec.validate(ctx.spot);
    if (spec.schedule.dates() != dates)
      throw std::invalid_argument("price_exotics: contracts must share one monitoring schedule");
  }
  const int n_out = int(specs.size());
  const auto acc = stream_paths(model, ctx, dates, config, n_out,
                                [&](const double* x, double* out) {
                                  for (int k = 0; k < n_out; ++k)
                                    out[k] = discounted_payoff(specs[k], ctx, x);
                                });
  std::vector<McEstimate> result;
  result.reserve(n_out);
  for (const auto& w : acc) result.push_back(to_estimate(w, config.n_paths));
  return result;
}

McEstimate price_exotic(const ModelParams& model, const MarketContext& ctx, const ExoticSpec& spec,
                        const SimConfig& config) {
  return price_exotics(model, ctx, {spec}, config).front();
}

std::vector<std::vector<McEstimate>> price_european_grid_mc(const ModelParams& model,
                                                            const MarketContext& ctx,
                                                            const std::vector<double>& maturities,
                                                            const std::vector<double>& strikes,
                                                            const std::vector<bool>& is_call,
                                                            const SimConfig& config) {
  if (strikes.size() != is_call.size())
    throw std::invalid_argument("price_european_grid_mc: strikes and flags differ in length");
  if (maturities.empty()) return {};
  for (double k : strikes)
    if (!(k > 0.0)) throw std::invalid_argument("strike must be positive");
  std::vector<double> dates{0.0};
  for (double t : maturities) {
    if (!(t > dates.back())) throw std::invalid_argument("maturities must be positive and ascending");
    dates.push_back(t);
  }
  const int nt = int(maturities.size()), nk = int(strikes.size());
  std::vector<double> discount(nt);
  for (int i = 0; i < nt; ++i) discount[i] = std::exp(-ctx.rate * maturities[i]);

  const auto acc = stream_paths(model, ctx, dates, config, nt * nk,
                                [&](const double* x, double* out) {
                                  for (int i = 0; i < nt; ++i) {
                                    const double s = std::exp(x[i + 1]);
                                    for (int j = 0; j < nk; ++j) {
                                      const double pay = is_call[j] ? s - strikes[j] : strikes[j] - s;
                                      out[i * nk + j] = discount[i] * std::max(pay, 0.0);
                                    }
                                  }
                                });
  std::vector<std::vector<McEstimate>> result(nt, std::vector<McEstimate>(nk));
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nk; ++j) result[i][j] = to_estimate(acc[i * nk + j], config.n_paths);
  return result;
}

McEstimate price_european_mc(const ModelParams& model, const MarketContext& ctx, double t,
                             double strike, bool is_call, const SimConfig& config) {
  return price_european_grid_mc(model, ctx, {t}, {strike}, {is_call}, config).front().front();
}

CfEstimate estimate_cf_mc(const ModelParams& model, const MarketContext& ctx, double xi, double t,
                          const SimConfig& config) {
  if (!(t > 0.0)) throw std::invalid_argument("maturity must be positive");
  const auto acc = stream_paths(model, ctx, {0.0, t}, config, 2, [&](const double* x, double* out) {
    out[0] = std::cos(xi * x[1]);
    out[1] = std::sin(xi * x[1]);
  });
  const McEstimate re = to_estimate(acc[0], config.n_paths);
  const McEstimate im = to_estimate(acc[1], config.n_paths);
  return {Complex(re.price, im.price), re.std_err, im.std_err};
}

}  // namespace hkde
