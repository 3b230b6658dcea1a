#include <doctest.h>

#include <cmath>
#include <limits>

#include "hkde/montecarlo.hpp"
#include "hkde/proj.hpp"
#include "hkde/vol.hpp"
#include "published_params.hpp"

using namespace hkde;
using namespace hkde::testing;

namespace {

SimConfig cfg(std::int64_t n, std::uint64_t seed = 11, bool anti = true) {
  SimConfig c;
  c.n_paths = n;
  c.seed = seed;
  c.antithetic = anti;
  c.threads = 2;
  return c;
}

ExoticSpec contract(ExoticKind kind, double strike, double t, int m) {
  ExoticSpec s;
  s.kind = kind;
  s.strike = strike;
  s.schedule = {t, m, DateSpacing::uniform_t_over_m};
  return s;
}

double sample_variance(const Eigen::VectorXd& x) {
  return (x.array() - x.mean()).square().sum() / double(x.size() - 1);
}

}  // namespace

TEST_CASE("monitoring dates") {
  const auto a = MonitoringSchedule{2.0, 4, DateSpacing::uniform_t_over_m}.dates();
  CHECK(a.size() == 5);
  CHECK(a.front() == 0.0);
  CHECK(a.back() == 2.0);
  const auto b = MonitoringSchedule{2.0, 4, DateSpacing::uniform_t_over_m_plus_one}.dates();
  CHECK(b.back() == doctest::Approx(1.6));
  CHECK_THROWS_AS((MonitoringSchedule{1.0, 0}.dates()), std::invalid_argument);
}

TEST_CASE("payoffs on a hand-built path") {
  const MarketContext ctx{100.0, 0.0, 0.0};
  const double path[] = {std::log(100.0), std::log(110.0), std::log(99.0), std::log(120.0)};

  auto asian = contract(ExoticKind::asian_call, 100.0, 1.0, 3);
  CHECK(discounted_payoff(asian, ctx, path) == doctest::Approx(107.25 - 100.0));
  asian.kind = ExoticKind::asian_put;
  asian.strike = 110.0;
  CHECK(discounted_payoff(asian, ctx, path) == doctest::Approx(2.75));

  auto vs = contract(ExoticKind::variance_swap, 0.01, 0.5, 3);
  const double r1 = std::log(1.1), r2 = std::log(0.9), r3 = std::log(120.0 / 99.0);
  CHECK(discounted_payoff(vs, ctx, path) == doctest::Approx((r1 * r1 + r2 * r2 + r3 * r3) / 0.5 - 0.01));
  vs.kind = ExoticKind::variance_call;
  const double s3 = 120.0 / 99.0 - 1.0;
  CHECK(discounted_payoff(vs, ctx, path) == doctest::Approx((0.01 + 0.01 + s3 * s3) / 0.5 - 0.01));

  auto cl = contract(ExoticKind::cliquet, 2.0, 1.0, 3);
  cl.cap = 0.08;
  cl.floor = -0.05;
  cl.global_cap = std::numeric_limits<double>::infinity();
  cl.global_floor = 0.0;
  CHECK(discounted_payoff(cl, ctx, path) == doctest::Approx(2.0 * (0.08 - 0.05 + 0.08)));
  cl.global_cap = 0.1;
  CHECK(discounted_payoff(cl, ctx, path) == doctest::Approx(0.2));

  auto uo = contract(ExoticKind::barrier_uo, 100.0, 1.0, 3);
  uo.barrier_up = 120.0;  // touching is not crossing
  CHECK(discounted_payoff(uo, ctx, path) == doctest::Approx(20.0));
  uo.barrier_up = 115.0;
  CHECK(discounted_payoff(uo, ctx, path) == 0.0);
  auto dbl = contract(ExoticKind::barrier_double, 130.0, 1.0, 3);
  dbl.barrier_up = 125.0;
  dbl.barrier_down = 99.5;
  dbl.barrier_is_call = false;
  CHECK(discounted_payoff(dbl, ctx, path) == 0.0);
  dbl.barrier_down = 95.0;
  CHECK(discounted_payoff(dbl, ctx, path) == doctest::Approx(10.0));

  const MarketContext rated{100.0, 0.05, 0.0};
  auto eu = contract(ExoticKind::european_put, 130.0, 2.0, 3);
  CHECK(discounted_payoff(eu, rated, path) == doctest::Approx(10.0 * std::exp(-0.1)));
}

TEST_CASE("contract validation") {
  auto uo = contract(ExoticKind::barrier_uo, 100.0, 1.0, 4);
  uo.barrier_up = 90.0;
  CHECK_THROWS_AS(uo.validate(100.0), std::invalid_argument);
  auto cl = contract(ExoticKind::cliquet, 1.0, 1.0, 4);
  cl.cap = -0.1;
  cl.floor = 0.1;
  CHECK_THROWS_AS(cl.validate(100.0), std::invalid_argument);
  CHECK(parse_exotic_kind("barrier_double") == ExoticKind::barrier_double);
  CHECK_THROWS(parse_exotic_kind("lookback"));
  CHECK_THROWS_AS(price_european_mc(heston_row(0), kDesk, 1.0, 100.0, true, cfg(1001)),
                  std::invalid_argument);
}

TEST_CASE("Kou jump sampler") {
  Philox4x32 rng(5, 0);
  const KouJumpParams up_only{1.0, 1.0, 2.0, 3.0};
  const KouJumpParams mixed{1.0, 0.3, 4.0, 2.5};
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) s1 += sample_kou_jump(rng, up_only);
  for (int i = 0; i < n; ++i) s2 += sample_kou_jump(rng, mixed);
  CHECK(std::abs(s1 / n - 0.5) < 4.0 * 0.5 / std::sqrt(n));
  const double mean = 0.3 / 4.0 - 0.7 / 2.5;
  CHECK(std::abs(s2 / n - mean) < 4.0 * 0.6 / std::sqrt(n));
}

TEST_CASE("martingale property at one million paths") {
  for (const ModelParams& m : {ModelParams(hkde_row(0)), ModelParams(bates_row(2)), ModelParams(bgm_row(1))}) {
    CAPTURE(model_name(kind_of(m)));
    const auto est = price_european_mc(m, kDesk, 1.0, 1e-9, true, cfg(1'000'000));
    CHECK(std::abs(est.price - kDesk.spot) < 3.5 * est.std_err + 1e-9);
  }
}

TEST_CASE("simulated characteristic function matches the closed form") {
  for (const ModelParams& m : {ModelParams(hkde_row(3)), ModelParams(bgm_row(0)), ModelParams(bates_row(0))}) {
    CAPTURE(model_name(kind_of(m)));
    const auto est = estimate_cf_mc(m, kDesk, 2.0, 0.5, cfg(200'000, 3));
    const Complex exact = cf_model(m, kDesk, Complex(2.0), 0.5);
    CHECK(std::abs(est.value.real() - exact.real()) < 4.0 * est.std_err_real + 1e-3);
    CHECK(std::abs(est.value.imag() - exact.imag()) < 4.0 * est.std_err_imag + 1e-3);
  }
}

TEST_CASE("sample moments of the log-return") {
  SUBCASE("Black-Scholes limit") {
    const HestonParams flat{0.04, 0.04, 1.0, 1e-6, 0.0};
    const auto batch = simulate_paths(flat, kDesk, {1.0, 2}, cfg(200'000, 9, false));
    const Eigen::VectorXd y = batch.log_spot.col(2).array() - std::log(kDesk.spot);
    const double n = double(y.size());
    CHECK(std::abs(y.mean() - 0.03) < 4.0 * 0.2 / std::sqrt(n));
    CHECK(std::abs(sample_variance(y) - 0.04) < 4.0 * 0.04 * std::sqrt(2.0 / n));
  }
  SUBCASE("second cumulant of a jump model") {
    const ModelParams m = hkde_row(3);
    const auto batch = simulate_paths(m, kDesk, {1.0, 1}, cfg(200'000, 4, false));
    const Eigen::VectorXd y = batch.log_spot.col(1).array() - std::log(kDesk.spot);
    const double c2 = cumulants_numeric(m, kDesk, 1.0, 2);
    const double c4 = cumulants_numeric(m, kDesk, 1.0, 4);
    const double se = std::sqrt((c4 + 2.0 * c2 * c2) / double(y.size()));
    CHECK(std::abs(sample_variance(y) - c2) < 5.0 * se);
  }
}

TEST_CASE("CIR variance reverts to its long-run mean") {
  const HestonParams h = heston_row(0);
  const auto batch = simulate_paths(h, kDesk, {2.0, 4}, cfg(100'000, 21));
  for (int m = 1; m <= 4; ++m) {
    const double t = 0.5 * m;
    const double expected = h.theta + (h.v0 - h.theta) * std::exp(-h.kappa * t);
    const Eigen::VectorXd v = batch.variance.col(m);
    const double se = std::sqrt(sample_variance(v) / double(v.size()));
    CAPTURE(t);
    // Full truncation biases the mean upward by a small amount.
    CHECK(std::abs(v.mean() - expected) < 5.0 * se + 2e-3);
  }
  CHECK(batch.variance.minCoeff() >= 0.0);
}

TEST_CASE("finer Euler steps remove the bias of a strongly non-Feller row") {
  // sigma_v^2 / (2 kappa theta) is about 9.5 here.
  const ModelParams m = hkde_row(1);
  const double proj = price_european(m, kDesk, 0.1, 100.0, true);
  SimConfig coarse = cfg(200'000, 5);
  SimConfig fine = coarse;
  fine.steps_per_year = 4000.0;
  const McEstimate a = price_european_mc(m, kDesk, 0.1, 100.0, true, coarse);
  const McEstimate b = price_european_mc(m, kDesk, 0.1, 100.0, true, fine);
  CHECK(a.price - proj > 4.0 * a.std_err);
  CHECK(std::abs(b.price - proj) < 3.0 * b.std_err);

  SimConfig bad = coarse;
  bad.steps_per_year = 0.0;
  CHECK_THROWS_AS(price_european_mc(m, kDesk, 0.1, 100.0, true, bad), std::invalid_argument);
}

TEST_CASE("Europeans agree with PROJ") {
  for (const ModelParams& m : {ModelParams(hkde_row(0)), ModelParams(bgm_row(2))}) {
    CAPTURE(model_name(kind_of(m)));
    const auto grid = price_european_grid_mc(m, kDesk, {0.5, 1.0}, {80.0, 100.0, 120.0},
                                             {false, true, true}, cfg(200'000, 8));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) {
        const double t = i == 0 ? 0.5 : 1.0, k = 80.0 + 20.0 * j;
        const double proj = price_european(m, kDesk, t, k, j > 0);
        CHECK(std::abs(grid[i][j].price - proj) < 4.0 * grid[i][j].std_err);
      }
  }
}

TEST_CASE("antithetic pairs reduce the error of diffusive models") {
  // Jumps are shared within a pair, so jump-dominated rows gain little or
  // nothing; Heston is pure diffusion and must gain.
  for (int i = 0; i < 4; ++i) {
    CAPTURE(kTickers[i]);
    const auto plain = price_european_mc(heston_row(i), kDesk, 0.5, 100.0, true, cfg(40'000, 2, false));
    const auto anti = price_european_mc(heston_row(i), kDesk, 0.5, 100.0, true, cfg(40'000, 2, true));
    CHECK(anti.std_err < plain.std_err);
    CHECK(anti.ci95_half_width == doctest::Approx(1.96 * anti.std_err).epsilon(1e-3));
  }
}

TEST_CASE("reported standard errors match the spread across seeds") {
  for (const ModelParams& m : {ModelParams(hkde_row(0)), ModelParams(heston_row(2)),
                               ModelParams(bates_row(3)), ModelParams(bgm_row(1))}) {
    for (bool anti : {true, false}) {
      CAPTURE(model_name(kind_of(m)));
      CAPTURE(anti);
      const int seeds = 30;
      double sum = 0.0, sum2 = 0.0, se = 0.0;
      for (int s = 0; s < seeds; ++s) {
        const auto est = price_european_mc(m, kDesk, 0.25, 100.0, true, cfg(4'000, 1000 + s, anti));
        sum += est.price;
        sum2 += est.price * est.price;
        se += est.std_err / seeds;
      }
      const double sd = std::sqrt((sum2 - sum * sum / seeds) / (seeds - 1));
      CHECK(sd / se > 0.6);
      CHECK(sd / se < 1.5);
    }
  }
}

TEST_CASE("up-and-out value falls as monitoring becomes denser") {
  double previous = std::numeric_limits<double>::infinity();
  for (int m : {4, 12, 40}) {
    auto uo = contract(ExoticKind::barrier_uo, 100.0, 1.0, m);
    uo.barrier_up = 120.0;
    const auto est = price_exotic(hkde_row(0), kDesk, uo, cfg(100'000, 6));
    CAPTURE(m);
    CHECK(est.price < previous);
    previous = est.price;
  }
}

TEST_CASE("fixed seed and worker count give identical results") {
  auto asian = contract(ExoticKind::asian_call, 100.0, 1.0, 12);
  const auto a = price_exotic(bates_row(1), kDesk, asian, cfg(20'000, 99));
  const auto b = price_exotic(bates_row(1), kDesk, asian, cfg(20'000, 99));
  const auto c = price_exotic(bates_row(1), kDesk, asian, cfg(20'000, 100));
  CHECK(a.price == b.price);
  CHECK(a.std_err == b.std_err);
  CHECK(a.price != c.price);

  // Shared paths: a batch must reproduce the single-contract estimate.
  auto put = asian;
  put.kind = ExoticKind::asian_put;
  const auto both = price_exotics(bates_row(1), kDesk, {put, asian}, cfg(20'000, 99));
  CHECK(both[1].price == a.price);
}
