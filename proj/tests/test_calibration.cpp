#include <doctest.h>

#include <cmath>

#include "hkde/calibration.hpp"
#include "published_params.hpp"

using namespace hkde;
using namespace hkde::testing;

namespace {

const MarketContext kMarket{100.0, 0.03, 0.01};

QuoteSurface synthetic(const ModelParams& m, int n_strikes = 11) {
  return build_surface(kMarket.spot, synthetic_quotes(m, kMarket, {0.25, 0.5, 1.0, 2.0}, n_strikes));
}

MarketQuote quote(double t, double k, bool call, double price) {
  MarketQuote q;
  q.quote = {t, k, price, std::nullopt, call};
  q.rate = kMarket.rate;
  q.div_yield = kMarket.div_yield;
  return q;
}

}  // namespace

TEST_CASE("surface keeps out-of-the-money quotes and drops thin tenors") {
  const ModelParams m = heston_row(3);
  std::vector<MarketQuote> quotes;
  const double fwd = kMarket.spot * std::exp((kMarket.rate - kMarket.div_yield) * 0.5);
  for (double k : {80.0, 90.0, 100.0, 110.0, 120.0})
    for (bool call : {true, false}) {
      const MarketContext ctx = kMarket;
      quotes.push_back(quote(0.5, k, call, price_european(m, ctx, 0.5, k, call)));
    }
  quotes.push_back(quote(1.0, 100.0, true, price_european(m, kMarket, 1.0, 100.0, true)));
  const auto surface = build_surface(kMarket.spot, quotes);
  REQUIRE(surface.tenors.size() == 1);
  const auto& tenor = surface.tenors[0];
  CHECK(tenor.quotes.size() == 5);
  for (const auto& q : tenor.quotes) {
    CHECK(q.is_call == (q.strike >= fwd));
    CHECK(q.weight == doctest::Approx(1.0 / bs_vega(kMarket, 0.5, q.strike, q.iv)));
    CHECK(q.iv > 0.0);
  }
  for (std::size_t i = 1; i < tenor.quotes.size(); ++i) CHECK(tenor.quotes[i - 1].strike < tenor.quotes[i].strike);
  CHECK_FALSE(surface.warnings.empty());
  CHECK_THROWS_AS(build_surface(kMarket.spot, {quotes.back()}), std::invalid_argument);
}

TEST_CASE("objective vanishes at the generating parameters") {
  for (const ModelParams& m : {ModelParams(heston_row(3)), ModelParams(hkde_row(3)), ModelParams(bgm_row(0))}) {
    const auto surface = synthetic(m);
    CHECK(objective(m, surface) < 1e-20);
    const auto metrics = error_metrics(m, surface);
    CHECK(metrics.rmse < 1e-8);
    CHECK(metrics.excluded == 0);
    CHECK(metrics.used == surface.quote_count());
  }
}

TEST_CASE("objective is the squared norm of the weighted residuals") {
  const auto surface = synthetic(heston_row(3));
  const ModelParams other = heston_row(0);
  const auto r = weighted_residuals(other, surface);
  CHECK(r.size() == Eigen::Index(surface.quote_count()));
  CHECK(objective(other, surface) == doctest::Approx(r.squaredNorm()).epsilon(1e-12));
  CHECK(objective(other, surface) > 0.0);
}

TEST_CASE("pricing failure maps to the penalty") {
  const auto surface = synthetic(heston_row(3));
  // A grid too narrow to contain the quoted strikes.
  const GridSpec tiny{64, 1e-3};
  CHECK(objective(heston_row(3), surface, tiny) == doctest::Approx(kPricingPenalty));
}

TEST_CASE("default bounds and initial guess") {
  for (auto kind : {ModelKind::hkde, ModelKind::heston, ModelKind::bates, ModelKind::bgm}) {
    const auto b = default_bounds(kind);
    CHECK(b.lower.size() == Eigen::Index(parameter_names(kind).size()));
    CHECK((b.lower.array() < b.upper.array()).all());
    const auto surface = synthetic(heston_row(3), 7);
    const auto x0 = flatten(default_initial_guess(kind, surface));
    for (std::size_t i = 0; i < x0.size(); ++i) {
      CHECK(x0[i] >= b.lower[i]);
      CHECK(x0[i] <= b.upper[i]);
    }
    CHECK_NOTHROW(validate(default_initial_guess(kind, surface)));
  }
}

TEST_CASE("Heston calibration recovers a synthetic surface") {
  const HestonParams truth = heston_row(3);
  const auto surface = synthetic(truth);
  const auto init = default_initial_guess(ModelKind::heston, surface);
  const auto result = calibrate(ModelKind::heston, surface, init, default_bounds(ModelKind::heston));
  CHECK(result.objective <= result.initial_objective);
  for (std::size_t i = 1; i < result.trace.size(); ++i) CHECK(result.trace[i] <= result.trace[i - 1]);
  CHECK(result.rmse < 1e-5);
  CHECK(result.residuals.size() == Eigen::Index(surface.quote_count()));
  const auto fit = std::get<HestonParams>(result.params);
  CHECK(fit.v0 == doctest::Approx(truth.v0).epsilon(1e-3));
  CHECK(fit.rho == doctest::Approx(truth.rho).epsilon(1e-3));
  CHECK(fit.kappa == doctest::Approx(truth.kappa).epsilon(1e-2));
}

TEST_CASE("a nested model fits no better than the richer one") {
  const auto surface = synthetic(hkde_row(3), 9);
  const auto heston = calibrate(ModelKind::heston, surface,
                                default_initial_guess(ModelKind::heston, surface),
                                default_bounds(ModelKind::heston));
  CHECK(heston.objective > 0.0);
  CHECK(objective(hkde_row(3), surface) < heston.objective);
}
