#include <doctest.h>

#include <cmath>

#include "hkde/vol.hpp"

using namespace hkde;

namespace {
const MarketContext kCtx{100.0, 0.05, 0.0};
const MarketContext kYield{100.0, 0.03, 0.02};
}  // namespace

TEST_CASE("normal distribution") {
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(norm_cdf(-40.0) >= 0.0);
  CHECK(norm_cdf(-10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-12));
  CHECK(norm_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
}

TEST_CASE("Black-Scholes reference values") {
  CHECK(bs_price(kCtx, 1.0, 100.0, 0.2, true) == doctest::Approx(10.450583572185565).epsilon(1e-14));
  CHECK(bs_price(kCtx, 1.0, 100.0, 0.2, false) == doctest::Approx(5.573526022256971).epsilon(1e-13));
  for (double k : {50.0, 90.0, 140.0}) {
    const double parity = kYield.spot * std::exp(-0.02 * 0.7) - k * std::exp(-0.03 * 0.7);
    CHECK(bs_price(kYield, 0.7, k, 0.35, true) - bs_price(kYield, 0.7, k, 0.35, false) ==
          doctest::Approx(parity).epsilon(1e-12));
  }
}

TEST_CASE("vega against finite differences") {
  for (double k : {60.0, 100.0, 150.0})
    for (double vol : {0.1, 0.4, 1.2}) {
      const double h = 1e-5;
      const double fd = (bs_price(kYield, 0.5, k, vol + h, true) - bs_price(kYield, 0.5, k, vol - h, true)) / (2 * h);
      CHECK(bs_vega_greek(kYield, 0.5, k, vol) == doctest::Approx(fd).epsilon(1e-7));
      CHECK(bs_vega(kYield, 0.5, k, vol) == doctest::Approx(fd * std::exp(0.02 * 0.5)).epsilon(1e-7));
    }
}

TEST_CASE("implied vol round trip") {
  for (double t : {0.02, 0.25, 1.0, 5.0})
    for (double k : {40.0, 80.0, 100.0, 125.0, 250.0})
      for (double vol : {0.05, 0.2, 0.6, 1.5, 3.0})
        for (bool call : {true, false}) {
          const double price = bs_price(kYield, t, k, vol, call);
          const auto [lo, hi] = price_bounds(kYield, t, k, call);
          // Skip prices indistinguishable from the bounds in double precision.
          if (price - lo < 1e-9 * kYield.spot || hi - price < 1e-9 * kYield.spot) continue;
          CAPTURE(t);
          CAPTURE(k);
          CAPTURE(vol);
          CHECK(implied_vol(kYield, t, k, price, call) == doctest::Approx(vol).epsilon(1e-6));
        }
}

TEST_CASE("implied vol rejects arbitrageable prices") {
  const auto [lo, hi] = price_bounds(kCtx, 1.0, 90.0, true);
  CHECK_THROWS_AS(implied_vol(kCtx, 1.0, 90.0, lo - 0.01, true), ImpliedVolError);
  CHECK_THROWS_AS(implied_vol(kCtx, 1.0, 90.0, hi + 0.01, true), ImpliedVolError);
  CHECK(hi == doctest::Approx(100.0));
  CHECK(lo == doctest::Approx(100.0 - 90.0 * std::exp(-0.05)));
}
