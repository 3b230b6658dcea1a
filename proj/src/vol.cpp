#include "hkde/vol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hkde {

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

namespace {

double d1_of(const MarketContext& ctx, double t, double strike, double vol) {
  const double sqrt_t = std::sqrt(t);
  return (std::log(ctx.spot / strike) + (ctx.rate - ctx.div_yield + 0.5 * vol * vol) * t) /
         (vol * sqrt_t);
}

}  // namespace

double bs_price(const MarketContext& ctx, double t, double strike, double vol, bool is_call) {
  const double df_q = std::exp(-ctx.div_yield * t);
  const double df_r = std::exp(-ctx.rate * t);
  const double d1 = d1_of(ctx, t, strike, vol);
  const double d2 = d1 - vol * std::sqrt(t);
  if (is_call) return ctx.spot * df_q * norm_cdf(d1) - strike * df_r * norm_cdf(d2);
  return strike * df_r * norm_cdf(-d2) - ctx.spot * df_q * norm_cdf(-d1);
}

double bs_vega(const MarketContext& ctx, double t, double strike, double vol) {
  return ctx.spot * norm_pdf(d1_of(ctx, t, strike, vol)) * std::sqrt(t);
}

double bs_vega_greek(const MarketContext& ctx, double t, double strike, double vol) {
  return std::exp(-ctx.div_yield * t) * bs_vega(ctx, t, strike, vol);
}

std::pair<double, double> price_bounds(const MarketContext& ctx, double t, double strike,
                                       bool is_call) {
  const double fwd_spot = ctx.spot * std::exp(-ctx.div_yield * t);
  const double pv_strike = strike * std::exp(-ctx.rate * t);
  if (is_call) return {std::max(fwd_spot - pv_strike, 0.0), fwd_spot};
  return {std::max(pv_strike - fwd_spot, 0.0), pv_strike};
}

double implied_vol(const MarketContext& ctx, double t, double strike, double price,
                   bool is_call) {
  const auto [lower, upper] = price_bounds(ctx, t, strike, is_call);
  if (!(price > lower) || !(price < upper))
    throw ImpliedVolError("implied_vol: price outside no-arbitrage bounds");

  const double tol_price = 1e-10 * ctx.spot;
  double lo = kVolLower, hi = kVolUpper;
  const double p_lo = bs_price(ctx, t, strike, lo, is_call);
  if (price <= p_lo) {
    if (p_lo - price <= tol_price) return lo;
    throw ImpliedVolError("implied_vol: price below the volatility bracket");
  }
  const double p_hi = bs_price(ctx, t, strike, hi, is_call);
  if (price >= p_hi) {
    if (price - p_hi <= tol_price) return hi;
    throw ImpliedVolError("implied_vol: price above the volatility bracket");
  }

  // Newton on log(price), which stays well conditioned for deep OTM quotes.
  const double log_target = std::log(price);
  double vol = std::clamp(std::sqrt(2.0 * std::abs(std::log(ctx.spot / strike)) / t + 0.04),
                          lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double model = bs_price(ctx, t, strike, vol, is_call);
    if (!(model > 0.0)) {
      lo = vol;
      vol = 0.5 * (lo + hi);
      continue;
    }
    const double g = std::log(model) - log_target;
    if (g == 0.0) return vol;
    if (g > 0.0) hi = vol; else lo = vol;

    const double slope = bs_vega_greek(ctx, t, strike, vol) / model;
    double next = slope > 0.0 ? vol - g / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - vol);
    vol = next;
    if (step <= 1e-15 * std::max(1.0, vol) || hi - lo <= 1e-15 * std::max(1.0, vol)) {
      return vol;
    }
  }
  throw ImpliedVolError("implied_vol: no convergence in 200 iterations");
}

}  // namespace hkde
