#pragma once

#include <optional>
#include <stdexcept>

#include "hkde/models.hpp"

namespace hkde {

class ImpliedVolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Quote {
  double maturity = 0.0;
  double strike = 0.0;
  std::optional<double> price;
  std::optional<double> iv;
  bool is_call = true;
};

double norm_pdf(double x);
double norm_cdf(double x);

double bs_price(const MarketContext& ctx, double t, double strike, double vol, bool is_call);

/// S0 * pdf(d1) * sqrt(t): the calibration weight kernel (no dividend discount).
double bs_vega(const MarketContext& ctx, double t, double strike, double vol);

/// Textbook vega, dPrice/dVol, including the e^{-qt} factor.
double bs_vega_greek(const MarketContext& ctx, double t, double strike, double vol);

/// Static no-arbitrage price bounds (lower, upper) for a European option.
std::pair<double, double> price_bounds(const MarketContext& ctx, double t, double strike,
                                       bool is_call);

/// Black-Scholes implied volatility on the bracket [1e-4, 5].
/// Throws ImpliedVolError when the price is outside the no-arbitrage bounds
/// or the root cannot be located.
double implied_vol(const MarketContext& ctx, double t, double strike, double price,
                   bool is_call);

inline constexpr double kVolLower = 1e-4;
inline constexpr double kVolUpper = 5.0;

}  // namespace hkde
