#include "hkde/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hkde {

std::size_t QuoteSurface::quote_count() const {
  std::size_t n = 0;
  for (const auto& t : tenors) n += t.quotes.size();
  return n;
}

namespace {

std::string describe(const Quote& q) {
  std::ostringstream os;
  os << "T=" << q.maturity << " K=" << q.strike << (q.is_call ? " call" : " put");
  return os.str();
}

// Model prices for one tenor; throws on pricing failure.
std::vector<double> tenor_prices(const ModelParams& params, const QuoteSurface& surface,
                                 const Tenor& tenor, const GridSpec& grid) {
  std::vector<double> strikes;
  std::vector<bool> calls;
  strikes.reserve(tenor.quotes.size());
  calls.reserve(tenor.quotes.size());
  for (const auto& q : tenor.quotes) {
    strikes.push_back(q.strike);
    calls.push_back(q.is_call);
  }
  std::vector<double> prices =
      price_strike_slice(params, surface.context(tenor), tenor.maturity, strikes, calls, grid);
  for (double p : prices)
    if (!std::isfinite(p)) throw PricingError("non-finite model price");
  return prices;
}

}  // namespace

QuoteSurface build_surface(double spot, const std::vector<MarketQuote>& quotes) {
  if (!(spot > 0.0)) throw std::invalid_argument("surface: spot must be positive");
  QuoteSurface surface;
  surface.spot = spot;
  std::map<double, Tenor> by_maturity;
  std::size_t itm = 0;

  for (const auto& mq : quotes) {
    const Quote& q = mq.quote;
    if (!(q.maturity > 0.0) || !(q.strike > 0.0)) {
      surface.warnings.push_back("skipped " + describe(q) + ": non-positive maturity or strike");
      continue;
    }
    if (!q.price && !q.iv) {
      surface.warnings.push_back("skipped " + describe(q) + ": neither price nor iv given");
      continue;
    }
    const MarketContext ctx{spot, mq.rate, mq.div_yield};
    SurfaceQuote sq;
    sq.strike = q.strike;
    sq.is_call = q.is_call;
    try {
      if (q.price) {
        sq.price = *q.price;
        sq.iv = implied_vol(ctx, q.maturity, q.strike, sq.price, q.is_call);
        if (q.iv && std::abs(sq.iv - *q.iv) > 0.01 * *q.iv) {
          std::ostringstream os;
          os << describe(q) << ": quoted iv " << *q.iv << " differs from price-implied "
             << sq.iv << " by more than 1%; price kept";
          surface.warnings.push_back(os.str());
        }
      } else {
        if (!(*q.iv > 0.0)) throw ImpliedVolError("iv must be positive");
        sq.iv = *q.iv;
        sq.price = bs_price(ctx, q.maturity, q.strike, sq.iv, q.is_call);
      }
    } catch (const ImpliedVolError& e) {
      surface.warnings.push_back("skipped " + describe(q) + ": " + e.what());
      continue;
    }

    const double forward = spot * std::exp((mq.rate - mq.div_yield) * q.maturity);
    const bool otm = q.is_call ? q.strike >= forward : q.strike < forward;
    if (!otm) {
      ++itm;
      continue;
    }
    sq.weight = 1.0 / bs_vega(ctx, q.maturity, q.strike, sq.iv);

    auto [it, inserted] = by_maturity.try_emplace(q.maturity);
    Tenor& tenor = it->second;
    if (inserted) {
      tenor.maturity = q.maturity;
      tenor.rate = mq.rate;
      tenor.div_yield = mq.div_yield;
    }
    tenor.quotes.push_back(sq);
  }
  if (itm > 0)
    surface.warnings.push_back("dropped " + std::to_string(itm) + " in-the-money quote(s)");

  for (auto& [maturity, tenor] : by_maturity) {
    if (tenor.quotes.size() < 3) {
      std::ostringstream os;
      os << "dropped tenor T=" << maturity << ": fewer than 3 OTM quotes";
      surface.warnings.push_back(os.str());
      continue;
    }
    std::sort(tenor.quotes.begin(), tenor.quotes.end(),
              [](const SurfaceQuote& a, const SurfaceQuote& b) {
                return a.strike != b.strike ? a.strike < b.strike : a.is_call < b.is_call;
              });
    surface.tenors.push_back(std::move(tenor));
  }
  if (surface.tenors.empty()) throw std::invalid_argument("surface: no usable quotes");
  return surface;
}

Eigen::VectorXd weighted_residuals(const ModelParams& params, const QuoteSurface& surface,
                                   const GridSpec& grid) {
  const auto n = Eigen::Index(surface.quote_count());
  Eigen::VectorXd r(n);
  try {
    validate(params);
    Eigen::Index i = 0;
    for (const auto& tenor : surface.tenors) {
      const std::vector<double> prices = tenor_prices(params, surface, tenor, grid);
      for (std::size_t j = 0; j < prices.size(); ++j, ++i) {
        const auto& q = tenor.quotes[j];
        r[i] = std::sqrt(q.weight) * (prices[j] - q.price);
      }
    }
  } catch (const std::exception&) {
    r.setConstant(std::sqrt(kPricingPenalty / double(n)));
  }
  return r;
}

double objective(const ModelParams& params, const QuoteSurface& surface, const GridSpec& grid) {
  return weighted_residuals(params, surface, grid).squaredNorm();
}

ParameterBounds default_bounds(ModelKind kind) {
  auto make = [](std::initializer_list<std::pair<double, double>> box) {
    ParameterBounds b;
    b.lower.resize(Eigen::Index(box.size()));
    b.upper.resize(Eigen::Index(box.size()));
    Eigen::Index i = 0;
    for (const auto& [lo, hi] : box) {
      b.lower[i] = lo;
      b.upper[i++] = hi;
    }
    return b;
  };
  switch (kind) {
    case ModelKind::hkde:
      return make({{1e-6, 4}, {1e-6, 4}, {1e-3, 100}, {1e-3, 12}, {-0.999, 0.999},
                   {0, 250}, {0, 1}, {1.01, 300}, {0.01, 300}});
    case ModelKind::heston:
      return make({{1e-6, 4}, {1e-6, 4}, {1e-3, 100}, {1e-3, 12}, {-0.999, 0.999}});
    case ModelKind::bates:
      return make({{1e-6, 4}, {1e-6, 4}, {1e-3, 100}, {1e-3, 12}, {-0.999, 0.999},
                   {0, 250}, {-50, 50}, {1e-3, 20}});
    case ModelKind::bgm:
      return make({{1e-3, 50}, {1.01, 500}, {1e-3, 50}, {0.01, 500}, {1e-3, 2}});
  }
  throw std::invalid_argument("default_bounds: unknown model");
}

ModelParams default_initial_guess(ModelKind kind, const QuoteSurface& surface) {
  if (surface.tenors.empty()) throw std::invalid_argument("initial guess: empty surface");
  auto atm_iv = [&](const Tenor& tenor) {
    const double forward =
        surface.spot * std::exp((tenor.rate - tenor.div_yield) * tenor.maturity);
    const auto it = std::min_element(tenor.quotes.begin(), tenor.quotes.end(),
                                     [&](const SurfaceQuote& a, const SurfaceQuote& b) {
                                       return std::abs(std::log(a.strike / forward)) <
                                              std::abs(std::log(b.strike / forward));
                                     });
    return it->iv;
  };
  const double short_iv = atm_iv(surface.tenors.front());
  const double long_iv = atm_iv(surface.tenors.back());
  const HestonParams heston{short_iv * short_iv, long_iv * long_iv, 3.0, 1.0, -0.5};

  ModelParams guess;
  switch (kind) {
    case ModelKind::hkde: guess = HKDEParams{heston, {1.0, 0.5, 20.0, 20.0}}; break;
    case ModelKind::heston: guess = heston; break;
    case ModelKind::bates: guess = BatesParams{heston, 1.0, -0.1, 0.2}; break;
    case ModelKind::bgm: guess = BGMParams{1.0, 10.0, 1.0, 10.0, short_iv}; break;
  }
  const ParameterBounds b = default_bounds(kind);
  std::vector<double> x = flatten(guess);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::clamp(x[i], b.lower[Eigen::Index(i)], b.upper[Eigen::Index(i)]);
  return unflatten(kind, x);
}

ErrorMetrics error_metrics(const ModelParams& params, const QuoteSurface& surface,
                           const GridSpec& grid) {
  ErrorMetrics m;
  double abs_pct = 0.0, sq = 0.0;
  for (const auto& tenor : surface.tenors) {
    std::vector<double> prices;
    try {
      prices = tenor_prices(params, surface, tenor, grid);
    } catch (const std::exception&) {
      m.excluded += tenor.quotes.size();
      continue;
    }
    const MarketContext ctx = surface.context(tenor);
    for (std::size_t j = 0; j < prices.size(); ++j) {
      const auto& q = tenor.quotes[j];
      try {
        const double iv = implied_vol(ctx, tenor.maturity, q.strike, prices[j], q.is_call);
        abs_pct += std::abs(iv - q.iv) / q.iv;
        sq += (iv - q.iv) * (iv - q.iv);
        ++m.used;
      } catch (const ImpliedVolError&) {
        ++m.excluded;
      }
    }
  }
  if (m.used == 0) {
    m.mape = m.rmse = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mape = 100.0 * abs_pct / double(m.used);
  m.rmse = std::sqrt(sq / double(m.used));
  return m;
}

CalibrationResult calibrate(ModelKind kind, const QuoteSurface& surface, const ModelParams& init,
                            const ParameterBounds& bounds, const CalibrationOptions& options) {
  if (kind_of(init) != kind) throw std::invalid_argument("calibrate: init is for another model");
  const std::vector<double> start = flatten(init);
  const auto n = Eigen::Index(start.size());
  if (bounds.lower.size() != n || bounds.upper.size() != n)
    throw std::invalid_argument("calibrate: bounds have the wrong dimension");
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(start.data(), n);
  if ((x.array() < bounds.lower.array()).any() || (x.array() > bounds.upper.array()).any())
    throw std::invalid_argument("calibrate: initial guess outside bounds");
  if (options.tolerance_schedule.empty())
    throw std::invalid_argument("calibrate: empty tolerance schedule");

  const ResidualFunction residuals = [&](const Eigen::VectorXd& v) {
    return weighted_residuals(unflatten(kind, std::vector<double>(v.data(), v.data() + v.size())),
                              surface, options.grid);
  };

  CalibrationResult result;
  double best = residuals(x).squaredNorm();
  result.initial_objective = best;
  LsqResult last;
  for (double tol : options.tolerance_schedule) {
    LsqOptions lsq;
    lsq.ftol = tol;
    lsq.max_iterations = options.max_iterations_per_stage;
    last = solve_bounded_lsq(residuals, x, bounds.lower, bounds.upper, lsq);
    result.iterations += last.iterations;
    result.evaluations += last.evaluations;
    if (last.cost <= best) {
      best = last.cost;
      x = last.x;
    }
    result.trace.push_back(best);
  }
  result.stagnated = last.stagnated;
  result.message = last.message;

  result.params = unflatten(kind, std::vector<double>(x.data(), x.data() + n));
  result.objective = best;
  result.residuals.resize(Eigen::Index(surface.quote_count()));
  Eigen::Index i = 0;
  for (const auto& tenor : surface.tenors) {
    std::vector<double> prices;
    try {
      prices = tenor_prices(result.params, surface, tenor, options.grid);
    } catch (const std::exception&) {
      prices.assign(tenor.quotes.size(), std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t j = 0; j < prices.size(); ++j) result.residuals[i++] = prices[j] - tenor.quotes[j].price;
  }
  const ErrorMetrics metrics = error_metrics(result.params, surface, options.grid);
  result.mape = metrics.mape;
  result.rmse = metrics.rmse;
  result.excluded_quotes = metrics.excluded;
  return result;
}

std::vector<MarketQuote> synthetic_quotes(const ModelParams& model, const MarketContext& ctx,
                                          const std::vector<double>& maturities, int n_strikes,
                                          double width, const GridSpec& grid) {
  if (n_strikes < 2) throw std::invalid_argument("synthetic_quotes: need at least 2 strikes");
  if (!(width > 0.0)) throw std::invalid_argument("synthetic_quotes: width must be positive");
  std::vector<MarketQuote> out;
  for (double t : maturities) {
    if (!(t > 0.0)) throw std::invalid_argument("synthetic_quotes: maturities must be positive");
    const double forward = ctx.spot * std::exp((ctx.rate - ctx.div_yield) * t);
    std::vector<double> strikes(n_strikes);
    std::vector<bool> calls(n_strikes);
    for (int i = 0; i < n_strikes; ++i) {
      const double z = -2.5 + 4.5 * i / (n_strikes - 1);
      strikes[i] = forward * std::exp(z * width * std::sqrt(t));
      calls[i] = strikes[i] >= forward;
    }
    const std::vector<double> prices = price_strike_slice(model, ctx, t, strikes, calls, grid);
    for (int i = 0; i < n_strikes; ++i) {
      MarketQuote mq;
      mq.quote.maturity = t;
      mq.quote.strike = strikes[i];
      mq.quote.is_call = calls[i];
      mq.quote.price = prices[i];
      mq.quote.iv = implied_vol(ctx, t, strikes[i], prices[i], calls[i]);
      mq.rate = ctx.rate;
      mq.div_yield = ctx.div_yield;
      out.push_back(mq);
    }
  }
  return out;
}

}  // namespace hkde
