#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hkde/lsq.hpp"
#include "hkde/models.hpp"
#include "hkde/proj.hpp"
#include "hkde/vol.hpp"

namespace hkde {

/// A quote together with the flat rate and yield of its tenor.
struct MarketQuote {
  Quote quote;
  double rate = 0.0;
  double div_yield = 0.0;
};

struct SurfaceQuote {
  double strike = 0.0;
  bool is_call = true;
  double price = 0.0;
  double iv = 0.0;
  double weight = 0.0;  // 1 / (S0 pdf(d1) sqrt(T)) at the market IV
};

struct Tenor {
  double maturity = 0.0;
  double rate = 0.0;
  double div_yield = 0.0;
  std::vector<SurfaceQuote> quotes;  // ascending strike
};

/// OTM quotes grouped by ascending maturity.
struct QuoteSurface {
  double spot = 0.0;
  std::vector<Tenor> tenors;
  std::vector<std::string> warnings;

  MarketContext context(const Tenor& tenor) const { return {spot, tenor.rate, tenor.div_yield}; }
  std::size_t quote_count() const;
};

/// Builds a surface: fills missing price or IV, keeps OTM quotes relative to
/// the forward (calls at or above it, puts below), groups by maturity and
/// drops tenors with fewer than three quotes. Dropped input is described in
/// `warnings`. Throws std::invalid_argument when nothing usable remains.
QuoteSurface build_surface(double spot, const std::vector<MarketQuote>& quotes);

/// sqrt(w_j) (V_j(P) - v_j) for every quote, tenors in order.
/// A pricing failure yields residuals whose squared sum equals kPricingPenalty.
Eigen::VectorXd weighted_residuals(const ModelParams& params, const QuoteSurface& surface,
                                   const GridSpec& grid = {});

inline constexpr double kPricingPenalty = 1e10;

/// sum_j w_j (V_j(P) - v_j)^2.
double objective(const ModelParams& params, const QuoteSurface& surface,
                 const GridSpec& grid = {});

struct ParameterBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

ParameterBounds default_bounds(ModelKind kind);

/// Smile-informed starting point: v0 and theta from the squared ATM IVs of the
/// shortest and longest tenors, the rest fixed defaults.
ModelParams default_initial_guess(ModelKind kind, const QuoteSurface& surface);

struct ErrorMetrics {
  double mape = 0.0;  // percent
  double rmse = 0.0;  // IV units
  std::size_t used = 0;
  std::size_t excluded = 0;  // quotes whose model price could not be inverted
};

ErrorMetrics error_metrics(const ModelParams& params, const QuoteSurface& surface,
                           const GridSpec& grid = {});

struct CalibrationOptions {
  std::vector<double> tolerance_schedule{1e-4, 1e-6, 1e-8};
  int max_iterations_per_stage = 200;
  GridSpec grid;
};

struct CalibrationResult {
  ModelParams params;
  double objective = 0.0;
  double initial_objective = 0.0;
  Eigen::VectorXd residuals;  // model price - market price, surface order
  double mape = 0.0;
  double rmse = 0.0;
  std::size_t excluded_quotes = 0;
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> trace;  // best objective after each stage
  bool stagnated = false;
  std::string message;
};

CalibrationResult calibrate(ModelKind kind, const QuoteSurface& surface, const ModelParams& init,
                            const ParameterBounds& bounds, const CalibrationOptions& options = {});

/// Noiseless OTM quotes priced by PROJ: for each maturity, n_strikes
/// log-moneyness points k = z * width * sqrt(T) about the forward with z
/// evenly spaced on [-2.5, 2].
std::vector<MarketQuote> synthetic_quotes(const ModelParams& model, const MarketContext& ctx,
                                          const std::vector<double>& maturities, int n_strikes,
                                          double width = 0.45, const GridSpec& grid = {});

}  // namespace hkde
