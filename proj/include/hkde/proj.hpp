#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hkde/models.hpp"

namespace hkde {

/// Raised when a contract cannot be priced on the chosen grid.
class PricingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int n_basis = 4096;  // power of two
  double l1 = 12.0;    // width multiplier of the cumulant rule
};

/// Uniform log-return grid x_k = x1 + k * delta (k = 0..N-1) carrying one cubic
/// B-spline per node, plus the dual frequency grid xi_j = j * delta_xi.
struct ProjGrid {
  int n_basis = 0;
  double alpha_bar = 0.0;
  double center = 0.0;
  double x1 = 0.0;
  double delta = 0.0;
  double a = 0.0;
  double delta_xi = 0.0;

  static ProjGrid make(int n_basis, double alpha_bar, double center);

  double node(int k) const { return x1 + k * delta; }
  double x_last() const { return node(n_basis - 1); }
};

/// Density coefficients: f(y) ~ sum_k coeff[k] * B3(a (y - x_k)), where y is
/// the log-return ln(S_T/S_0) and B3 the centred cubic B-spline on [-2, 2].
struct ProjCoefficients {
  Eigen::VectorXd coeff;
  ProjGrid grid;

  double density(double y) const;
  double total_mass() const;
};

/// Centred cubic B-spline, support [-2, 2], unit integral.
double cubic_bspline(double s);

/// Scaled Fourier transform of the cubic dual generator on the PROJ frequency
/// grid: zeta(xi) = 2520 (sin(xi/2a)/xi)^4 / (1208 + 1191 cos(xi/a) +
/// 120 cos(2xi/a) + cos(3xi/a)), with the continuous limit 1/(16 a^4) at 0.
double dual_generator_weight(double xi, double a);

/// Half-width of the grid: max(1/2, l1 * sqrt(c2 t + sqrt(c4 t))) with c2, c4
/// the unit-time cumulants of the log-return.
double alpha_bar(const ModelParams& model, const MarketContext& ctx, double t, double l1);
double alpha_bar_from_cumulants(double c2, double c4, double t, double l1);

/// Grid for a maturity: width from alpha_bar, centred on the unit-time mean
/// log-return scaled by t.
ProjGrid make_grid(const ModelParams& model, const MarketContext& ctx, double t,
                   const GridSpec& spec);

ProjCoefficients proj_coefficients(const ModelParams& model, const MarketContext& ctx, double t,
                                   const ProjGrid& grid);

/// Prices European options of one maturity from a single coefficient build.
/// Puts are integrated against the projected density; calls follow from parity.
class ProjSlicePricer {
 public:
  ProjSlicePricer(ProjCoefficients coefficients, const MarketContext& ctx, double t);

  double put(double strike) const;
  double call(double strike) const;
  double price(double strike, bool is_call) const { return is_call ? call(strike) : put(strike); }

  /// Call priced directly by quadrature of (S0 e^y - K)^+ over the grid,
  /// without parity. Numerically meaningful only for moderate grid widths.
  double call_by_quadrature(double strike) const;

  const ProjCoefficients& coefficients() const { return coefficients_; }

 private:
  double element_put_integral(int k, double log_strike, double strike) const;

  ProjCoefficients coefficients_;
  MarketContext ctx_;
  double t_;
  double exp_moment_;                 // int B3(s) e^{s delta} ds
  std::vector<double> prefix_mass_;   // sum_{j<k} c_j
  std::vector<double> prefix_exp_;    // sum_{j<k} c_j e^{x_j}
};

double price_european(const ModelParams& model, const MarketContext& ctx, double t, double strike,
                      bool is_call, const GridSpec& spec = {});

/// One coefficient build for the whole strike list; results equal looped
/// price_european calls.
std::vector<double> price_strike_slice(const ModelParams& model, const MarketContext& ctx,
                                       double t, std::span<const double> strikes,
                                       const std::vector<bool>& is_call, const GridSpec& spec = {});

}  // namespace hkde
