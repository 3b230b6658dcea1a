#include "hkde/proj.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace hkde {

namespace {

constexpr std::array<std::array<double, 2>, 7> kGaussLegendre7{{
    {-0.9491079123427585, 0.12948496616887065},
    {-0.7415311855993945, 0.2797053914892766},
    {-0.4058451513773972, 0.3818300505051183},
    {0.0, 0.41795918367346896},
    {0.4058451513773972, 0.3818300505051183},
    {0.7415311855993945, 0.2797053914892766},
    {0.9491079123427585, 0.12948496616887065},
}};

// Integral of fn(s) over [lo, hi] on the unit-knot grid of B3, 7-point
// Gauss-Legendre per knot interval intersected with [lo, hi].
template <typename Fn>
double integrate_on_knots(const Fn& fn, double lo, double hi) {
  double total = 0.0;
  for (int knot = -2; knot < 2; ++knot) {
    const double a = std::max(lo, double(knot));
    const double b = std::min(hi, double(knot + 1));
    if (b <= a) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (const auto& [node, weight] : kGaussLegendre7) sum += weight * fn(mid + half * node);
    total += half * sum;
  }
  return total;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Fourier transform of the cubic dual generator at w, normalised to 1 at w = 0.
double dual_generator_hat(double w) {
  if (std::abs(w) < 1e-8) return 1.0;
  const double sinc = std::sin(0.5 * w) / (0.5 * w);
  const double s2 = sinc * sinc;
  return s2 * s2 * 2520.0 /
         (1208.0 + 1191.0 * std::cos(w) + 120.0 * std::cos(2.0 * w) + std::cos(3.0 * w));
}

}  // namespace

double cubic_bspline(double s) {
  const double x = std::abs(s);
  if (x >= 2.0) return 0.0;
  if (x >= 1.0) {
    const double u = 2.0 - x;
    return u * u * u / 6.0;
  }
  return (4.0 - 6.0 * x * x + 3.0 * x * x * x) / 6.0;
}

double dual_generator_weight(double xi, double a) {
  const double a4 = a * a * a * a;
  if (xi == 0.0) return 1.0 / (16.0 * a4);
  const double s = std::sin(xi / (2.0 * a)) / xi;
  const double s2 = s * s;
  const double w = xi / a;
  return 2520.0 * s2 * s2 /
         (1208.0 + 1191.0 * std::cos(w) + 120.0 * std::cos(2.0 * w) + std::cos(3.0 * w));
}

ProjGrid ProjGrid::make(int n_basis, double alpha_bar, double center) {
  if (n_basis < 16 || !is_power_of_two(n_basis))
    throw std::invalid_argument("ProjGrid: n_basis must be a power of two >= 16");
  if (!(alpha_bar > 0.0)) throw std::invalid_argument("ProjGrid: alpha_bar must be positive");
  ProjGrid g;
  g.n_basis = n_basis;
  g.alpha_bar = alpha_bar;
  g.center = center;
  g.x1 = center - alpha_bar;
  g.delta = 2.0 * alpha_bar / (n_basis - 1);
  g.a = 1.0 / g.delta;
  g.delta_xi = 2.0 * std::numbers::pi * g.a / n_basis;
  return g;
}

double ProjCoefficients::density(double y) const {
  const double s = (y - grid.x1) * grid.a;
  const int lo = std::max(0, int(std::floor(s)) - 2);
  const int hi = std::min(grid.n_basis - 1, int(std::ceil(s)) + 2);
  double f = 0.0;
  for (int k = lo; k <= hi; ++k) f += coeff[k] * cubic_bspline(s - k);
  return f;
}

double ProjCoefficients::total_mass() const { return grid.delta * coeff.sum(); }

double alpha_bar_from_cumulants(double c2, double c4, double t, double l1) {
  const double spread = std::max(c2, 0.0) * t + std::sqrt(std::max(c4, 0.0) * t);
  return std::max(0.5, l1 * std::sqrt(spread));
}

double alpha_bar(const ModelParams& model, const MarketContext& ctx, double t, double l1) {
  if (!(t > 0.0)) throw std::invalid_argument("alpha_bar: t must be positive");
  if (!(l1 > 0.0)) throw std::invalid_argument("alpha_bar: l1 must be positive");
  const double c2 = cumulants_numeric(model, ctx, 1.0, 2);
  const double c4 = cumulants_numeric(model, ctx, 1.0, 4);
  return alpha_bar_from_cumulants(c2, c4, t, l1);
}

ProjGrid make_grid(const ModelParams& model, const MarketContext& ctx, double t,
                   const GridSpec& spec) {
  const double c1 = cumulants_numeric(model, ctx, 1.0, 1);
  return ProjGrid::make(spec.n_basis, alpha_bar(model, ctx, t, spec.l1), c1 * t);
}

ProjCoefficients proj_coefficients(const ModelParams& model, const MarketContext& ctx, double t,
                                   const ProjGrid& grid) {
  const int n = grid.n_basis;
  std::vector<Complex> h(n), out(n);
  for (int j = 0; j < n; ++j) {
    const double xi = j * grid.delta_xi;
    const Complex phi = std::exp(log_return_exponent(model, ctx, Complex(xi, 0.0), t));
    const double weight = (j == 0 ? 0.5 : 1.0) * dual_generator_hat(xi / grid.a);
    h[j] = phi * weight * std::exp(Complex(0.0, -xi * grid.x1));
  }
  thread_local Eigen::FFT<double> fft;
  fft.fwd(out, h);

  ProjCoefficients result;
  result.grid = grid;
  result.coeff.resize(n);
  const double scale = grid.delta_xi / std::numbers::pi;
  for (int k = 0; k < n; ++k) result.coeff[k] = scale * out[k].real();
  return result;
}

ProjSlicePricer::ProjSlicePricer(ProjCoefficients coefficients, const MarketContext& ctx,
                                 double t)
    : coefficients_(std::move(coefficients)), ctx_(ctx), t_(t) {
  const ProjGrid& g = coefficients_.grid;
  exp_moment_ = integrate_on_knots(
      [&](double s) { return cubic_bspline(s) * std::exp(s * g.delta); }, -2.0, 2.0);
  const int n = g.n_basis;
  prefix_mass_.assign(n + 1, 0.0);
  prefix_exp_.assign(n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    prefix_mass_[k + 1] = prefix_mass_[k] + coefficients_.coeff[k];
    prefix_exp_[k + 1] = prefix_exp_[k] + coefficients_.coeff[k] * std::exp(g.node(k));
  }
}

double ProjSlicePricer::element_put_integral(int k, double log_strike, double strike) const {
  const ProjGrid& g = coefficients_.grid;
  const double xk = g.node(k);
  const double upper = (log_strike - xk) * g.a;
  return g.delta * integrate_on_knots(
                       [&](double s) {
                         return cubic_bspline(s) * (strike - ctx_.spot * std::exp(xk + s * g.delta));
                       },
                       -2.0, upper);
}

double ProjSlicePricer::put(double strike) const {
  if (!(strike > 0.0)) throw std::invalid_argument("strike must be positive");
  const ProjGrid& g = coefficients_.grid;
  const double log_strike = std::log(strike / ctx_.spot);
  if (log_strike < g.x1 || log_strike > g.x_last())
    throw PricingError("strike outside the PROJ grid support; increase l1");

  // Elements with x_k + 2 delta <= log_strike lie entirely in the exercise region.
  const int full = std::clamp(int(std::floor((log_strike - g.x1) * g.a - 2.0)) + 1, 0, g.n_basis);
  double sum = strike * g.delta * prefix_mass_[full] -
               ctx_.spot * g.delta * exp_moment_ * prefix_exp_[full];
  for (int k = full; k < g.n_basis; ++k) {
    if (g.node(k) - 2.0 * g.delta >= log_strike) break;
    sum += coefficients_.coeff[k] * element_put_integral(k, log_strike, strike);
  }
  return std::exp(-ctx_.rate * t_) * sum;
}

double ProjSlicePricer::call(double strike) const {
  return put(strike) + ctx_.spot * std::exp(-ctx_.div_yield * t_) -
         strike * std::exp(-ctx_.rate * t_);
}

double ProjSlicePricer::call_by_quadrature(double strike) const {
  const ProjGrid& g = coefficients_.grid;
  const double log_strike = std::log(strike / ctx_.spot);
  if (log_strike < g.x1 || log_strike > g.x_last())
    throw PricingError("strike outside the PROJ grid support; increase l1");
  double sum = 0.0;
  for (int k = 0; k < g.n_basis; ++k) {
    const double xk = g.node(k);
    if (xk + 2.0 * g.delta <= log_strike) continue;
    const double c = coefficients_.coeff[k];
    if (xk - 2.0 * g.delta >= log_strike) {
      sum += c * g.delta * (ctx_.spot * std::exp(xk) * exp_moment_ - strike);
      continue;
    }
    sum += c * g.delta *
           integrate_on_knots(
               [&](double s) {
                 return cubic_bspline(s) * (ctx_.spot * std::exp(xk + s * g.delta) - strike);
               },
               (log_strike - xk) * g.a, 2.0);
  }
  return std::exp(-ctx_.rate * t_) * sum;
}

std::vector<double> price_strike_slice(const ModelParams& model, const MarketContext& ctx,
                                       double t, std::span<const double> strikes,
                                       const std::vector<bool>& is_call, const GridSpec& spec) {
  if (strikes.size() != is_call.size())
    throw std::invalid_argument("price_strike_slice: strikes and flags differ in length");
  if (!(t > 0.0)) throw std::invalid_argument("maturity must be positive");
  const ProjGrid grid = make_grid(model, ctx, t, spec);
  const ProjSlicePricer pricer(proj_coefficients(model, ctx, t, grid), ctx, t);
  std::vector<double> prices(strikes.size());
  for (std::size_t i = 0; i < strikes.size(); ++i) prices[i] = pricer.price(strikes[i], is_call[i]);
  return prices;
}

double price_european(const ModelParams& model, const MarketContext& ctx, double t, double strike,
                      bool is_call, const GridSpec& spec) {
  const double strikes[] = {strike};
  return price_strike_slice(model, ctx, t, strikes, std::vector<bool>{is_call}, spec).front();
}

}  // namespace hkde
