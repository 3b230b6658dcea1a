#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hkde/numeric.hpp"

namespace hkde {

/// Thrown when parameters fall outside the domain of a closed form.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct MarketContext {
  double spot = 100.0;
  double rate = 0.0;       // continuously compounded
  double div_yield = 0.0;  // continuous
};

struct HestonParams {
  double v0 = 0.04;
  double theta = 0.04;
  double kappa = 1.0;
  double sigma_v = 0.5;
  double rho = -0.5;
};

struct KouJumpParams {
  double lam = 0.0;
  double p = 0.5;
  double eta1 = 10.0;
  double eta2 = 10.0;
};

struct HKDEParams {
  HestonParams heston;
  KouJumpParams jumps;
};

struct BatesParams {
  HestonParams heston;
  double lam = 0.0;
  double mu_j = 0.0;
  double sigma_j = 0.1;
};

struct BGMParams {
  double alpha_p = 1.0;
  double lam_p = 10.0;
  double alpha_m = 1.0;
  double lam_m = 10.0;
  double sigma = 0.2;
};

using ModelParams = std::variant<HKDEParams, HestonParams, BatesParams, BGMParams>;

enum class ModelKind { hkde, heston, bates, bgm };

ModelKind kind_of(const ModelParams& model);
std::string_view model_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Parameter names in the order used by flatten()/unflatten() and the JSON schema.
const std::vector<std::string>& parameter_names(ModelKind kind);
std::vector<double> flatten(const ModelParams& model);
ModelParams unflatten(ModelKind kind, const std::vector<double>& values);

/// Throws DomainError naming the first violated invariant.
void validate(const ModelParams& model);
void validate(const MarketContext& ctx);

// ---------------------------------------------------------------------------
// Characteristic exponents. Each returns the log of the characteristic
// function of the log-return ln(S_t/S_0) contributed by one model component,
// excluding the deterministic (r - q) drift. `u` may be complex; u = -i gives
// the log of E[S_t/S_0] / e^{(r-q)t}, which must vanish.
// ---------------------------------------------------------------------------

template <typename Real>
std::complex<Real> heston_exponent(const std::complex<Real>& u, Real t, const HestonParams& p) {
  using C = std::complex<Real>;
  const Real kappa = Real(p.kappa), theta = Real(p.theta), sigma = Real(p.sigma_v);
  const Real rho = Real(p.rho), v0 = Real(p.v0);
  const Real sigma2 = sigma * sigma;

  const C iu = kI<Real> * u;
  const C beta = kappa - rho * sigma * iu;
  const C s = iu + u * u;
  C d = std::sqrt(beta * beta + sigma2 * s);
  if (std::abs(beta + d) < std::abs(beta - d)) d = -d;

  // (beta - d) / sigma^2 without cancellation: beta^2 - d^2 = -sigma^2 s.
  const C bmd_over_s2 = -s / (beta + d);
  const C g = sigma2 * bmd_over_s2 / (beta + d);
  const C e = std::exp(-d * t);
  const C log_ratio = hkde::log1p(C(-g * e)) - hkde::log1p(C(-g));

  const C big_d = bmd_over_s2 * (Real(1) - e) / (Real(1) - g * e);
  const C big_c = kappa * theta * (bmd_over_s2 * t - Real(2) * log_ratio / sigma2);
  return big_c + big_d * v0;
}

/// Drift compensator of the double-exponential jumps, per year.
template <typename Real = double>
Real omega_kde(const KouJumpParams& j) {
  if (!(j.eta1 > 1.0)) throw DomainError("omega_kde: eta1 must exceed 1");
  const Real lam = Real(j.lam), p = Real(j.p), eta1 = Real(j.eta1), eta2 = Real(j.eta2);
  // p*eta1/(eta1-1) + (1-p)*eta2/(eta2+1) - 1, rearranged to avoid cancellation.
  return -lam * (p / (eta1 - Real(1)) - (Real(1) - p) / (eta2 + Real(1)));
}

template <typename Real>
std::complex<Real> kou_exponent(const std::complex<Real>& u, Real t, const KouJumpParams& j) {
  using C = std::complex<Real>;
  const Real lam = Real(j.lam), p = Real(j.p), eta1 = Real(j.eta1), eta2 = Real(j.eta2);
  const C iu = kI<Real> * u;
  const Real omega = omega_kde<Real>(j);
  // lam * (p eta1/(eta1 - iu) + (1-p) eta2/(eta2 + iu) - 1)
  const C jump = lam * (p * iu / (eta1 - iu) - (Real(1) - p) * iu / (eta2 + iu));
  return t * (jump + omega * iu);
}

template <typename Real>
std::complex<Real> lognormal_jump_exponent(const std::complex<Real>& u, Real t,
                                           const BatesParams& b) {
  using C = std::complex<Real>;
  const Real lam = Real(b.lam), mu = Real(b.mu_j), sj = Real(b.sigma_j);
  const C iu = kI<Real> * u;
  const C jump = lam * hkde::expm1(C(iu * mu - sj * sj * u * u / Real(2)));
  const Real omega = -lam * std::expm1(mu + sj * sj / Real(2));
  return t * (jump + omega * iu);
}

template <typename Real>
std::complex<Real> bgm_exponent(const std::complex<Real>& u, Real t, const BGMParams& b) {
  using C = std::complex<Real>;
  const Real ap = Real(b.alpha_p), lp = Real(b.lam_p), am = Real(b.alpha_m), lm = Real(b.lam_m);
  const Real sigma = Real(b.sigma);
  const C iu = kI<Real> * u;
  const Real omega = -sigma * sigma / Real(2) + ap * std::log1p(-Real(1) / lp) +
                     am * std::log1p(Real(1) / lm);
  const C levy = -ap * hkde::log1p(C(-iu / lp)) - am * hkde::log1p(C(iu / lm)) -
                 sigma * sigma * u * u / Real(2);
  return t * (levy + omega * iu);
}

/// Characteristic exponent of ln(S_t/S_0) for any model, including the
/// risk-neutral (r - q) drift.
Complex log_return_exponent(const ModelParams& model, const MarketContext& ctx, Complex u,
                            double t);

/// phi(xi, t) = E[exp(i xi ln S_t)].
Complex cf_model(const ModelParams& model, const MarketContext& ctx, Complex xi, double t);

/// Heston characteristic function of ln S_t, forward factor included.
Complex cf_heston(Complex xi, double t, const HestonParams& params, const MarketContext& ctx);

/// Characteristic function of the compensated Kou jump component.
Complex cf_kou(Complex xi, double t, const KouJumpParams& jumps);

/// Closed-form cumulant of order n (1..4) of the compensated Kou component.
double cumulants_kou(const KouJumpParams& jumps, double t, int n);

/// Radius (in frequency units) of the disc around zero in which the model's
/// characteristic exponent is analytic, or a conservative stand-in for it.
/// Sets the starting step of the numerical cumulant stencil.
double exponent_scale(const ModelParams& model);

/// Numerical cumulant of order n (1..4) of the log-return ln(S_t/S_0),
/// obtained from Richardson-extrapolated central differences of the
/// characteristic exponent along the real frequency axis.
double cumulants_numeric(const ModelParams& model, const MarketContext& ctx, double t, int n);

/// Same machinery for an arbitrary exponent psi(u) (u real); used for
/// single components and by tests.
template <typename Exponent>
double numeric_cumulant(const Exponent& psi, int n, double scale) {
  if (n < 1 || n > 4) throw std::invalid_argument("numeric_cumulant: order must be in 1..4");
  const auto f = [&](double u) { return Complex(psi(u)); };
  const Complex deriv = ridders_derivative(f, n, 0.25 * scale).value;
  // kappa_n = (-i)^n psi^(n)(0)
  Complex factor(1.0, 0.0);
  for (int k = 0; k < n; ++k) factor *= Complex(0.0, -1.0);
  return (factor * deriv).real();
}

}  // namespace hkde
