#include "hkde/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hkde {

namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("invalid parameters: ") + what);
}

void validate_heston(const HestonParams& h) {
  require(h.v0 > 0.0, "v0 > 0");
  require(h.theta > 0.0, "theta > 0");
  require(h.kappa > 0.0, "kappa > 0");
  require(h.sigma_v > 0.0, "sigma_v > 0");
  require(h.rho >= -1.0 && h.rho <= 1.0, "-1 <= rho <= 1");
}

void validate_kou(const KouJumpParams& j) {
  require(j.lam >= 0.0, "lam >= 0");
  require(j.p >= 0.0 && j.p <= 1.0, "0 <= p <= 1");
  require(j.eta1 > 1.0, "eta1 > 1");
  require(j.eta2 > 0.0, "eta2 > 0");
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

ModelKind kind_of(const ModelParams& model) {
  return std::visit(Overloaded{[](const HKDEParams&) { return ModelKind::hkde; },
                               [](const HestonParams&) { return ModelKind::heston; },
                               [](const BatesParams&) { return ModelKind::bates; },
                               [](const BGMParams&) { return ModelKind::bgm; }},
                    model);
}

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::hkde: return "hkde";
    case ModelKind::heston: return "heston";
    case ModelKind::bates: return "bates";
    case ModelKind::bgm: return "bgm";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "hkde") return ModelKind::hkde;
  if (name == "heston") return ModelKind::heston;
  if (name == "bates") return ModelKind::bates;
  if (name == "bgm") return ModelKind::bgm;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

const std::vector<std::string>& parameter_names(ModelKind kind) {
  static const std::vector<std::string> hkde{"v0",  "theta", "kappa", "sigma_v", "rho",
                                             "lam", "p",     "eta1",  "eta2"};
  static const std::vector<std::string> heston{"v0", "theta", "kappa", "sigma_v", "rho"};
  static const std::vector<std::string> bates{"v0",  "theta", "kappa", "sigma_v",
                                              "rho", "lam",   "mu_j",  "sigma_j"};
  static const std::vector<std::string> bgm{"alpha_p", "lam_p", "alpha_m", "lam_m", "sigma"};
  switch (kind) {
    case ModelKind::hkde: return hkde;
    case ModelKind::heston: return heston;
    case ModelKind::bates: return bates;
    case ModelKind::bgm: return bgm;
  }
  return heston;
}

std::vector<double> flatten(const ModelParams& model) {
  const auto heston = [](const HestonParams& h) {
    return std::vector<double>{h.v0, h.theta, h.kappa, h.sigma_v, h.rho};
  };
  return std::visit(
      Overloaded{
          [&](const HKDEParams& m) {
            auto v = heston(m.heston);
            v.insert(v.end(), {m.jumps.lam, m.jumps.p, m.jumps.eta1, m.jumps.eta2});
            return v;
          },
          [&](const HestonParams& m) { return heston(m); },
          [&](const BatesParams& m) {
            auto v = heston(m.heston);
            v.insert(v.end(), {m.lam, m.mu_j, m.sigma_j});
            return v;
          },
          [](const BGMParams& m) {
            return std::vector<double>{m.alpha_p, m.lam_p, m.alpha_m, m.lam_m, m.sigma};
          }},
      model);
}

ModelParams unflatten(ModelKind kind, const std::vector<double>& v) {
  if (v.size() != parameter_names(kind).size())
    throw std::invalid_argument("unflatten: wrong parameter count for " +
                                std::string(model_name(kind)));
  const HestonParams h{v[0], v[1], v[2], v.size() > 3 ? v[3] : 0.0, v.size() > 4 ? v[4] : 0.0};
  switch (kind) {
    case ModelKind::hkde: return HKDEParams{h, KouJumpParams{v[5], v[6], v[7], v[8]}};
    case ModelKind::heston: return h;
    case ModelKind::bates: return BatesParams{h, v[5], v[6], v[7]};
    case ModelKind::bgm: return BGMParams{v[0], v[1], v[2], v[3], v[4]};
  }
  return h;
}

void validate(const ModelParams& model) {
  std::visit(Overloaded{[](const HKDEParams& m) {
                          validate_heston(m.heston);
                          validate_kou(m.jumps);
                        },
                        [](const HestonParams& m) { validate_heston(m); },
                        [](const BatesParams& m) {
                          validate_heston(m.heston);
                          require(m.lam >= 0.0, "lam >= 0");
                          require(m.sigma_j > 0.0, "sigma_j > 0");
                        },
                        [](const BGMParams& m) {
                          require(m.alpha_p > 0.0 && m.alpha_m > 0.0, "alpha_p, alpha_m > 0");
                          require(m.lam_p > 1.0, "lam_p > 1");
                          require(m.lam_m > 0.0, "lam_m > 0");
                          require(m.sigma > 0.0, "sigma > 0");
                        }},
             model);
}

void validate(const MarketContext& ctx) {
  if (!(ctx.spot > 0.0)) throw DomainError("invalid market: spot > 0");
}

Complex log_return_exponent(const ModelParams& model, const MarketContext& ctx, Complex u,
                            double t) {
  const Complex drift = kI<double> * u * ((ctx.rate - ctx.div_yield) * t);
  const Complex part = std::visit(
      Overloaded{[&](const HKDEParams& m) {
                   return heston_exponent(u, t, m.heston) + kou_exponent(u, t, m.jumps);
                 },
                 [&](const HestonParams& m) { return heston_exponent(u, t, m); },
                 [&](const BatesParams& m) {
                   return heston_exponent(u, t, m.heston) + lognormal_jump_exponent(u, t, m);
                 },
                 [&](const BGMParams& m) { return bgm_exponent(u, t, m); }},
      model);
  return drift + part;
}

Complex cf_model(const ModelParams& model, const MarketContext& ctx, Complex xi, double t) {
  return std::exp(kI<double> * xi * std::log(ctx.spot) + log_return_exponent(model, ctx, xi, t));
}

Complex cf_heston(Complex xi, double t, const HestonParams& params, const MarketContext& ctx) {
  if (!(t > 0.0)) throw DomainError("cf_heston: t must be positive");
  const Complex forward =
      kI<double> * xi * (std::log(ctx.spot) + (ctx.rate - ctx.div_yield) * t);
  return std::exp(forward + heston_exponent(xi, t, params));
}

Complex cf_kou(Complex xi, double t, const KouJumpParams& jumps) {
  if (!(t >= 0.0)) throw DomainError("cf_kou: t must be non-negative");
  return std::exp(kou_exponent(xi, t, jumps));
}

double cumulants_kou(const KouJumpParams& j, double t, int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("cumulants_kou: order must be in 1..4");
  if (n == 1) return t * (j.lam * (j.p / j.eta1 - (1.0 - j.p) / j.eta2) + omega_kde(j));
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return factorial(n) * t * j.lam *
         (j.p / std::pow(j.eta1, n) + sign * (1.0 - j.p) / std::pow(j.eta2, n));
}

double exponent_scale(const ModelParams& model) {
  constexpr double kDefault = 1.0;
  const auto kou = [](const KouJumpParams& j) {
    double r = std::numeric_limits<double>::infinity();
    if (j.lam > 0.0 && j.p > 0.0) r = std::min(r, j.eta1);
    if (j.lam > 0.0 && j.p < 1.0) r = std::min(r, j.eta2);
    return r;
  };
  return std::visit(
      Overloaded{[&](const HKDEParams& m) { return std::min(kDefault, kou(m.jumps)); },
                 [&](const HestonParams&) { return kDefault; },
                 [&](const BatesParams& m) {
                   if (m.lam == 0.0) return kDefault;
                   return std::min(kDefault, 1.0 / (std::abs(m.mu_j) + 3.0 * m.sigma_j));
                 },
                 [&](const BGMParams& m) {
                   return std::min({kDefault, m.lam_p, m.lam_m, 1.0 / (3.0 * m.sigma)});
                 }},
      model);
}

double cumulants_numeric(const ModelParams& model, const MarketContext& ctx, double t, int n) {
  const auto psi = [&](double u) { return log_return_exponent(model, ctx, Complex(u, 0.0), t); };
  return numeric_cumulant(psi, n, exponent_scale(model));
}

}  // namespace hkde
