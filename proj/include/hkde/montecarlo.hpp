#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hkde/models.hpp"
#include "hkde/random.hpp"

namespace hkde {

struct SimConfig {
  std::int64_t n_paths = 1'000'000;
  /// Euler substeps per monitoring interval; unset means the smallest count
  /// keeping dt <= 1/steps_per_year.
  std::optional<int> steps_per_interval;
  double steps_per_year = 250.0;
  std::uint64_t seed = 20240220;
  bool antithetic = true;
  /// Worker count; 0 means default_thread_count(). Part of the
  /// reproducibility key together with the seed.
  int threads = 0;
};

/// HKDE_THREADS if set, else the hardware concurrency.
int default_thread_count();

enum class DateSpacing {
  uniform_t_over_m,         // t_m = m T / M, so t_M = T
  uniform_t_over_m_plus_one // t_m = m T / (M + 1)
};

struct MonitoringSchedule {
  double maturity = 1.0;
  int intervals = 1;  // M
  DateSpacing spacing = DateSpacing::uniform_t_over_m;

  /// t_0 = 0 < t_1 < ... < t_M.
  std::vector<double> dates() const;
};

enum class ExoticKind {
  asian_call,
  asian_put,
  variance_swap,
  variance_call,
  cliquet,
  barrier_uo,
  barrier_do,
  barrier_double,
  european_call,
  european_put,
};

std::string_view exotic_kind_name(ExoticKind kind);
ExoticKind parse_exotic_kind(std::string_view name);

struct ExoticSpec {
  ExoticKind kind = ExoticKind::european_call;
  double strike = 0.0;
  double cap = 0.0;           // local cap C (cliquet)
  double floor = 0.0;         // local floor F (cliquet)
  double global_cap = 0.0;    // C_g
  double global_floor = 0.0;  // F_g
  double barrier_up = 0.0;    // U
  double barrier_down = 0.0;  // L
  bool barrier_is_call = true;
  MonitoringSchedule schedule;

  /// Throws std::invalid_argument when kind-specific fields are inconsistent.
  void validate(double spot) const;
};

/// Discounted payoff of one monitored path. `log_spot` holds ln S(t_m) for
/// m = 0..M on the contract's schedule.
double discounted_payoff(const ExoticSpec& spec, const MarketContext& ctx,
                         const double* log_spot);

struct McEstimate {
  double price = 0.0;
  double std_err = 0.0;
  double ci95_half_width = 0.0;
  std::int64_t n_paths = 0;
};

struct PathBatch {
  std::vector<double> dates;
  Eigen::MatrixXd log_spot;  // n_paths x (M + 1)
  Eigen::MatrixXd variance;  // n_paths x (M + 1), truncated at zero; zero for BGM
};

/// Materialises paths at the monitoring dates. With antithetic sampling,
/// rows 2i and 2i+1 form a pair. Intended for diagnostics and tests; the
/// pricing routines stream paths instead.
PathBatch simulate_paths(const ModelParams& model, const MarketContext& ctx,
                         const MonitoringSchedule& schedule, const SimConfig& config);

/// Prices several contracts that share one monitoring schedule on the same
/// simulated paths.
std::vector<McEstimate> price_exotics(const ModelParams& model, const MarketContext& ctx,
                                      const std::vector<ExoticSpec>& specs,
                                      const SimConfig& config);

McEstimate price_exotic(const ModelParams& model, const MarketContext& ctx, const ExoticSpec& spec,
                        const SimConfig& config);

McEstimate price_european_mc(const ModelParams& model, const MarketContext& ctx, double t,
                             double strike, bool is_call, const SimConfig& config);

/// Prices Europeans for several maturities (ascending) from one set of
/// paths; result[i][j] belongs to maturities[i], strikes[j].
std::vector<std::vector<McEstimate>> price_european_grid_mc(const ModelParams& model,
                                                            const MarketContext& ctx,
                                                            const std::vector<double>& maturities,
                                                            const std::vector<double>& strikes,
                                                            const std::vector<bool>& is_call,
                                                            const SimConfig& config);

/// One double-exponential jump size: Exp(eta1) with probability p, else -Exp(eta2).
double sample_kou_jump(Philox4x32& rng, const KouJumpParams& jumps);

/// Monte Carlo estimate of E[exp(i xi ln S_t)] (real and imaginary parts
/// with their standard errors); a check on the characteristic function.
struct CfEstimate {
  Complex value;
  double std_err_real = 0.0;
  double std_err_imag = 0.0;
};
CfEstimate estimate_cf_mc(const ModelParams& model, const MarketContext& ctx, double xi, double t,
                          const SimConfig& config);

}  // namespace hkde
