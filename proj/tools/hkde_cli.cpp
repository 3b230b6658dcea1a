// hkde: calibrate, price and cross-check the HKDE model family from the shell.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hkde/calibration.hpp"
#include "hkde/io.hpp"
#include "hkde/montecarlo.hpp"
#include "hkde/proj.hpp"
#include "hkde/vol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hkde;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

double to_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(to_number(p, what));
  if (out.empty()) throw UsageError("empty " + what);
  return out;
}

// "name=+50%", "name=-10%" or a plain multiplicative factor "name=1.5".
ModelParams apply_bump(const ModelParams& model, const std::string& bump) {
  const auto eq = bump.find('=');
  if (eq == std::string::npos) throw UsageError("bump must look like name=factor or name=+N%");
  const std::string name = bump.substr(0, eq);
  std::string value = bump.substr(eq + 1);
  double factor;
  if (!value.empty() && value.back() == '%') {
    value.pop_back();
    factor = 1.0 + to_number(value, "bump percentage") / 100.0;
  } else {
    factor = to_number(value, "bump factor");
  }
  const ModelKind kind = kind_of(model);
  const auto& names = parameter_names(kind);
  std::vector<double> x = flatten(model);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw UsageError("unknown parameter '" + name + "' for model " + std::string(model_name(kind)));
  x[std::size_t(it - names.begin())] *= factor;
  ModelParams bumped = unflatten(kind, x);
  validate(bumped);
  return bumped;
}

SimConfig sim_config(std::int64_t paths, std::uint64_t seed, int steps, double steps_per_year,
                     int threads, bool plain) {
  SimConfig c;
  c.n_paths = paths;
  c.seed = seed;
  if (steps > 0) c.steps_per_interval = steps;
  c.steps_per_year = steps_per_year;
  c.threads = threads;
  c.antithetic = !plain;
  return c;
}

json sim_json(const SimConfig& c) {
  return {{"paths", c.n_paths},
          {"seed", c.seed},
          {"antithetic", c.antithetic},
          {"steps_per_interval", c.steps_per_interval ? json(*c.steps_per_interval) : json("auto")},
          {"steps_per_year", c.steps_per_year},
          {"threads", c.threads > 0 ? c.threads : default_thread_count()}};
}

bool is_european(const ExoticSpec& spec) {
  return spec.kind == ExoticKind::european_call || spec.kind == ExoticKind::european_put;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Common {
  int n_basis = 4096;
  double l1 = 12.0;
  GridSpec grid() const { return {n_basis, l1}; }
};

struct McFlags {
  std::int64_t paths = 1'000'000;
  std::uint64_t seed = 20240220;
  int steps = 0;
  double steps_per_year = 250.0;
  int threads = 0;
  bool plain = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--paths", paths, "Monte Carlo paths")->check(CLI::Range(2LL, 1LL << 40));
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--steps", steps, "Euler substeps per monitoring interval (0 = auto)");
    cmd->add_option("--steps-per-year", steps_per_year, "auto substep density: dt <= 1/N")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "worker threads (0 = HKDE_THREADS or all cores)");
    cmd->add_flag("--no-antithetic", plain, "disable antithetic pairing");
  }
  SimConfig config() const { return sim_config(paths, seed, steps, steps_per_year, threads, plain); }
};

void add_grid_flags(CLI::App* cmd, Common& common) {
  cmd->add_option("--n-basis", common.n_basis, "PROJ basis size (power of two)");
  cmd->add_option("--l1", common.l1, "PROJ grid width multiplier");
}

// --- calibrate ----------------------------------------------------------------

struct CalibrateArgs {
  std::string model, quotes, out, metrics, init, schedule = "1e-4,1e-6,1e-8";
  int max_iter = 200;
  Common common;
};

void cmd_calibrate(const CalibrateArgs& a) {
  const ModelKind kind = parse_model_kind(a.model);
  const QuoteSurface surface = load_quotes(a.quotes);
  for (const auto& w : surface.warnings) std::cerr << "warning: " << w << '\n';

  CalibrationOptions options;
  options.tolerance_schedule = parse_list(a.schedule, "tolerance schedule");
  options.max_iterations_per_stage = a.max_iter;
  options.grid = a.common.grid();

  ModelParams init = default_initial_guess(kind, surface);
  if (!a.init.empty()) {
    init = load_params(a.init).model;
    if (kind_of(init) != kind) throw UsageError("--init holds parameters of another model");
  }
  const auto start = std::chrono::steady_clock::now();
  const CalibrationResult r = calibrate(kind, surface, init, default_bounds(kind), options);
  const double elapsed = seconds_since(start);

  const Tenor& first = surface.tenors.front();
  const json config{{"model", a.model},
                    {"quotes", a.quotes},
                    {"tolerance_schedule", options.tolerance_schedule},
                    {"max_iterations_per_stage", a.max_iter},
                    {"n_basis", a.common.n_basis},
                    {"l1", a.common.l1},
                    {"init", params_to_json(init)}};
  const json summary{{"objective", r.objective},
                     {"initial_objective", r.initial_objective},
                     {"iterations", r.iterations},
                     {"evaluations", r.evaluations},
                     {"trace", r.trace},
                     {"stagnated", r.stagnated},
                     {"message", r.message},
                     {"seconds", elapsed}};
  save_params(a.out, {r.params, surface.context(first)},
              {{"calibration", summary}, {"config", config}});

  json per_quote = json::array();
  std::size_t i = 0;
  for (const auto& tenor : surface.tenors)
    for (const auto& q : tenor.quotes) {
      per_quote.push_back({{"maturity", tenor.maturity},
                           {"strike", q.strike},
                           {"option_type", q.is_call ? "C" : "P"},
                           {"market_price", q.price},
                           {"market_iv", q.iv},
                           {"model_price", q.price + r.residuals[Eigen::Index(i)]},
                           {"weight", q.weight}});
      ++i;
    }
  const json metrics{{"model", a.model},
                     {"mape_pct", r.mape},
                     {"rmse_iv", r.rmse},
                     {"objective", r.objective},
                     {"quotes", surface.quote_count()},
                     {"excluded_quotes", r.excluded_quotes},
                     {"warnings", surface.warnings},
                     {"per_quote", per_quote},
                     {"calibration", summary},
                     {"config", config}};
  fs::path metrics_path = a.metrics;
  if (metrics_path.empty()) {
    metrics_path = fs::path(a.out);
    metrics_path.replace_extension(".metrics.json");
  }
  write_text(metrics_path, metrics.dump(2) + "\n");
  std::cout << "model=" << a.model << " objective=" << format_double(r.objective)
            << " mape_pct=" << format_double(r.mape) << " rmse_iv=" << format_double(r.rmse)
            << " stagnated=" << (r.stagnated ? "true" : "false") << '\n';
}

// --- price --------------------------------------------------------------------

struct PriceArgs {
  std::string params, contract;
  bool force_mc = false;
  McFlags mc;
  Common common;
};

void cmd_price(const PriceArgs& a) {
  const ParamsDocument doc = load_params(a.params);
  const ExoticSpec spec = load_contract(a.contract);
  spec.validate(doc.market.spot);
  json out{{"contract", contract_to_json(spec)},
           {"params", params_to_json(doc.model)},
           {"market", market_to_json(doc.market)}};
  if (is_european(spec) && !a.force_mc) {
    const double price =
        price_european(doc.model, doc.market, spec.schedule.maturity, spec.strike,
                       spec.kind == ExoticKind::european_call, a.common.grid());
    out["method"] = "proj";
    out["price"] = price;
    out["grid"] = {{"n_basis", a.common.n_basis}, {"l1", a.common.l1}};
  } else {
    const SimConfig cfg = a.mc.config();
    const McEstimate e = price_exotic(doc.model, doc.market, spec, cfg);
    out["method"] = "mc";
    out["price"] = e.price;
    out["std_err"] = e.std_err;
    out["ci95_half_width"] = e.ci95_half_width;
    out["simulation"] = sim_json(cfg);
  }
  std::cout << out.dump(2) << '\n';
}

// --- smile --------------------------------------------------------------------

struct SmileArgs {
  std::string params, strikes, out;
  double maturity = 0.0;
  std::vector<std::string> bumps;
  Common common;
};

std::vector<double> implied_curve(const ModelParams& model, const MarketContext& ctx, double t,
                                  const std::vector<double>& strikes, const GridSpec& grid) {
  const double forward = ctx.spot * std::exp((ctx.rate - ctx.div_yield) * t);
  std::vector<bool> calls;
  for (double k : strikes) calls.push_back(k >= forward);
  const std::vector<double> prices = price_strike_slice(model, ctx, t, strikes, calls, grid);
  std::vector<double> ivs;
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    try {
      ivs.push_back(implied_vol(ctx, t, strikes[i], prices[i], calls[i]));
    } catch (const ImpliedVolError&) {
      ivs.push_back(std::nan(""));
    }
  }
  return ivs;
}

void cmd_smile(const SmileArgs& a) {
  const ParamsDocument doc = load_params(a.params);
  if (!(a.maturity > 0.0)) throw UsageError("--maturity must be positive");
  const auto range = split(a.strikes, ':');
  if (range.size() != 3) throw UsageError("--strikes must be LO:HI:STEP");
  const double lo = to_number(range[0], "strike"), hi = to_number(range[1], "strike");
  const double step = to_number(range[2], "strike step");
  if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0)) throw UsageError("--strikes needs 0 < LO <= HI and STEP > 0");
  std::vector<double> strikes;
  for (int i = 0; lo + i * step <= hi * (1.0 + 1e-12); ++i) strikes.push_back(lo + i * step);

  std::vector<std::vector<double>> curves{
      implied_curve(doc.model, doc.market, a.maturity, strikes, a.common.grid())};
  for (const auto& b : a.bumps)
    curves.push_back(implied_curve(apply_bump(doc.model, b), doc.market, a.maturity, strikes,
                                   a.common.grid()));

  std::ostringstream os;
  os << "log_moneyness,strike,implied_vol";
  for (const auto& b : a.bumps) os << ",implied_vol[" << b << "]";
  os << '\n';
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    os << format_double(std::log(strikes[i] / doc.market.spot)) << ',' << format_double(strikes[i]);
    for (const auto& c : curves) os << ',' << (std::isnan(c[i]) ? std::string() : format_double(c[i]));
    os << '\n';
  }
  write_text(a.out, os.str());
}

// --- mc-compare ---------------------------------------------------------------

struct CompareArgs {
  std::string params, contract, out;
  McFlags mc;
  Common common;
};

void cmd_mc_compare(const CompareArgs& a) {
  const ParamsDocument doc = load_params(a.params);
  const ExoticSpec spec = load_contract(a.contract);
  spec.validate(doc.market.spot);
  std::string proj = "n/a", proj_time = "n/a";
  if (is_european(spec)) {
    const auto start = std::chrono::steady_clock::now();
    const double price =
        price_european(doc.model, doc.market, spec.schedule.maturity, spec.strike,
                       spec.kind == ExoticKind::european_call, a.common.grid());
    proj_time = format_double(seconds_since(start));
    proj = format_double(price);
  }
  const auto start = std::chrono::steady_clock::now();
  const McEstimate e = price_exotic(doc.model, doc.market, spec, a.mc.config());
  const double mc_time = seconds_since(start);

  std::ostringstream os;
  os << "model,kind,strike,maturity,monitoring,proj,mc,ci95_half_width,std_err,paths,seed,"
        "time_proj_s,time_mc_s\n";
  os << model_name(kind_of(doc.model)) << ',' << exotic_kind_name(spec.kind) << ','
     << format_double(spec.strike) << ',' << format_double(spec.schedule.maturity) << ','
     << spec.schedule.intervals << ',' << proj << ',' << format_double(e.price) << ','
     << format_double(e.ci95_half_width) << ',' << format_double(e.std_err) << ',' << e.n_paths
     << ',' << a.mc.seed << ',' << proj_time << ',' << format_double(mc_time) << '\n';
  write_text(a.out, os.str());
  std::cout << os.str();
}

// --- synth --------------------------------------------------------------------

struct SynthArgs {
  std::string params, grid, out;
  Common common;
};

void cmd_synth(const SynthArgs& a) {
  const ParamsDocument doc = load_params(a.params);
  const auto parts = split(a.grid, ':');
  if (parts.size() < 2 || parts.size() > 3) throw UsageError("--grid must be T1,T2,...:NK[:WIDTH]");
  const std::vector<double> maturities = parse_list(parts[0], "maturity");
  const double nk = to_number(parts[1], "strike count");
  if (nk < 2 || nk != std::floor(nk)) throw UsageError("strike count must be an integer >= 2");
  const double width = parts.size() == 3 ? to_number(parts[2], "width") : 0.45;
  const auto quotes =
      synthetic_quotes(doc.model, doc.market, maturities, int(nk), width, a.common.grid());
  save_quotes(a.out, doc.market.spot, quotes);
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const char* code, const std::string& msg, int status = 1) {
  std::cerr << "error code=" << code << " msg=" << one_line(msg) << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HKDE pricing and calibration toolkit"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "fit a model to a quote CSV");
  c->add_option("--model", cal.model, "hkde | heston | bates | bgm")->required();
  c->add_option("--quotes", cal.quotes, "quote CSV")->required();
  c->add_option("--out", cal.out, "output params JSON")->required();
  c->add_option("--metrics", cal.metrics, "metrics JSON (default: <out stem>.metrics.json)");
  c->add_option("--init", cal.init, "params JSON used as starting point");
  c->add_option("--tol-schedule", cal.schedule, "comma-separated relative cost tolerances");
  c->add_option("--max-iter", cal.max_iter, "iteration cap per tolerance stage");
  add_grid_flags(c, cal.common);

  PriceArgs pr;
  auto* p = app.add_subcommand("price", "price one contract");
  p->add_option("--params", pr.params, "params JSON")->required();
  p->add_option("--contract", pr.contract, "contract JSON")->required();
  p->add_flag("--mc", pr.force_mc, "use Monte Carlo for European contracts too");
  pr.mc.attach(p);
  add_grid_flags(p, pr.common);

  SmileArgs sm;
  auto* s = app.add_subcommand("smile", "implied-volatility smile as CSV");
  s->add_option("--params", sm.params, "params JSON")->required();
  s->add_option("--maturity", sm.maturity, "maturity in years")->required();
  s->add_option("--strikes", sm.strikes, "LO:HI:STEP")->required();
  s->add_option("--bump", sm.bumps, "name=factor or name=+N% (repeatable)");
  s->add_option("--out", sm.out, "output CSV")->required();
  add_grid_flags(s, sm.common);

  CompareArgs cmp;
  auto* m = app.add_subcommand("mc-compare", "PROJ vs Monte Carlo table row");
  m->add_option("--params", cmp.params, "params JSON")->required();
  m->add_option("--contract", cmp.contract, "contract JSON")->required();
  m->add_option("--out", cmp.out, "output CSV")->required();
  cmp.mc.attach(m);
  add_grid_flags(m, cmp.common);

  SynthArgs sy;
  auto* y = app.add_subcommand("synth", "synthetic quote CSV from model prices");
  y->add_option("--params", sy.params, "params JSON")->required();
  y->add_option("--grid", sy.grid, "T1,T2,...:NK[:WIDTH]")->required();
  y->add_option("--out", sy.out, "output CSV")->required();
  add_grid_flags(y, sy.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (c->parsed()) cmd_calibrate(cal);
    if (p->parsed()) cmd_price(pr);
    if (s->parsed()) cmd_smile(sm);
    if (m->parsed()) cmd_mc_compare(cmp);
    if (y->parsed()) cmd_synth(sy);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const IoError& e) {
    return fail("io", e.line() > 0 ? "line " + std::to_string(e.line()) + ": " + e.what()
                                   : std::string(e.what()));
  } catch (const DomainError& e) {
    return fail("domain", e.what());
  } catch (const PricingError& e) {
    return fail("pricing", e.what());
  } catch (const ImpliedVolError& e) {
    return fail("implied_vol", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
