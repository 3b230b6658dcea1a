#include "hkde/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "hkde/vol.hpp"

namespace hkde {

using nlohmann::json;

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, end);
}

// --- parameters -------------------------------------------------------------

json params_to_json(const ModelParams& model) {
  const ModelKind kind = kind_of(model);
  const auto& names = parameter_names(kind);
  const std::vector<double> values = flatten(model);
  json params = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
  return {{"model", std::string(model_name(kind))}, {"params", params}};
}

ModelParams params_from_json(const json& doc) {
  try {
    const ModelKind kind = parse_model_kind(doc.at("model").get<std::string>());
    const json& params = doc.at("params");
    const auto& names = parameter_names(kind);
    std::vector<double> values;
    for (const auto& name : names) {
      if (!params.contains(name)) throw IoError("params: missing field '" + name + "'");
      values.push_back(params.at(name).get<double>());
    }
    for (const auto& [key, value] : params.items())
      if (std::find(names.begin(), names.end(), key) == names.end())
        throw IoError("params: unknown field '" + key + "' for model " + doc.at("model").get<std::string>());
    ModelParams model = unflatten(kind, values);
    validate(model);
    return model;
  } catch (const json::exception& e) {
    throw IoError(std::string("params: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("params: ") + e.what());
  }
}

json market_to_json(const MarketContext& ctx) {
  return {{"spot", ctx.spot}, {"rate", ctx.rate}, {"div_yield", ctx.div_yield}};
}

ParamsDocument load_params(const std::filesystem::path& path) {
  const json doc = read_json(path);
  ParamsDocument out;
  out.model = params_from_json(doc);
  if (doc.contains("market")) {
    try {
      const json& m = doc.at("market");
      out.market.spot = m.value("spot", out.market.spot);
      out.market.rate = m.value("rate", out.market.rate);
      out.market.div_yield = m.value("div_yield", out.market.div_yield);
    } catch (const json::exception& e) {
      throw IoError(std::string("market: ") + e.what());
    }
    validate(out.market);
  }
  return out;
}

void save_params(const std::filesystem::path& path, const ParamsDocument& doc,
                 const json& extra) {
  json out = params_to_json(doc.model);
  out["market"] = market_to_json(doc.market);
  for (const auto& [key, value] : extra.items()) out[key] = value;
  write_text(path, out.dump(2) + "\n");
}

// --- quotes -----------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::optional<double> parse_number(const std::string& text, const char* column, int line,
                                   bool required) {
  if (text.empty()) {
    if (required) throw IoError(std::string("missing ") + column, line);
    return std::nullopt;
  }
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
    throw IoError(std::string("bad number in ") + column + ": '" + text + "'", line);
  return value;
}

}  // namespace

QuoteFile read_quote_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  QuoteFile file;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::map<double, std::pair<double, double>> tenor_rates;
  auto report = [&](const std::string& what) {
    file.report.push_back("line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      if (compact != kQuoteHeader)
        throw IoError(std::string("header must be '") + kQuoteHeader + "'", line_no);
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 8) throw IoError("expected 8 fields, found " + std::to_string(f.size()), line_no);

    MarketQuote mq;
    mq.quote.maturity = *parse_number(f[0], "maturity_yrs", line_no, true);
    mq.quote.strike = *parse_number(f[1], "strike", line_no, true);
    std::string type = f[2];
    std::transform(type.begin(), type.end(), type.begin(), ::toupper);
    if (type != "C" && type != "P") throw IoError("option_type must be C or P", line_no);
    mq.quote.is_call = type == "C";
    mq.quote.price = parse_number(f[3], "mid_price", line_no, false);
    mq.quote.iv = parse_number(f[4], "iv", line_no, false);
    mq.rate = *parse_number(f[5], "rate", line_no, true);
    mq.div_yield = *parse_number(f[6], "div_yield", line_no, true);
    const double spot = *parse_number(f[7], "spot", line_no, true);

    if (!(spot > 0.0)) throw IoError("spot must be positive", line_no);
    if (file.spot == 0.0) file.spot = spot;
    if (spot != file.spot) throw IoError("file mixes several spot values", line_no);

    if (!(mq.quote.maturity > 0.0) || !(mq.quote.strike > 0.0)) {
      report("non-positive maturity or strike; skipped");
      continue;
    }
    const auto [it, fresh] =
        tenor_rates.try_emplace(mq.quote.maturity, std::pair{mq.rate, mq.div_yield});
    if (!fresh && it->second != std::pair{mq.rate, mq.div_yield})
      throw IoError("rate/div_yield differ from earlier rows of the same maturity", line_no);

    if (!mq.quote.price && !mq.quote.iv) {
      report("neither mid_price nor iv given; skipped");
      continue;
    }
    const MarketContext ctx{spot, mq.rate, mq.div_yield};
    if (mq.quote.price) {
      const auto [lo, hi] = price_bounds(ctx, mq.quote.maturity, mq.quote.strike, mq.quote.is_call);
      if (!(*mq.quote.price > lo) || !(*mq.quote.price < hi)) {
        std::ostringstream os;
        os << "price " << *mq.quote.price << " violates no-arbitrage bounds (" << lo << ", " << hi
           << "); skipped";
        report(os.str());
        continue;
      }
    } else if (!(*mq.quote.iv > 0.0)) {
      report("iv must be positive; skipped");
      continue;
    }
    file.quotes.push_back(mq);
  }
  if (!header_seen) throw IoError(path.string() + ": empty file");
  if (file.quotes.empty()) throw IoError(path.string() + ": no valid quotes");
  return file;
}

QuoteSurface load_quotes(const std::filesystem::path& path) {
  const QuoteFile file = read_quote_file(path);
  QuoteSurface surface;
  try {
    surface = build_surface(file.spot, file.quotes);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  surface.warnings.insert(surface.warnings.begin(), file.report.begin(), file.report.end());
  return surface;
}

void save_quotes(const std::filesystem::path& path, double spot,
                 const std::vector<MarketQuote>& quotes) {
  std::ostringstream os;
  os << kQuoteHeader << '\n';
  for (const auto& mq : quotes) {
    const Quote& q = mq.quote;
    os << format_double(q.maturity) << ',' << format_double(q.strike) << ','
       << (q.is_call ? 'C' : 'P') << ',' << (q.price ? format_double(*q.price) : "") << ','
       << (q.iv ? format_double(*q.iv) : "") << ',' << format_double(mq.rate) << ','
       << format_double(mq.div_yield) << ',' << format_double(spot) << '\n';
  }
  write_text(path, os.str());
}

// --- contracts --------------------------------------------------------------

ExoticSpec contract_from_json(const json& doc) {
  ExoticSpec spec;
  try {
    spec.kind = parse_exotic_kind(doc.at("kind").get<std::string>());
    spec.schedule.maturity = doc.at("maturity").get<double>();
    spec.schedule.intervals = doc.value("monitoring", 1);
    spec.strike = doc.value("strike", 0.0);
    spec.cap = doc.value("cap", 0.0);
    spec.floor = doc.value("floor", 0.0);
    spec.global_cap = doc.value("global_cap", std::numeric_limits<double>::infinity());
    spec.global_floor = doc.value("global_floor", -std::numeric_limits<double>::infinity());
    spec.barrier_up = doc.value("barrier_up", std::numeric_limits<double>::infinity());
    spec.barrier_down = doc.value("barrier_down", 0.0);
    const std::string type = doc.value("option_type", std::string("call"));
    if (type != "call" && type != "put") throw IoError("contract: option_type must be call or put");
    spec.barrier_is_call = type == "call";
    const std::string spacing = doc.value("spacing", std::string("t_over_m"));
    if (spacing == "t_over_m") {
      spec.schedule.spacing = DateSpacing::uniform_t_over_m;
    } else if (spacing == "t_over_m_plus_one") {
      spec.schedule.spacing = DateSpacing::uniform_t_over_m_plus_one;
    } else {
      throw IoError("contract: spacing must be t_over_m or t_over_m_plus_one");
    }
    if (spec.kind == ExoticKind::cliquet && (!doc.contains("cap") || !doc.contains("floor")))
      throw IoError("contract: cliquet needs cap and floor");
  } catch (const json::exception& e) {
    throw IoError(std::string("contract: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("contract: ") + e.what());
  }
  return spec;
}

json contract_to_json(const ExoticSpec& spec) {
  json doc{{"kind", std::string(exotic_kind_name(spec.kind))},
           {"strike", spec.strike},
           {"maturity", spec.schedule.maturity},
           {"monitoring", spec.schedule.intervals},
           {"spacing", spec.schedule.spacing == DateSpacing::uniform_t_over_m ? "t_over_m"
                                                                               : "t_over_m_plus_one"}};
  switch (spec.kind) {
    case ExoticKind::cliquet:
      doc["cap"] = spec.cap;
      doc["floor"] = spec.floor;
      if (std::isfinite(spec.global_cap)) doc["global_cap"] = spec.global_cap;
      if (std::isfinite(spec.global_floor)) doc["global_floor"] = spec.global_floor;
      break;
    case ExoticKind::barrier_uo:
    case ExoticKind::barrier_do:
    case ExoticKind::barrier_double:
      if (std::isfinite(spec.barrier_up)) doc["barrier_up"] = spec.barrier_up;
      if (spec.barrier_down > 0.0) doc["barrier_down"] = spec.barrier_down;
      doc["option_type"] = spec.barrier_is_call ? "call" : "put";
      break;
    default:
      break;
  }
  return doc;
}

ExoticSpec load_contract(const std::filesystem::path& path) {
  return contract_from_json(read_json(path));
}

}  // namespace hkde
