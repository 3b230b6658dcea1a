#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkde/calibration.hpp"
#include "hkde/models.hpp"
#include "hkde/montecarlo.hpp"

namespace hkde {

/// Malformed input files. `line` is 1-based when known, 0 otherwise.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, int line = 0) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ParamsDocument {
  ModelParams model;
  MarketContext market{100.0, 0.05, 0.0};
};

nlohmann::json params_to_json(const ModelParams& model);
ModelParams params_from_json(const nlohmann::json& doc);
nlohmann::json market_to_json(const MarketContext& ctx);

/// {"model": ..., "params": {...}, "market": {"spot", "rate", "div_yield"}}; the
/// market block is optional on input.
ParamsDocument load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ParamsDocument& doc,
                 const nlohmann::json& extra = nlohmann::json::object());

/// Column order of the quote CSV.
inline constexpr const char* kQuoteHeader =
    "maturity_yrs,strike,option_type,mid_price,iv,rate,div_yield,spot";

struct QuoteFile {
  double spot = 0.0;
  std::vector<MarketQuote> quotes;  // rows that passed validation, file order
  std::vector<std::string> report;  // "line N: ..." for skipped or suspicious rows
};

/// Parses and validates the quote CSV. Rows with unparsable fields raise
/// IoError; rows violating static no-arbitrage bounds are reported and skipped.
QuoteFile read_quote_file(const std::filesystem::path& path);

/// read_quote_file followed by build_surface; the report is merged into the
/// surface warnings.
QuoteSurface load_quotes(const std::filesystem::path& path);

void save_quotes(const std::filesystem::path& path, double spot,
                 const std::vector<MarketQuote>& quotes);

/// Shortest decimal text that reads back to the same double (up to 17 digits).
std::string format_double(double x);

/// {"kind", "strike", "maturity", "monitoring", "cap", "floor", "global_cap",
///  "global_floor", "barrier_up", "barrier_down", "option_type", "spacing"}.
ExoticSpec contract_from_json(const nlohmann::json& doc);
nlohmann::json contract_to_json(const ExoticSpec& spec);
ExoticSpec load_contract(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hkde
