#ifndef AIRMON_AQI_HPP
#define AIRMON_AQI_HPP

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "airmon/errors.hpp"

namespace airmon {

enum class Pollutant { pm2_5, pm10, co };

/// Fixed dominance order: when sub-indices tie, the earlier pollutant wins.
inline constexpr std::array<Pollutant, 3> kPollutants{Pollutant::pm2_5,
                                                      Pollutant::pm10,
                                                      Pollutant::co};

inline const char* to_string(Pollutant p) {
  switch (p) {
    case Pollutant::pm2_5: return "PM2.5";
    case Pollutant::pm10: return "PM10";
    case Pollutant::co: return "CO";
  }
  return "?";
}

/// Accepts the display form ("PM2.5"), the config key ("pm2_5") and the
/// CLI form ("pm2.5"), case-insensitively.
inline std::optional<Pollutant> pollutant_from_string(std::string_view s) {
  std::string k;
  k.reserve(s.size());
  for (char c : s) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (k == "pm2.5" || k == "pm2_5" || k == "pm25") return Pollutant::pm2_5;
  if (k == "pm10" || k == "pm_10") return Pollutant::pm10;
  if (k == "co") return Pollutant::co;
  return std::nullopt;
}

enum class AqiCategory {
  good,
  moderate,
  unhealthy_sensitive,
  unhealthy,
  very_unhealthy,
  hazardous,
};

inline const char* to_string(AqiCategory c) {
  switch (c) {
    case AqiCategory::good: return "Good";
    case AqiCategory::moderate: return "Moderate";
    case AqiCategory::unhealthy_sensitive: return "UnhealthySensitive";
    case AqiCategory::unhealthy: return "Unhealthy";
    case AqiCategory::very_unhealthy: return "VeryUnhealthy";
    case AqiCategory::hazardous: return "Hazardous";
  }
  return "?";
}

inline std::optional<AqiCategory> category_from_string(std::string_view s) {
  if (s == "Good") return AqiCategory::good;
  if (s == "Moderate") return AqiCategory::moderate;
  if (s == "UnhealthySensitive") return AqiCategory::unhealthy_sensitive;
  if (s == "Unhealthy") return AqiCategory::unhealthy;
  if (s == "VeryUnhealthy") return AqiCategory::very_unhealthy;
  if (s == "Hazardous") return AqiCategory::hazardous;
  return std::nullopt;
}

/// One linear segment: concentrations [c_low, c_high] map onto AQI
/// [i_low, i_high].
struct BreakpointRow {
  double c_low = 0.0;
  double c_high = 0.0;
  int i_low = 0;
  int i_high = 0;
};

namespace detail {

// All breakpoint arithmetic runs over concentrations scaled to hundredths
// (centi-units), so interpolation is exact integer math rather than
// floating point. Table precisions are 0 or 1 decimals, so hundredths
// represent every legal boundary exactly.
inline constexpr std::int64_t kCentiScale = 100;

inline std::int64_t to_centi(double v) {
  return std::llround(v * static_cast<double>(kCentiScale));
}

inline std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

// round-half-up of num/den for den > 0, exact.
inline std::int64_t round_half_up(std::int64_t num, std::int64_t den) {
  return floor_div(2 * num + den, 2 * den);
}

} // namespace detail

/// Per-pollutant piecewise-linear AQI mapping. Rows are validated on
/// construction: sorted, contiguous in both concentration (next c_low is
/// one precision unit above the previous c_high) and index space.
class BreakpointTable {
public:
  BreakpointTable() = default;

  BreakpointTable(Pollutant pollutant, int precision, std::vector<BreakpointRow> rows)
      : pollutant_(pollutant), precision_(precision), rows_(std::move(rows)) {
    validate();
  }

  Pollutant pollutant() const { return pollutant_; }
  int precision() const { return precision_; }
  const std::vector<BreakpointRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  double max_concentration() const {
    if (rows_.empty()) throw NoTable("breakpoint table has no rows");
    return rows_.back().c_high;
  }

  /// One concentration step at this table's precision, in centi-units
  /// (e.g. 10 for one-decimal tables: 150.4 -> 150.5).
  std::int64_t unit_centi() const {
    std::int64_t u = detail::kCentiScale;
    for (int i = 0; i < precision_; ++i) u /= 10;
    return u;
  }

  /// Truncates a raw concentration down to this table's precision
  /// (5.27 -> 5.2 at one decimal). Never rounds up.
  double truncate(double raw) const {
    if (raw < 0.0) return 0.0;
    const std::int64_t u = unit_centi();
    const std::int64_t c = detail::floor_div(detail::to_centi(raw), u) * u;
    return static_cast<double>(c) / static_cast<double>(detail::kCentiScale);
  }

private:
  void validate() const {
    if (precision_ < 0 || precision_ > 2)
      throw ConfigError(std::string(to_string(pollutant_)) + ": precision must be 0..2");
    const std::int64_t u = unit_centi();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      const std::int64_t lo = detail::to_centi(r.c_low);
      const std::int64_t hi = detail::to_centi(r.c_high);
      if (lo < 0 || hi <= lo || r.i_low < 0 || r.i_high <= r.i_low)
        throw ConfigError(std::string(to_string(pollutant_)) + ": row " + std::to_string(i + 1) +
                          " is not an increasing, non-negative range");
      if (i > 0) {
        const auto& p = rows_[i - 1];
        if (lo != detail::to_centi(p.c_high) + u)
          throw NonContiguousRows(std::string(to_string(pollutant_)) + ": row " +
                                  std::to_string(i + 1) + " concentration gap (" +
                                  std::to_string(p.c_high) + " -> " + std::to_string(r.c_low) + ")");
        if (r.i_low != p.i_high + 1)
          throw NonContiguousRows(std::string(to_string(pollutant_)) + ": row " +
                                  std::to_string(i + 1) + " index gap (" +
                                  std::to_string(p.i_high) + " -> " + std::to_string(r.i_low) + ")");
      }
    }
  }

  Pollutant pollutant_ = Pollutant::pm2_5;
  int precision_ = 0;
  std::vector<BreakpointRow> rows_;
};

/// A concentration already truncated to its table's precision.
struct PollutantConcentration {
  Pollutant pollutant = Pollutant::pm2_5;
  double value = 0.0;
};

struct AqiResult {
  std::map<Pollutant, int> sub_indices;
  int overall = 0;
  Pollutant dominant = Pollutant::pm2_5;
  AqiCategory category = AqiCategory::good;
};

/// Linear interpolation of one sub-index:
///   i_low + (i_high - i_low) * (c - c_low) / (c_high - c_low)
/// rounded half-up. Inputs are quantized to hundredths and the whole
/// computation is exact integer arithmetic, so boundary values degenerate
/// exactly (c_low -> i_low, c_high -> i_high) and half-way results always
/// round up.
///
/// Concentrations above the top row throw OutOfRange unless `clamp_to_max`
/// is set, in which case the top index (500 with the stock tables) is
/// returned.
inline int compute_sub_index(const BreakpointTable& table, double concentration,
                             bool clamp_to_max = false) {
  if (table.empty()) throw NoTable(std::string(to_string(table.pollutant())) + ": no breakpoint rows");
  if (!std::isfinite(concentration) || concentration < 0.0)
    throw OutOfRange(std::string(to_string(table.pollutant())) + ": concentration must be finite and >= 0");

  const std::int64_t c = detail::to_centi(concentration);
  for (const auto& row : table.rows()) {
    const std::int64_t hi = detail::to_centi(row.c_high);
    if (c > hi) continue;
    const std::int64_t lo = detail::to_centi(row.c_low);
    const std::int64_t num = static_cast<std::int64_t>(row.i_high - row.i_low) * (c - lo);
    return row.i_low + static_cast<int>(detail::round_half_up(num, hi - lo));
  }
  if (clamp_to_max) return table.rows().back().i_high;
  throw OutOfRange(std::string(to_string(table.pollutant())) + ": concentration " +
                   std::to_string(concentration) + " exceeds table maximum " +
                   std::to_string(table.max_concentration()));
}

inline int compute_sub_index(const BreakpointTable& table, const PollutantConcentration& conc,
                             bool clamp_to_max = false) {
  if (conc.pollutant != table.pollutant())
    throw OutOfRange("concentration/table pollutant mismatch");
  return compute_sub_index(table, conc.value, clamp_to_max);
}

inline AqiCategory categorize(int aqi) {
  if (aqi < 0 || aqi > 500)
    throw OutOfRange("AQI " + std::to_string(aqi) + " outside [0, 500]");
  if (aqi <= 50) return AqiCategory::good;
  if (aqi <= 100) return AqiCategory::moderate;
  if (aqi <= 150) return AqiCategory::unhealthy_sensitive;
  if (aqi <= 200) return AqiCategory::unhealthy;
  if (aqi <= 300) return AqiCategory::very_unhealthy;
  return AqiCategory::hazardous;
}

/// Max rule: the overall AQI is the largest sub-index; the dominant
/// pollutant is the first one reaching it in kPollutants order.
inline AqiResult compute_overall(const std::map<Pollutant, int>& sub) {
  if (sub.empty()) throw EmptyInput("no sub-indices supplied");
  AqiResult result;
  result.sub_indices = sub;
  bool have = false;
  for (Pollutant p : kPollutants) {
    auto it = sub.find(p);
    if (it == sub.end()) continue;
    if (!have || it->second > result.overall) {
      result.overall = it->second;
      result.dominant = p;
      have = true;
    }
  }
  result.category = categorize(result.overall);
  return result;
}

/// All three per-pollutant tables, keyed by Pollutant.
class BreakpointSet {
public:
  BreakpointSet() = default;

  const BreakpointTable& table(Pollutant p) const {
    return tables_[index(p)];
  }

  void set(BreakpointTable t) {
    tables_[index(t.pollutant())] = std::move(t);
  }

private:
  static std::size_t index(Pollutant p) { return static_cast<std::size_t>(p); }
  std::array<BreakpointTable, 3> tables_{};
};

/// The stock tables shipped with the binary. PM2.5 uses the pre-2024 EPA
/// revision (0-12.0 "Good" first row); PM10 and CO are the standard 24-hour
/// and 8-hour tables. Stored as the same config text a user would write, so
/// loading the defaults exercises the parser.
inline constexpr std::string_view kDefaultBreakpointsJson = R"({
  "pm2_5": {
    "precision": 1,
    "rows": [
      [0.0, 12.0, 0, 50],
      [12.1, 35.4, 51, 100],
      [35.5, 55.4, 101, 150],
      [55.5, 150.4, 151, 200],
      [150.5, 250.4, 201, 300],
      [250.5, 350.4, 301, 400],
      [350.5, 500.4, 401, 500]
    ]
  },
  "pm10": {
    "precision": 0,
    "rows": [
      [0, 54, 0, 50],
      [55, 154, 51, 100],
      [155, 254, 101, 150],
      [255, 354, 151, 200],
      [355, 424, 201, 300],
      [425, 504, 301, 400],
      [505, 604, 401, 500]
    ]
  },
  "co": {
    "precision": 1,
    "rows": [
      [0.0, 4.4, 0, 50],
      [4.5, 9.4, 51, 100],
      [9.5, 12.4, 101, 150],
      [12.5, 15.4, 151, 200],
      [15.5, 30.4, 201, 300],
      [30.5, 40.4, 301, 400],
      [40.5, 50.4, 401, 500]
    ]
  }
})";

/// Parses breakpoint config text (JSON, one object per pollutant with a
/// "precision" field and "rows" of [c_low, c_high, i_low, i_high]). All
/// three pollutants are required. Throws ConfigError / NonContiguousRows.
inline BreakpointSet load_breakpoint_tables(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("breakpoint config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("breakpoint config: top level must be an object");

  static constexpr std::array<std::pair<std::string_view, Pollutant>, 3> kKeys{{
      {"pm2_5", Pollutant::pm2_5},
      {"pm10", Pollutant::pm10},
      {"co", Pollutant::co},
  }};

  BreakpointSet set;
  for (const auto& [key, pollutant] : kKeys) {
    if (!doc.contains(key))
      throw ConfigError("breakpoint config: missing section \"" + std::string(key) + "\"");
    const auto& sec = doc.at(std::string(key));
    try {
      const int precision = sec.at("precision").get<int>();
      std::vector<BreakpointRow> rows;
      for (const auto& r : sec.at("rows")) {
        if (!r.is_array() || r.size() != 4)
          throw ConfigError("breakpoint config: " + std::string(key) +
                            ": each row must be [c_low, c_high, i_low, i_high]");
        rows.push_back(BreakpointRow{r[0].get<double>(), r[1].get<double>(),
                                     r[2].get<int>(), r[3].get<int>()});
      }
      set.set(BreakpointTable(pollutant, precision, std::move(rows)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("breakpoint config: " + std::string(key) + ": " + e.what());
    }
  }
  return set;
}

inline const BreakpointSet& default_breakpoint_tables() {
  static const BreakpointSet set = load_breakpoint_tables(kDefaultBreakpointsJson);
  return set;
}

} // namespace airmon

#endif
