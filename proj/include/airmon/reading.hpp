#ifndef AIRMON_READING_HPP
#define AIRMON_READING_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>

#include "airmon/aqi.hpp"

namespace airmon {

enum class SensorId { pms5003, dht11, mq135 };

inline const char* to_string(SensorId s) {
  switch (s) {
    case SensorId::pms5003: return "pms5003";
    case SensorId::dht11: return "dht11";
    case SensorId::mq135: return "mq135";
  }
  return "?";
}

/// Per-sensor fault flags for one cycle. `stale` means no fresh valid value
/// arrived this cycle and the reading carries the last known good one;
/// `lost` means the miss run has reached the configured stale_after
/// threshold (source presumed gone, reopen attempts in progress).
struct SensorFaultFlags {
  bool stale = false;
  bool lost = false;
};

struct CycleFaults {
  SensorFaultFlags pms5003;
  SensorFaultFlags dht11;
  SensorFaultFlags mq135;

  bool any_stale() const { return pms5003.stale || dht11.stale || mq135.stale; }
};

/// One sample of everything the station measures, as published each cycle.
struct CompositeReading {
  std::uint64_t seq = 0;
  std::chrono::system_clock::time_point wall_time{};
  std::chrono::steady_clock::time_point mono_time{};
  int pm2_5 = 0;      // ug/m3
  int pm10 = 0;       // ug/m3
  double temperature = 0.0; // C
  double humidity = 0.0;    // %RH
  double co_ppm = 0.0;
  AqiResult aqi;
  CycleFaults faults;
};

// Display truncation shared by the CSV log, the telemetry line and the
// live view: PM/temperature/humidity as integers (truncated toward zero),
// CO with exactly two decimals.
inline int display_int(double v) { return static_cast<int>(v); }

inline std::string format_co(double ppm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", ppm);
  return buf;
}

/// AQI for a set of station measurements, as the gateway computes it each
/// cycle: concentrations truncated to table precision, off-scale values
/// clamped to the top index.
inline AqiResult compute_reading_aqi(int pm2_5, int pm10, double co_ppm,
                                     const BreakpointSet& tables) {
  std::map<Pollutant, int> sub;
  const auto& t25 = tables.table(Pollutant::pm2_5);
  const auto& t10 = tables.table(Pollutant::pm10);
  const auto& tco = tables.table(Pollutant::co);
  sub[Pollutant::pm2_5] = compute_sub_index(t25, t25.truncate(pm2_5), true);
  sub[Pollutant::pm10] = compute_sub_index(t10, t10.truncate(pm10), true);
  sub[Pollutant::co] = compute_sub_index(tco, tco.truncate(co_ppm), true);
  return compute_overall(sub);
}

} // namespace airmon

#endif
