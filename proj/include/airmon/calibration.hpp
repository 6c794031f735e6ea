#ifndef AIRMON_CALIBRATION_HPP
#define AIRMON_CALIBRATION_HPP

#include <algorithm>
#include <cmath>
#include <optional>

#include "airmon/errors.hpp"

namespace airmon {

/// MQ135 conversion chain parameters. The sensor sits on a voltage divider
/// with r_load; the ppm curve is the usual power law ppm = a * (Rs/R0)^b.
///
/// The stock curve constants are a widely used CO characterization of the
/// MQ135; they are NOT a calibration. Deployments must measure r0 in clean
/// air and supply their own constants through the config file. Tests in
/// this repo therefore only ever assert round-trip consistency, never
/// absolute ppm truth.
struct Mq135Config {
  double vcc = 5.0;        // supply, volts
  int adc_max = 1023;      // full-scale count (10-bit converter)
  double r_load = 10000.0; // divider load, ohms
  double r0 = 10000.0;     // sensor resistance in clean air, ohms
  double curve_a = 605.18;
  double curve_b = -3.937; // negative: resistance falls as ppm rises

  void validate() const {
    if (vcc <= 0 || adc_max < 1 || r_load <= 0 || r0 <= 0 || curve_a <= 0)
      throw ConfigError("calibration: vcc, adc_max, r_load, r0, curve_a must be positive");
    if (curve_b >= 0)
      throw ConfigError("calibration: curve_b must be negative");
  }
};

/// Divider inversion: rs = r_load * (adc_max - adc) / adc.
/// Returns nullopt when the converter is railed (adc <= 0 or >= adc_max):
/// at 0 the divider equation has no finite solution, at full scale the
/// implied sensor resistance is 0, which the sensor cannot produce.
inline std::optional<double> adc_to_rs(int adc, const Mq135Config& cfg) {
  if (adc <= 0 || adc >= cfg.adc_max) return std::nullopt;
  return cfg.r_load * static_cast<double>(cfg.adc_max - adc) / static_cast<double>(adc);
}

inline double rs_to_ppm(double rs, const Mq135Config& cfg) {
  return cfg.curve_a * std::pow(rs / cfg.r0, cfg.curve_b);
}

/// Inverse of rs_to_ppm; simulator side.
inline double ppm_to_rs(double ppm, const Mq135Config& cfg) {
  return cfg.r0 * std::pow(ppm / cfg.curve_a, 1.0 / cfg.curve_b);
}

/// ADC count a converter would report for a given sensor resistance,
/// round-to-nearest, clamped off the rails so the reading stays decodable.
inline int rs_to_adc(double rs, const Mq135Config& cfg) {
  const double exact = static_cast<double>(cfg.adc_max) * cfg.r_load / (rs + cfg.r_load);
  const int q = static_cast<int>(std::llround(exact));
  return std::clamp(q, 1, cfg.adc_max - 1);
}

inline int ppm_to_adc(double ppm, const Mq135Config& cfg) {
  return rs_to_adc(ppm_to_rs(ppm, cfg), cfg);
}

} // namespace airmon

#endif
