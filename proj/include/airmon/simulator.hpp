#ifndef AIRMON_SIMULATOR_HPP
#define AIRMON_SIMULATOR_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "airmon/calibration.hpp"
#include "airmon/dht11.hpp"
#include "airmon/errors.hpp"
#include "airmon/framedump.hpp"
#include "airmon/pms5003.hpp"
#include "airmon/rng.hpp"

namespace airmon {

struct ScenarioStep {
  int cycles = 1;
  double pm2_5 = 0.0;      // ug/m3
  double pm10 = 0.0;       // ug/m3
  double temperature = 0.0; // C
  double humidity = 0.0;    // %RH
  double co_ppm = 0.0;
};

enum class FaultKind { corrupt_checksum, truncate_frame, garbage_burst, silence };

inline const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::corrupt_checksum: return "corrupt-checksum";
    case FaultKind::truncate_frame: return "truncate-frame";
    case FaultKind::garbage_burst: return "garbage-burst";
    case FaultKind::silence: return "silence";
  }
  return "?";
}

enum class FaultChannel { pms5003, dht11, adc, all };

inline const char* to_string(FaultChannel c) {
  switch (c) {
    case FaultChannel::pms5003: return "pms5003";
    case FaultChannel::dht11: return "dht11";
    case FaultChannel::adc: return "adc";
    case FaultChannel::all: return "all";
  }
  return "?";
}

struct ScenarioFault {
  int at_cycle = 1; // 1-based, matches reading seq
  FaultKind kind = FaultKind::corrupt_checksum;
  int count = 0;    // garbage-burst: octets; silence: cycles
  FaultChannel channel = FaultChannel::pms5003;
};

/// Uniform integer jitter amplitudes, one per channel, in each channel's
/// natural quantum: whole ug/m3 for PM, tenths for the DHT values, raw
/// converter counts for the ADC.
struct ScenarioNoise {
  int pm2_5 = 0;
  int pm10 = 0;
  int temperature_tenths = 0;
  int humidity_tenths = 0;
  int adc_counts = 0;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<ScenarioStep> steps;
  ScenarioNoise noise;
  std::vector<ScenarioFault> faults;

  int total_cycles() const {
    int n = 0;
    for (const auto& s : steps) n += s.cycles;
    return n;
  }

  void validate() const {
    if (steps.empty()) throw InvalidScenario("scenario: at least one step required");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      if (s.cycles < 1)
        throw InvalidScenario("scenario: step " + std::to_string(i + 1) + ": cycles must be >= 1");
      if (s.pm2_5 < 0 || s.pm10 < 0 || s.co_ppm < 0 || s.humidity < 0 || s.temperature < 0)
        throw InvalidScenario("scenario: step " + std::to_string(i + 1) + ": values must be >= 0");
    }
    for (const auto& f : faults) {
      if (f.at_cycle < 1) throw InvalidScenario("scenario: fault at_cycle must be >= 1");
      if (f.kind == FaultKind::garbage_burst && f.count < 1)
        throw InvalidScenario("scenario: garbage-burst needs a positive octet count");
      if (f.kind == FaultKind::silence && f.count < 1)
        throw InvalidScenario("scenario: silence needs a positive cycle count");
      if ((f.kind == FaultKind::corrupt_checksum || f.kind == FaultKind::truncate_frame) &&
          f.channel == FaultChannel::adc)
        throw InvalidScenario("scenario: " + std::string(to_string(f.kind)) +
                              " does not apply to the adc channel (no framing)");
    }
  }

  static Scenario from_json(std::string_view text);
  std::string to_json() const;
};

inline Scenario Scenario::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidScenario(std::string("scenario: ") + e.what());
  }
  Scenario s;
  try {
    s.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& j : doc.at("steps")) {
      ScenarioStep st;
      st.cycles = j.value("cycles", 1);
      st.pm2_5 = j.value("pm2_5", 0.0);
      st.pm10 = j.value("pm10", 0.0);
      st.temperature = j.value("temperature", 0.0);
      st.humidity = j.value("humidity", 0.0);
      st.co_ppm = j.value("co_ppm", 0.0);
      s.steps.push_back(st);
    }
    if (doc.contains("noise")) {
      const auto& n = doc.at("noise");
      s.noise.pm2_5 = n.value("pm2_5", 0);
      s.noise.pm10 = n.value("pm10", 0);
      s.noise.temperature_tenths = n.value("temperature_tenths", 0);
      s.noise.humidity_tenths = n.value("humidity_tenths", 0);
      s.noise.adc_counts = n.value("adc_counts", 0);
    }
    if (doc.contains("faults")) {
      for (const auto& j : doc.at("faults")) {
        ScenarioFault f;
        f.at_cycle = j.at("at_cycle").get<int>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "corrupt-checksum") f.kind = FaultKind::corrupt_checksum;
        else if (kind == "truncate-frame") f.kind = FaultKind::truncate_frame;
        else if (kind == "garbage-burst") f.kind = FaultKind::garbage_burst;
        else if (kind == "silence") f.kind = FaultKind::silence;
        else throw InvalidScenario("scenario: unknown fault kind \"" + kind + "\"");
        f.count = j.value("count", 0);
        const std::string ch = j.value("channel", f.kind == FaultKind::silence ? "all" : "pms5003");
        if (ch == "pms5003") f.channel = FaultChannel::pms5003;
        else if (ch == "dht11") f.channel = FaultChannel::dht11;
        else if (ch == "adc") f.channel = FaultChannel::adc;
        else if (ch == "all") f.channel = FaultChannel::all;
        else throw InvalidScenario("scenario: unknown fault channel \"" + ch + "\"");
        s.faults.push_back(f);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidScenario(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::string Scenario::to_json() const {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["steps"] = nlohmann::json::array();
  for (const auto& st : steps) {
    doc["steps"].push_back({{"cycles", st.cycles},
                            {"pm2_5", st.pm2_5},
                            {"pm10", st.pm10},
                            {"temperature", st.temperature},
                            {"humidity", st.humidity},
                            {"co_ppm", st.co_ppm}});
  }
  doc["noise"] = {{"pm2_5", noise.pm2_5},
                  {"pm10", noise.pm10},
                  {"temperature_tenths", noise.temperature_tenths},
                  {"humidity_tenths", noise.humidity_tenths},
                  {"adc_counts", noise.adc_counts}};
  doc["faults"] = nlohmann::json::array();
  for (const auto& f : faults) {
    nlohmann::json j = {{"at_cycle", f.at_cycle},
                        {"kind", to_string(f.kind)},
                        {"channel", to_string(f.channel)}};
    if (f.count > 0) j["count"] = f.count;
    doc["faults"].push_back(j);
  }
  return doc.dump(2);
}

/// One channel's output: raw octets grouped per cycle (a cycle may be
/// empty under a silence fault).
struct ChannelBytes {
  std::vector<std::vector<std::uint8_t>> per_cycle;

  std::vector<std::uint8_t> flat() const {
    std::vector<std::uint8_t> out;
    for (const auto& c : per_cycle) out.insert(out.end(), c.begin(), c.end());
    return out;
  }
};

struct SimulatedStreams {
  ChannelBytes pms5003;
  ChannelBytes dht11;
  ChannelBytes adc;
};

namespace detail {

inline std::uint16_t clamp_u16(std::int64_t v) {
  return static_cast<std::uint16_t>(std::clamp<std::int64_t>(v, 0, 0xFFFF));
}

inline bool fault_hits(const ScenarioFault& f, FaultChannel ch, int cycle) {
  if (f.channel != ch && f.channel != FaultChannel::all) return false;
  if (f.kind == FaultKind::silence)
    return cycle >= f.at_cycle && cycle < f.at_cycle + f.count;
  return cycle == f.at_cycle;
}

} // namespace detail

/// Deterministic virtual sensors. Each channel derives its own splitmix64
/// stream from the scenario seed, so the three streams can be produced
/// independently and identical (seed, scenario) pairs give octet-identical
/// output. Jitter is drawn every cycle whether or not the cycle emits, so
/// fault scheduling never shifts the noise sequence.
class Simulator {
public:
  Simulator(Scenario scenario, Mq135Config calibration)
      : scenario_(std::move(scenario)), cal_(calibration) {
    scenario_.validate();
    cal_.validate();
    SplitMix64 root(scenario_.seed);
    pms_seed_ = root.next();
    dht_seed_ = root.next();
    adc_seed_ = root.next();
  }

  const Scenario& scenario() const { return scenario_; }

  /// The scripted step values in effect at a (1-based) cycle.
  const ScenarioStep& step_at(int cycle) const {
    int c = cycle;
    for (const auto& s : scenario_.steps) {
      if (c <= s.cycles) return s;
      c -= s.cycles;
    }
    return scenario_.steps.back();
  }

  ChannelBytes pms5003_stream() const {
    ChannelBytes out;
    SplitMix64 rng(pms_seed_);
    const int total = scenario_.total_cycles();
    for (int cycle = 1; cycle <= total; ++cycle) {
      const auto& st = step_at(cycle);
      const auto pm25 = detail::clamp_u16(std::llround(st.pm2_5) + rng.jitter(scenario_.noise.pm2_5));
      const auto pm10v = detail::clamp_u16(std::llround(st.pm10) + rng.jitter(scenario_.noise.pm10));

      Pms5003Frame f;
      f.pm2_5_atm = pm25;
      f.pm10_atm = pm10v;
      f.pm1_0_atm = static_cast<std::uint16_t>(pm25 / 2);
      f.pm1_0_cf1 = f.pm1_0_atm;
      f.pm2_5_cf1 = f.pm2_5_atm;
      f.pm10_cf1 = f.pm10_atm;
      // Counts: arbitrary but monotone halving chain off the PM2.5 mass,
      // which is all the decoder invariant needs.
      std::uint32_t c = std::min<std::uint32_t>(static_cast<std::uint32_t>(pm25) * 24u, 0xFFFFu);
      for (auto& slot : f.counts) {
        slot = static_cast<std::uint16_t>(c);
        c /= 2;
      }
      const auto encoded = pms5003_encode(f);
      std::vector<std::uint8_t> bytes(encoded.begin(), encoded.end());
      out.per_cycle.push_back(apply_frame_faults(FaultChannel::pms5003, cycle, std::move(bytes), rng));
    }
    return out;
  }

  ChannelBytes dht11_stream() const {
    ChannelBytes out;
    SplitMix64 rng(dht_seed_);
    const int total = scenario_.total_cycles();
    for (int cycle = 1; cycle <= total; ++cycle) {
      const auto& st = step_at(cycle);
      const auto t_tenths = std::clamp<std::int64_t>(
          std::llround(st.temperature * 10.0) + rng.jitter(scenario_.noise.temperature_tenths), 0, 999);
      const auto h_tenths = std::clamp<std::int64_t>(
          std::llround(st.humidity * 10.0) + rng.jitter(scenario_.noise.humidity_tenths), 0, 999);
      const auto encoded = dht11_encode(static_cast<std::uint8_t>(h_tenths / 10),
                                        static_cast<std::uint8_t>(h_tenths % 10),
                                        static_cast<std::uint8_t>(t_tenths / 10),
                                        static_cast<std::uint8_t>(t_tenths % 10));
      std::vector<std::uint8_t> bytes(encoded.begin(), encoded.end());
      out.per_cycle.push_back(apply_frame_faults(FaultChannel::dht11, cycle, std::move(bytes), rng));
    }
    return out;
  }

  /// ADC channel: one 16-bit big-endian count per cycle, synthesized by
  /// inverting the calibration chain from the scripted ppm.
  ChannelBytes adc_stream() const {
    ChannelBytes out;
    SplitMix64 rng(adc_seed_);
    const int total = scenario_.total_cycles();
    for (int cycle = 1; cycle <= total; ++cycle) {
      const auto& st = step_at(cycle);
      int adc = ppm_to_adc(st.co_ppm, cal_);
      adc = static_cast<int>(std::clamp<std::int64_t>(
          adc + rng.jitter(scenario_.noise.adc_counts), 1, cal_.adc_max - 1));
      std::vector<std::uint8_t> bytes{static_cast<std::uint8_t>((adc >> 8) & 0xFF),
                                      static_cast<std::uint8_t>(adc & 0xFF)};
      if (silenced(FaultChannel::adc, cycle)) bytes.clear();
      else bytes = apply_burst(FaultChannel::adc, cycle, std::move(bytes), rng);
      out.per_cycle.push_back(std::move(bytes));
    }
    return out;
  }

  SimulatedStreams run() const {
    return SimulatedStreams{pms5003_stream(), dht11_stream(), adc_stream()};
  }

private:
  bool silenced(FaultChannel ch, int cycle) const {
    for (const auto& f : scenario_.faults)
      if (f.kind == FaultKind::silence && detail::fault_hits(f, ch, cycle)) return true;
    return false;
  }

  std::vector<std::uint8_t> apply_burst(FaultChannel ch, int cycle,
                                        std::vector<std::uint8_t> bytes, SplitMix64& rng) const {
    for (const auto& f : scenario_.faults) {
      if (f.kind != FaultKind::garbage_burst || !detail::fault_hits(f, ch, cycle)) continue;
      std::vector<std::uint8_t> garbage(static_cast<std::size_t>(f.count));
      for (auto& b : garbage) b = rng.next_byte();
      bytes.insert(bytes.begin(), garbage.begin(), garbage.end());
    }
    return bytes;
  }

  std::vector<std::uint8_t> apply_frame_faults(FaultChannel ch, int cycle,
                                               std::vector<std::uint8_t> bytes,
                                               SplitMix64& rng) const {
    if (silenced(ch, cycle)) return {};
    for (const auto& f : scenario_.faults) {
      if (!detail::fault_hits(f, ch, cycle)) continue;
      switch (f.kind) {
        case FaultKind::corrupt_checksum:
          if (!bytes.empty()) ++bytes.back();
          break;
        case FaultKind::truncate_frame:
          bytes.resize(bytes.size() / 2);
          break;
        default:
          break;
      }
    }
    return apply_burst(ch, cycle, std::move(bytes), rng);
  }

  Scenario scenario_;
  Mq135Config cal_;
  std::uint64_t pms_seed_ = 0;
  std::uint64_t dht_seed_ = 0;
  std::uint64_t adc_seed_ = 0;
};

inline SimulatedStreams run_scenario(const Scenario& s, const Mq135Config& cal) {
  return Simulator(s, cal).run();
}

/// Writes a full scenario run as a capture dump: per cycle, one record per
/// channel in pms/dht/adc order.
inline void write_streams_dump(std::ostream& out, const SimulatedStreams& streams) {
  const std::size_t cycles = std::max({streams.pms5003.per_cycle.size(),
                                       streams.dht11.per_cycle.size(),
                                       streams.adc.per_cycle.size()});
  auto chunk = [](const ChannelBytes& ch, std::size_t i) -> std::span<const std::uint8_t> {
    if (i < ch.per_cycle.size()) return ch.per_cycle[i];
    return {};
  };
  for (std::size_t i = 0; i < cycles; ++i) {
    write_dump_record(out, ChannelKind::pms5003, chunk(streams.pms5003, i));
    write_dump_record(out, ChannelKind::dht11, chunk(streams.dht11, i));
    write_dump_record(out, ChannelKind::adc, chunk(streams.adc, i));
  }
}

/// Byte-faithful replay: regroups a capture dump into per-channel,
/// per-cycle chunks (cycle k of a channel is its k-th record).
inline SimulatedStreams streams_from_dump(const std::vector<DumpRecord>& records) {
  SimulatedStreams s;
  for (const auto& r : records) {
    switch (r.kind) {
      case ChannelKind::pms5003: s.pms5003.per_cycle.push_back(r.payload); break;
      case ChannelKind::dht11: s.dht11.per_cycle.push_back(r.payload); break;
      case ChannelKind::adc: s.adc.per_cycle.push_back(r.payload); break;
    }
  }
  return s;
}

} // namespace airmon

#endif
