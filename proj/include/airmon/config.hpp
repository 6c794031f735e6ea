#ifndef AIRMON_CONFIG_HPP
#define AIRMON_CONFIG_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "airmon/aqi.hpp"
#include "airmon/calibration.hpp"
#include "airmon/errors.hpp"
#include "airmon/gateway.hpp"
#include "airmon/simulator.hpp"
#include "airmon/sources.hpp"
#include "airmon/storage.hpp"

namespace airmon {

/// One live source endpoint. Kinds: "device" (filesystem path), "tcp"
/// ("host:port"), "replay" (capture dump path).
struct SourceSpec {
  std::string kind;
  std::string endpoint;
};

/// Parsed gateway config file. JSON, documented in the README; every
/// relative input path (scenario, replay dumps, breakpoints file) resolves
/// against the config file's directory, output paths against the working
/// directory. Endpoint strings can be overridden per channel with
/// AIRMON_SOURCE_PMS5003 / AIRMON_SOURCE_DHT11 / AIRMON_SOURCE_ADC.
struct GatewayFileConfig {
  SamplingConfig sampling;

  std::optional<std::string> scenario_path; // simulator mode
  std::map<std::string, SourceSpec> sources; // keys: pms5003, dht11, adc

  struct CsvSinkConfig {
    bool enabled = true;
    std::string dir = "logs";
    std::string prefix = "airlog";
    bool headerless = false;
    RotationPolicy rotation;
  } csv;

  struct TelemetrySinkConfig {
    bool enabled = false;
    std::string kind = "file"; // file | device | tcp
    std::string endpoint;
  } telemetry;

  bool live_view = false;

  struct QueryConfig {
    bool enabled = false;
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8700;
  } query;

  Mq135Config calibration;
  BreakpointSet breakpoints = default_breakpoint_tables();

  static GatewayFileConfig from_json(const std::string& text,
                                     const std::filesystem::path& base_dir);
  static GatewayFileConfig load_file(const std::filesystem::path& path);

  /// Opens the three sensor streams (throws IoError / InvalidScenario).
  SourceSet open_sources() const;
};

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path resolve(const std::filesystem::path& base,
                                     const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path;
  return base / path;
}

inline std::optional<std::string> env_override(const char* name) {
  const char* v = std::getenv(name);
  if (v && *v) return std::string(v);
  return std::nullopt;
}

} // namespace detail

inline GatewayFileConfig GatewayFileConfig::from_json(const std::string& text,
                                                      const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  GatewayFileConfig cfg;
  try {
    if (doc.contains("sampling")) {
      const auto& s = doc.at("sampling");
      cfg.sampling.period_s = s.value("period_s", cfg.sampling.period_s);
      cfg.sampling.history_capacity = s.value("history", cfg.sampling.history_capacity);
      cfg.sampling.stale_after = s.value("stale_after", cfg.sampling.stale_after);
      cfg.sampling.max_cycles = s.value("max_cycles", cfg.sampling.max_cycles);
      cfg.sampling.pace = s.value("pace", cfg.sampling.pace);
      cfg.sampling.use_cf1 = s.value("use_cf1", cfg.sampling.use_cf1);
      cfg.sampling.sink_queue_capacity = s.value("sink_queue", cfg.sampling.sink_queue_capacity);
      cfg.sampling.location = s.value("location", cfg.sampling.location);
    }
    cfg.sampling.validate();

    if (!doc.contains("sources")) throw ConfigError("config: missing \"sources\" section");
    const auto& src = doc.at("sources");
    if (src.contains("scenario")) {
      cfg.scenario_path = detail::resolve(base_dir, src.at("scenario").get<std::string>()).string();
      cfg.sampling.stop_when_sources_end = true;
    } else {
      for (const char* ch : {"pms5003", "dht11", "adc"}) {
        if (!src.contains(ch))
          throw ConfigError(std::string("config: sources: missing channel \"") + ch + "\"");
        const auto& j = src.at(ch);
        SourceSpec spec;
        spec.kind = j.at("kind").get<std::string>();
        spec.endpoint = j.at("endpoint").get<std::string>();
        if (spec.kind != "device" && spec.kind != "tcp" && spec.kind != "replay")
          throw ConfigError("config: sources." + std::string(ch) + ": unknown kind \"" +
                            spec.kind + "\"");
        if (spec.kind == "replay")
          spec.endpoint = detail::resolve(base_dir, spec.endpoint).string();
        cfg.sources[ch] = std::move(spec);
      }
      bool all_replay = true;
      for (const auto& [ch, spec] : cfg.sources) all_replay = all_replay && spec.kind == "replay";
      if (all_replay) cfg.sampling.stop_when_sources_end = true;
    }

    if (doc.contains("sinks")) {
      const auto& sk = doc.at("sinks");
      if (sk.contains("csv")) {
        const auto& c = sk.at("csv");
        cfg.csv.enabled = c.value("enabled", cfg.csv.enabled);
        cfg.csv.dir = c.value("dir", cfg.csv.dir);
        cfg.csv.prefix = c.value("prefix", cfg.csv.prefix);
        cfg.csv.headerless = c.value("headerless", cfg.csv.headerless);
        cfg.csv.rotation.max_rows = c.value("max_rows", cfg.csv.rotation.max_rows);
        cfg.csv.rotation.max_bytes = c.value("max_bytes", cfg.csv.rotation.max_bytes);
      }
      if (sk.contains("telemetry")) {
        const auto& t = sk.at("telemetry");
        cfg.telemetry.enabled = t.value("enabled", cfg.telemetry.enabled);
        cfg.telemetry.kind = t.value("kind", cfg.telemetry.kind);
        cfg.telemetry.endpoint = t.value("endpoint", cfg.telemetry.endpoint);
        if (cfg.telemetry.enabled && cfg.telemetry.kind != "file" &&
            cfg.telemetry.kind != "device" && cfg.telemetry.kind != "tcp")
          throw ConfigError("config: sinks.telemetry: unknown kind \"" + cfg.telemetry.kind + "\"");
      }
      cfg.live_view = sk.value("live_view", cfg.live_view);
      if (sk.contains("query")) {
        const auto& q = sk.at("query");
        cfg.query.enabled = q.value("enabled", cfg.query.enabled);
        cfg.query.bind = q.value("bind", cfg.query.bind);
        cfg.query.port = q.value("port", cfg.query.port);
      }
    }

    if (doc.contains("calibration")) {
      const auto& c = doc.at("calibration");
      cfg.calibration.vcc = c.value("vcc", cfg.calibration.vcc);
      cfg.calibration.adc_max = c.value("adc_max", cfg.calibration.adc_max);
      cfg.calibration.r_load = c.value("r_load", cfg.calibration.r_load);
      cfg.calibration.r0 = c.value("r0", cfg.calibration.r0);
      cfg.calibration.curve_a = c.value("curve_a", cfg.calibration.curve_a);
      cfg.calibration.curve_b = c.value("curve_b", cfg.calibration.curve_b);
    }
    cfg.calibration.validate();

    if (doc.contains("breakpoints")) {
      const auto& b = doc.at("breakpoints");
      if (b.is_string())
        cfg.breakpoints = load_breakpoint_tables(
            detail::read_text_file(detail::resolve(base_dir, b.get<std::string>())));
      else
        cfg.breakpoints = load_breakpoint_tables(b.dump());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Endpoint-path overrides (endpoints only, per contract).
  static constexpr std::array<std::pair<const char*, const char*>, 3> kOverrides{{
      {"pms5003", "AIRMON_SOURCE_PMS5003"},
      {"dht11", "AIRMON_SOURCE_DHT11"},
      {"adc", "AIRMON_SOURCE_ADC"},
  }};
  for (const auto& [ch, env] : kOverrides) {
    if (const auto v = detail::env_override(env)) {
      const auto it = cfg.sources.find(ch);
      if (it != cfg.sources.end()) it->second.endpoint = *v;
    }
  }
  return cfg;
}

inline GatewayFileConfig GatewayFileConfig::load_file(const std::filesystem::path& path) {
  return from_json(detail::read_text_file(path), path.parent_path());
}

inline SourceSet GatewayFileConfig::open_sources() const {
  if (scenario_path) {
    const auto scenario = Scenario::from_json(detail::read_text_file(*scenario_path));
    return sources_from_streams(run_scenario(scenario, calibration));
  }

  SourceSet set;
  // Replay endpoints may share one dump file; read each file once.
  std::map<std::string, SimulatedStreams> dumps;
  auto replay_streams = [&](const std::string& path) -> SimulatedStreams& {
    auto it = dumps.find(path);
    if (it == dumps.end())
      it = dumps.emplace(path, streams_from_dump(read_dump_file(path))).first;
    return it->second;
  };

  auto open_one = [&](const char* ch) -> std::unique_ptr<ByteSource> {
    const auto& spec = sources.at(ch);
    if (spec.kind == "device") return std::make_unique<FdSource>(spec.endpoint);
    if (spec.kind == "tcp") return std::make_unique<TcpSource>(spec.endpoint);
    auto& streams = replay_streams(spec.endpoint);
    ChannelBytes* channel = nullptr;
    if (std::string_view(ch) == "pms5003") channel = &streams.pms5003;
    else if (std::string_view(ch) == "dht11") channel = &streams.dht11;
    else channel = &streams.adc;
    return std::make_unique<MemorySource>(channel->per_cycle);
  };

  set.pms5003 = open_one("pms5003");
  set.dht11 = open_one("dht11");
  set.adc = open_one("adc");
  return set;
}

} // namespace airmon

#endif
