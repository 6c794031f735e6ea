// airmon: a software air-quality monitoring station.
//
// One binary, subcommands for every pipeline stage: run the gateway,
// generate or replay sensor captures, decode them, compute AQI values ad
// hoc, watch a running station, and export CSV logs.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "airmon/aqi.hpp"
#include "airmon/config.hpp"
#include "airmon/framedump.hpp"
#include "airmon/gateway.hpp"
#include "airmon/simulator.hpp"
#include "airmon/sinks.hpp"
#include "airmon/storage.hpp"
#include "airmon/telemetry.hpp"

namespace {

// Exit codes for `run` (stable, documented in README):
//   1 config error, 2 source open failure, 3 sink or query-port failure.
constexpr int kExitConfig = 1;
constexpr int kExitSource = 2;
constexpr int kExitSink = 3;

airmon::Gateway* g_gateway = nullptr;
volatile std::sig_atomic_t g_interrupted = 0;

void handle_signal(int) {
  g_interrupted = 1;
  if (g_gateway != nullptr) g_gateway->request_stop();
}

void install_signal_handlers() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::signal(SIGPIPE, SIG_IGN);
}

int run_gateway(const airmon::GatewayFileConfig& cfg) {
  airmon::SourceSet sources;
  try {
    sources = cfg.open_sources();
  } catch (const std::exception& e) {
    std::cerr << "source error: " << e.what() << "\n";
    return kExitSource;
  }

  airmon::Gateway gateway(cfg.sampling, cfg.breakpoints, cfg.calibration, std::move(sources));

  std::unique_ptr<airmon::QueryServer> server;
  try {
    if (cfg.csv.enabled) {
      auto logger = std::make_unique<airmon::CsvLogger>(cfg.csv.dir, cfg.csv.prefix,
                                                        cfg.csv.rotation, cfg.csv.headerless);
      std::cerr << "logging to " << logger->current_path().string() << "\n";
      gateway.add_sink(std::make_unique<airmon::CsvSink>(std::move(logger)));
    }
    if (cfg.telemetry.enabled) {
      std::unique_ptr<airmon::ByteSink> sink;
      if (cfg.telemetry.kind == "tcp")
        sink = std::make_unique<airmon::TcpByteSink>(cfg.telemetry.endpoint);
      else
        sink = std::make_unique<airmon::FdByteSink>(cfg.telemetry.endpoint);
      gateway.add_sink(std::make_unique<airmon::TelemetrySink>(std::move(sink)));
    }
    if (cfg.live_view) gateway.add_sink(std::make_unique<airmon::LiveViewSink>());
    if (cfg.query.enabled) {
      server = std::make_unique<airmon::QueryServer>(gateway, cfg.query.bind, cfg.query.port);
      server->start();
      std::cerr << "query port " << server->port() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "sink error: " << e.what() << "\n";
    return kExitSink;
  }

  if (!cfg.sampling.location.empty())
    std::cerr << "station location: " << cfg.sampling.location << "\n";
  g_gateway = &gateway;
  install_signal_handlers();
  gateway.run();
  g_gateway = nullptr;
  if (server) server->stop();
  std::cerr << "stopped after " << gateway.cycles_completed() << " cycles\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  airmon::GatewayFileConfig cfg;
  try {
    cfg = airmon::GatewayFileConfig::load_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error (" << config_path << "): " << e.what() << "\n";
    return kExitConfig;
  }
  return run_gateway(cfg);
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path, bool print_only) {
  airmon::Scenario scenario;
  try {
    scenario = airmon::Scenario::from_json(airmon::detail::read_text_file(scenario_path));
  } catch (const std::exception& e) {
    std::cerr << "scenario error (" << scenario_path << "): " << e.what() << "\n";
    return kExitConfig;
  }
  if (print_only) {
    std::cout << scenario.to_json() << "\n";
    std::cout << "valid: " << scenario.total_cycles() << " cycles, " << scenario.faults.size()
              << " faults\n";
    return 0;
  }
  if (out_path.empty()) {
    std::cerr << "simulate: --out is required unless --print is given\n";
    return kExitConfig;
  }
  const auto streams = airmon::run_scenario(scenario, airmon::Mq135Config{});
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot create " << out_path << "\n";
    return kExitSink;
  }
  airmon::write_streams_dump(out, streams);
  std::cout << "wrote " << scenario.total_cycles() << " cycles to " << out_path << "\n";
  return 0;
}

int cmd_replay(const std::string& dump_path, const std::string& csv_dir, bool headerless,
               double period_s) {
  airmon::GatewayFileConfig cfg;
  cfg.sampling.pace = period_s > 0;
  cfg.sampling.period_s = period_s > 0 ? period_s : 1.0;
  cfg.sampling.stop_when_sources_end = true;
  cfg.csv.enabled = true;
  cfg.csv.dir = csv_dir;
  cfg.csv.prefix = "replay";
  cfg.csv.headerless = headerless;
  cfg.live_view = true;
  for (const char* ch : {"pms5003", "dht11", "adc"})
    cfg.sources[ch] = airmon::SourceSpec{"replay", dump_path};
  return run_gateway(cfg);
}

void print_pms_frame(const airmon::Pms5003Frame& f) {
  std::printf("  pms5003 OK  pm1.0=%u pm2.5=%u pm10=%u (atm) cf1=%u/%u/%u counts=",
              f.pm1_0_atm, f.pm2_5_atm, f.pm10_atm, f.pm1_0_cf1, f.pm2_5_cf1, f.pm10_cf1);
  for (std::size_t i = 0; i < f.counts.size(); ++i)
    std::printf("%s%u", i ? "/" : "", f.counts[i]);
  std::printf("%s\n", f.counts_monotone() ? "" : " [counts not monotone]");
}

int cmd_decode(const std::string& dump_path, bool tolerate) {
  std::vector<airmon::DumpRecord> records;
  try {
    records = airmon::read_dump_file(dump_path);
  } catch (const std::exception& e) {
    std::cerr << "decode error (" << dump_path << "): " << e.what() << "\n";
    return 1;
  }

  airmon::Pms5003Scanner pms;
  airmon::Dht11Scanner dht;
  const airmon::Mq135Config cal{};
  bool any_invalid = false;
  std::size_t rec_no = 0;

  for (const auto& rec : records) {
    ++rec_no;
    std::printf("record %zu: %s, %zu octets\n", rec_no, airmon::to_string(rec.kind),
                rec.payload.size());
    switch (rec.kind) {
      case airmon::ChannelKind::pms5003: {
        const auto before = pms.stats();
        pms.feed(rec.payload);
        for (const auto& f : pms.take_frames()) print_pms_frame(f);
        const auto& after = pms.stats();
        if (after.bad_checksum > before.bad_checksum)
          std::printf("  pms5003 BADCHECKSUM x%llu\n",
                      static_cast<unsigned long long>(after.bad_checksum - before.bad_checksum));
        if (after.bytes_skipped > before.bytes_skipped)
          std::printf("  pms5003 skipped %llu octets resyncing\n",
                      static_cast<unsigned long long>(after.bytes_skipped - before.bytes_skipped));
        break;
      }
      case airmon::ChannelKind::dht11: {
        const auto before_bad = dht.bad_checksum();
        dht.feed(rec.payload);
        for (const auto& f : dht.take_frames())
          std::printf("  dht11 OK  humidity=%.1f%% temperature=%.1fC%s\n", f.humidity(),
                      f.temperature(), f.in_rated_range() ? "" : " [outside rated range]");
        if (dht.bad_checksum() > before_bad)
          std::printf("  dht11 BADCHECKSUM x%llu\n",
                      static_cast<unsigned long long>(dht.bad_checksum() - before_bad));
        break;
      }
      case airmon::ChannelKind::adc: {
        for (std::size_t i = 0; i + 1 < rec.payload.size(); i += 2) {
          const int adc = (rec.payload[i] << 8) | rec.payload[i + 1];
          const double volts = cal.vcc * adc / cal.adc_max;
          if (const auto rs = airmon::adc_to_rs(adc, cal))
            std::printf("  adc %d (%.3f V) rs=%.1f ohm\n", adc, volts, *rs);
          else
            std::printf("  adc %d (%.3f V) SATURATED\n", adc, volts);
        }
        break;
      }
    }
  }

  const auto& ps = pms.stats();
  std::printf("summary: %llu pms frames (%llu checksum failures, %llu octets skipped), "
              "%llu dht frames (%llu checksum failures)\n",
              static_cast<unsigned long long>(ps.frames),
              static_cast<unsigned long long>(ps.bad_checksum),
              static_cast<unsigned long long>(ps.bytes_skipped),
              static_cast<unsigned long long>(dht.frames_decoded()),
              static_cast<unsigned long long>(dht.bad_checksum()));
  any_invalid = ps.bad_checksum > 0 || ps.bytes_skipped > 0 || ps.bad_length > 0 ||
                dht.bad_checksum() > 0 || pms.buffered() > 0;
  if (any_invalid && !tolerate) return 1;
  return 0;
}

int cmd_aqi(const std::vector<std::string>& pairs, bool json_out, bool clamp,
            const std::string& breakpoints_path) {
  airmon::BreakpointSet tables = airmon::default_breakpoint_tables();
  try {
    if (!breakpoints_path.empty())
      tables = airmon::load_breakpoint_tables(airmon::detail::read_text_file(breakpoints_path));
  } catch (const std::exception& e) {
    std::cerr << "breakpoints error: " << e.what() << "\n";
    return 1;
  }

  std::map<airmon::Pollutant, double> values;
  for (const auto& pair : pairs) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      std::cerr << "expected pollutant=value, got \"" << pair << "\"\n";
      return 1;
    }
    const auto p = airmon::pollutant_from_string(pair.substr(0, eq));
    if (!p) {
      std::cerr << "unknown pollutant \"" << pair.substr(0, eq) << "\" (pm2.5, pm10, co)\n";
      return 1;
    }
    try {
      values[*p] = std::stod(pair.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "bad value in \"" << pair << "\"\n";
      return 1;
    }
  }
  if (values.empty()) {
    std::cerr << "at least one pollutant=value pair required\n";
    return 1;
  }

  std::map<airmon::Pollutant, int> sub;
  try {
    for (const auto& [p, v] : values)
      sub[p] = airmon::compute_sub_index(tables.table(p), v, clamp);
    const auto result = airmon::compute_overall(sub);
    if (json_out) {
      nlohmann::json j;
      for (const auto& [p, i] : result.sub_indices) j["sub_indices"][airmon::to_string(p)] = i;
      j["overall"] = result.overall;
      j["dominant"] = airmon::to_string(result.dominant);
      j["category"] = airmon::to_string(result.category);
      std::cout << j.dump() << "\n";
    } else {
      for (const auto& [p, i] : result.sub_indices)
        std::printf("%-6s %g -> %d\n", airmon::to_string(p), values[p], i);
      std::printf("overall %d (%s), dominant %s\n", result.overall,
                  airmon::to_string(result.category), airmon::to_string(result.dominant));
    }
  } catch (const airmon::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_watch(const std::string& address, double interval_s, std::uint64_t count) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "address must be host:port\n";
    return 1;
  }
  const std::string host = address.substr(0, colon);
  const auto port = static_cast<std::uint16_t>(std::stoi(address.substr(colon + 1)));

  install_signal_handlers();
  std::uint64_t polls = 0;
  while (!g_interrupted) {
    try {
      const auto lines = airmon::query_lines(host, port, "GET LATEST");
      if (!lines.empty() && lines[0].rfind("ERR", 0) != 0) {
        const auto f = airmon::parse_telemetry_line(lines[0]);
        // Two-line layout, like the 16x2 panel on the original hardware.
        std::printf("AQI %d %s\n", f.aqi, airmon::to_string(f.category));
        std::printf("PM2.5:%d PM10:%d T:%d H:%d CO:%s\n\n", f.pm2_5, f.pm10, f.temperature,
                    f.humidity, airmon::format_co(f.co).c_str());
      } else {
        std::printf("(%s)\n\n", lines.empty() ? "no response" : lines[0].c_str());
      }
    } catch (const std::exception& e) {
      std::printf("(stale: %s)\n\n", e.what());
    }
    std::fflush(stdout);
    if (count > 0 && ++polls >= count) break;
    const auto deadline =
        std::chrono::steady_clock::now() +
        std::chrono::milliseconds(static_cast<std::int64_t>(interval_s * 1000));
    while (!g_interrupted && std::chrono::steady_clock::now() < deadline)
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return 0;
}

int cmd_export(const std::string& csv_path, bool headerless) {
  try {
    for (const auto& r : airmon::read_csv_file(csv_path, headerless)) {
      nlohmann::json j{{"no", r.no},           {"pm2_5", r.pm2_5},
                       {"pm10", r.pm10},       {"temperature", r.temperature},
                       {"humidity", r.humidity}, {"co", r.co},
                       {"aqi", r.aqi}};
      std::cout << j.dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "export error (" << csv_path << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"airmon: software air-quality monitoring station"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the gateway from a config file");
  run->add_option("--config", config_path, "Gateway config (JSON)")->required();

  std::string scenario_path, sim_out;
  bool sim_print = false;
  auto* simulate = app.add_subcommand("simulate", "Generate a sensor capture from a scenario");
  simulate->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required();
  simulate->add_option("--out", sim_out, "Capture dump output path");
  simulate->add_flag("--print", sim_print, "Validate and pretty-print the scenario, no output file");

  std::string replay_dump, replay_dir = "logs";
  bool replay_headerless = false;
  double replay_period = 0.0;
  auto* replay = app.add_subcommand("replay", "Replay a capture dump through the pipeline");
  replay->add_option("--dump", replay_dump, "Capture dump file")->required();
  replay->add_option("--csv-dir", replay_dir, "CSV output directory");
  replay->add_flag("--headerless", replay_headerless, "Do not write CSV headers");
  replay->add_option("--period", replay_period, "Seconds per cycle (0 = as fast as possible)");

  std::string decode_dump;
  bool decode_tolerate = false;
  auto* decode = app.add_subcommand("decode", "Print every frame in a capture dump");
  decode->add_option("--dump", decode_dump, "Capture dump file")->required();
  decode->add_flag("--tolerate", decode_tolerate, "Exit 0 even if invalid frames are present");

  std::vector<std::string> aqi_pairs;
  bool aqi_json = false, aqi_clamp = false;
  std::string aqi_breakpoints;
  auto* aqi = app.add_subcommand("aqi", "Compute AQI for pollutant=value pairs");
  aqi->add_option("pairs", aqi_pairs, "e.g. pm2.5=55.5 pm10=30 co=5.68")->expected(-1);
  aqi->add_flag("--json", aqi_json, "Machine-readable output");
  aqi->add_flag("--clamp", aqi_clamp, "Clamp off-scale concentrations to the top index");
  aqi->add_option("--breakpoints", aqi_breakpoints, "Breakpoint table file (JSON)");

  std::string watch_address = "127.0.0.1:8700";
  double watch_interval = 1.0;
  std::uint64_t watch_count = 0;
  auto* watch = app.add_subcommand("watch", "Live two-line view of a running station");
  watch->add_option("--address", watch_address, "Query server host:port");
  watch->add_option("--interval", watch_interval, "Poll period, seconds");
  watch->add_option("--count", watch_count, "Stop after this many polls (0 = until interrupt)");

  std::string export_csv;
  bool export_headerless = false;
  auto* exp = app.add_subcommand("export", "Convert a CSV log to JSON lines");
  exp->add_option("--csv", export_csv, "CSV log file")->required();
  exp->add_flag("--headerless", export_headerless, "File has no header line");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path);
  if (simulate->parsed()) return cmd_simulate(scenario_path, sim_out, sim_print);
  if (replay->parsed()) return cmd_replay(replay_dump, replay_dir, replay_headerless, replay_period);
  if (decode->parsed()) return cmd_decode(decode_dump, decode_tolerate);
  if (aqi->parsed()) return cmd_aqi(aqi_pairs, aqi_json, aqi_clamp, aqi_breakpoints);
  if (watch->parsed()) return cmd_watch(watch_address, watch_interval, watch_count);
  if (exp->parsed()) return cmd_export(export_csv, export_headerless);
  return 0;
}
