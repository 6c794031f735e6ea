#ifndef AIRMON_SINKS_HPP
#define AIRMON_SINKS_HPP

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "airmon/gateway.hpp"
#include "airmon/storage.hpp"
#include "airmon/telemetry.hpp"

namespace airmon {

/// The SD-card stand-in: appends every delivered reading to the rotating
/// CSV log. An append that fails is retried once, then counted as lost.
class CsvSink : public ReadingSink {
public:
  explicit CsvSink(std::unique_ptr<CsvLogger> logger) : logger_(std::move(logger)) {}

  const char* name() const override { return "storage"; }

  void write(const CompositeReading& reading) override {
    const auto record = to_csv_record(reading);
    try {
      logger_->append(record);
      ++rows_;
    } catch (const IoError&) {
      try {
        logger_->append(record);
        ++rows_;
      } catch (const IoError&) {
        ++lost_;
        throw;
      }
    }
  }

  void flush() override { logger_->flush(); }

  std::vector<std::pair<std::string, std::uint64_t>> counters() const override {
    return {{"storage.rows", rows_}, {"storage.lost_records", lost_}};
  }

  CsvLogger& logger() { return *logger_; }

private:
  std::unique_ptr<CsvLogger> logger_;
  std::uint64_t rows_ = 0;
  std::uint64_t lost_ = 0;
};

/// The HC-05 stand-in: one telemetry line per reading onto a byte sink.
class TelemetrySink : public ReadingSink {
public:
  explicit TelemetrySink(std::unique_ptr<ByteSink> sink) : emitter_(std::move(sink)) {}

  const char* name() const override { return "telemetry"; }

  void write(const CompositeReading& reading) override { emitter_.emit(reading); }

  std::vector<std::pair<std::string, std::uint64_t>> counters() const override {
    return {{"telemetry.lines", emitter_.lines_emitted()},
            {"telemetry.port_errors", emitter_.port_errors()}};
  }

private:
  LineEmitter emitter_;
};

/// The 16x2 LCD stand-in: a two-line summary per reading on a stdio stream.
class LiveViewSink : public ReadingSink {
public:
  explicit LiveViewSink(std::FILE* out = stdout) : out_(out) {}

  const char* name() const override { return "live-view"; }

  void write(const CompositeReading& reading) override {
    std::fprintf(out_, "AQI %d %s%s\n", reading.aqi.overall, to_string(reading.aqi.category),
                 reading.faults.any_stale() ? " *stale*" : "");
    std::fprintf(out_, "PM2.5:%d PM10:%d T:%d H:%d CO:%s\n", reading.pm2_5, reading.pm10,
                 display_int(reading.temperature), display_int(reading.humidity),
                 format_co(reading.co_ppm).c_str());
    std::fflush(out_);
  }

private:
  std::FILE* out_;
};

} // namespace airmon

#endif
