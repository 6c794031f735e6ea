#ifndef AIRMON_GATEWAY_HPP
#define AIRMON_GATEWAY_HPP

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "airmon/aqi.hpp"
#include "airmon/calibration.hpp"
#include "airmon/dht11.hpp"
#include "airmon/errors.hpp"
#include "airmon/pms5003.hpp"
#include "airmon/queue.hpp"
#include "airmon/reading.hpp"
#include "airmon/sources.hpp"
#include "airmon/telemetry.hpp"

namespace airmon {

struct SamplingConfig {
  double period_s = 1.0;       // sampling cadence, driven by the monotonic clock
  std::size_t history_capacity = 3600;
  int stale_after = 5;         // consecutive misses before a sensor counts as lost
  std::uint64_t max_cycles = 0; // 0 = run until stop
  bool pace = true;            // false: cycles run back-to-back (replay, tests)
  bool stop_when_sources_end = false;
  bool use_cf1 = false;        // default: atmospheric-environment PM words
  std::size_t sink_queue_capacity = 256;
  std::string location;        // static station label, echoed into outputs

  void validate() const {
    if (period_s <= 0) throw ConfigError("sampling: period_s must be > 0");
    if (history_capacity < 1) throw ConfigError("sampling: history_capacity must be >= 1");
    if (stale_after < 1) throw ConfigError("sampling: stale_after must be >= 1");
  }
};

/// A consumer of published readings. Sinks run on their own worker thread
/// behind a bounded drop-oldest queue, so they can fail or stall without
/// touching the sampling cadence. write() may throw; failures are counted.
class ReadingSink {
public:
  virtual ~ReadingSink() = default;
  virtual const char* name() const = 0;
  virtual void write(const CompositeReading& reading) = 0;
  virtual void flush() {}
  /// Sink-local counters, surfaced through GET STATS.
  virtual std::vector<std::pair<std::string, std::uint64_t>> counters() const { return {}; }
};

struct SinkReport {
  std::string name;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t failures = 0;
};

/// The sampling loop: one instance owns the three sensor streams and the
/// history ring (single writer). Readings are published atomically per
/// cycle; snapshot()/history() are safe from any thread and never block
/// the sampler beyond a ring append.
class Gateway : public QueryBackend {
public:
  Gateway(SamplingConfig cfg, BreakpointSet tables, Mq135Config calibration, SourceSet sources)
      : cfg_(std::move(cfg)), tables_(std::move(tables)), cal_(calibration),
        sources_(std::move(sources)) {
    cfg_.validate();
    cal_.validate();
    if (!sources_.pms5003 || !sources_.dht11 || !sources_.adc)
      throw ConfigError("gateway: all three sources must be supplied");
  }

  ~Gateway() override { shutdown_sinks(); }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// queue_capacity overrides the config default for this sink (0 = default).
  void add_sink(std::unique_ptr<ReadingSink> sink, std::size_t queue_capacity = 0) {
    workers_.push_back(std::make_unique<SinkWorker>(
        std::move(sink), queue_capacity ? queue_capacity : cfg_.sink_queue_capacity));
  }

  /// Runs the sampling loop on the calling thread until request_stop(),
  /// max_cycles, or (when configured) source exhaustion. Flushes and joins
  /// every sink before returning, so no reading accepted into a queue is
  /// abandoned on a clean stop.
  void run() {
    for (auto& w : workers_) w->start();
    const auto t0 = std::chrono::steady_clock::now();
    auto next_tick = t0;

    while (!stop_.load(std::memory_order_relaxed)) {
      run_cycle();
      if (cfg_.max_cycles > 0 && cycles_ >= cfg_.max_cycles) break;
      if (cfg_.stop_when_sources_end && all_sources_ended()) break;
      if (cfg_.pace) {
        next_tick += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(cfg_.period_s));
        sleep_until_or_stop(next_tick);
      }
    }
    shutdown_sinks();
  }

  void request_stop() { stop_.store(true, std::memory_order_relaxed); }

  /// Most recent reading; throws NotReady before the first cycle.
  CompositeReading snapshot() const {
    const auto p = std::atomic_load(&latest_);
    if (!p) throw NotReady("no cycle completed yet");
    return *p;
  }

  std::optional<CompositeReading> latest() const override {
    const auto p = std::atomic_load(&latest_);
    if (!p) return std::nullopt;
    return *p;
  }

  /// Up to last_k most recent readings, oldest first.
  std::vector<CompositeReading> history(std::size_t last_k) const override {
    std::lock_guard lock(ring_mutex_);
    const std::size_t n = std::min(last_k, ring_.size());
    std::vector<CompositeReading> out;
    out.reserve(n);
    for (std::size_t i = ring_.size() - n; i < ring_.size(); ++i) out.push_back(*ring_[i]);
    return out;
  }

  std::vector<std::pair<std::string, std::uint64_t>> stats() const override {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    out.emplace_back("cycles", cycles_.load());
    const auto& ps = pms_scanner_.stats();
    out.emplace_back("pms5003.frames", ps.frames);
    out.emplace_back("pms5003.bad_checksum", ps.bad_checksum);
    out.emplace_back("pms5003.bad_length", ps.bad_length);
    out.emplace_back("pms5003.bytes_skipped", ps.bytes_skipped);
    out.emplace_back("pms5003.stale_cycles", pms_state_.stale_cycles);
    out.emplace_back("dht11.frames", dht_scanner_.frames_decoded());
    out.emplace_back("dht11.bad_checksum", dht_scanner_.bad_checksum());
    out.emplace_back("dht11.out_of_range", dht_out_of_range_);
    out.emplace_back("dht11.stale_cycles", dht_state_.stale_cycles);
    out.emplace_back("mq135.samples", adc_samples_);
    out.emplace_back("mq135.saturated", adc_saturated_);
    out.emplace_back("mq135.stale_cycles", adc_state_.stale_cycles);
    out.emplace_back("sources.reopen_attempts", reopen_attempts_);
    for (const auto& w : workers_) {
      const auto r = w->report();
      out.emplace_back("sink." + r.name + ".delivered", r.delivered);
      out.emplace_back("sink." + r.name + ".dropped", r.dropped);
      out.emplace_back("sink." + r.name + ".failures", r.failures);
      for (const auto& [k, v] : w->sink_counters()) out.emplace_back(k, v);
    }
    return out;
  }

  std::string location() const override { return cfg_.location; }

  std::uint64_t cycles_completed() const { return cycles_.load(); }

  std::vector<SinkReport> sink_reports() const {
    std::vector<SinkReport> out;
    for (const auto& w : workers_) out.push_back(w->report());
    return out;
  }

private:
  // Last-known-good tracking for one sensor.
  struct SensorState {
    bool ever_fresh = false;
    int misses = 0;
    std::uint64_t stale_cycles = 0;

    SensorFaultFlags tick(bool fresh, int stale_after) {
      SensorFaultFlags flags;
      if (fresh) {
        misses = 0;
        ever_fresh = true;
      } else {
        ++misses;
        ++stale_cycles;
        flags.stale = true;
        flags.lost = misses >= stale_after;
      }
      return flags;
    }
  };

  class SinkWorker {
  public:
    SinkWorker(std::unique_ptr<ReadingSink> sink, std::size_t capacity)
        : sink_(std::move(sink)), queue_(capacity) {}

    void start() {
      thread_ = std::thread([this] { consume(); });
    }

    void enqueue(std::shared_ptr<const CompositeReading> reading) {
      queue_.push(std::move(reading));
    }

    void shutdown() {
      queue_.close();
      if (thread_.joinable()) thread_.join();
      sink_->flush();
    }

    SinkReport report() const {
      return SinkReport{sink_->name(), delivered_.load(), queue_.dropped(), failures_.load()};
    }

    std::vector<std::pair<std::string, std::uint64_t>> sink_counters() const {
      return sink_->counters();
    }

  private:
    void consume() {
      for (;;) {
        auto item = queue_.pop(std::chrono::milliseconds(100));
        if (!item) {
          if (queue_.drained()) return;
          continue;
        }
        try {
          sink_->write(**item);
          ++delivered_;
        } catch (const std::exception&) {
          ++failures_;
        }
      }
    }

    std::unique_ptr<ReadingSink> sink_;
    BoundedQueue<std::shared_ptr<const CompositeReading>> queue_;
    std::thread thread_;
    std::atomic<std::uint64_t> delivered_{0};
    std::atomic<std::uint64_t> failures_{0};
  };

  void run_cycle() {
    sources_.pms5003->advance_cycle();
    sources_.dht11->advance_cycle();
    sources_.adc->advance_cycle();

    drain(*sources_.pms5003, [this](std::span<const std::uint8_t> b) { pms_scanner_.feed(b); });
    drain(*sources_.dht11, [this](std::span<const std::uint8_t> b) { dht_scanner_.feed(b); });
    drain(*sources_.adc, [this](std::span<const std::uint8_t> b) {
      adc_pending_.insert(adc_pending_.end(), b.begin(), b.end());
    });

    // Freshest value per sensor this cycle; earlier frames in the same
    // cycle are superseded.
    bool pms_fresh = false;
    for (const auto& f : pms_scanner_.take_frames()) {
      pm2_5_ = cfg_.use_cf1 ? f.pm2_5_cf1 : f.pm2_5_atm;
      pm10_ = cfg_.use_cf1 ? f.pm10_cf1 : f.pm10_atm;
      pms_fresh = true;
    }

    bool dht_fresh = false;
    for (const auto& f : dht_scanner_.take_frames()) {
      if (!f.in_rated_range()) ++dht_out_of_range_;
      temperature_ = f.temperature();
      humidity_ = f.humidity();
      dht_fresh = true;
    }

    bool adc_fresh = false;
    while (adc_pending_.size() >= 2) {
      const int adc = (adc_pending_[0] << 8) | adc_pending_[1];
      adc_pending_.erase(adc_pending_.begin(), adc_pending_.begin() + 2);
      ++adc_samples_;
      if (const auto rs = adc_to_rs(adc, cal_)) {
        co_ppm_ = rs_to_ppm(*rs, cal_);
        adc_fresh = true;
      } else {
        ++adc_saturated_;
      }
    }

    retry_lost_sources();

    auto reading = std::make_shared<CompositeReading>();
    reading->seq = cycles_.load() + 1;
    reading->wall_time = std::chrono::system_clock::now();
    reading->mono_time = std::chrono::steady_clock::now();
    reading->pm2_5 = pm2_5_;
    reading->pm10 = pm10_;
    reading->temperature = temperature_;
    reading->humidity = humidity_;
    reading->co_ppm = co_ppm_;
    reading->faults.pms5003 = pms_state_.tick(pms_fresh, cfg_.stale_after);
    reading->faults.dht11 = dht_state_.tick(dht_fresh, cfg_.stale_after);
    reading->faults.mq135 = adc_state_.tick(adc_fresh, cfg_.stale_after);
    reading->aqi = compute_reading_aqi(pm2_5_, pm10_, co_ppm_, tables_);

    {
      std::lock_guard lock(ring_mutex_);
      ring_.push_back(reading);
      while (ring_.size() > cfg_.history_capacity) ring_.pop_front();
    }
    std::atomic_store(&latest_, std::shared_ptr<const CompositeReading>(reading));
    for (auto& w : workers_) w->enqueue(reading);
    ++cycles_;
  }

  template <typename Feed>
  void drain(ByteSource& source, Feed&& feed) {
    std::array<std::uint8_t, 512> buf{};
    // Per-cycle cap so a firehose source cannot pin the loop.
    for (int i = 0; i < 128; ++i) {
      const std::size_t n = source.poll(buf);
      if (n == 0) break;
      feed(std::span<const std::uint8_t>(buf.data(), n));
    }
  }

  void retry_lost_sources() {
    for (ByteSource* s : {sources_.pms5003.get(), sources_.dht11.get(), sources_.adc.get()}) {
      if (s->closed() && !cfg_.stop_when_sources_end) {
        ++reopen_attempts_;
        s->reopen();
      }
    }
  }

  bool all_sources_ended() const {
    return sources_.pms5003->closed() && sources_.dht11->closed() && sources_.adc->closed() &&
           pms_scanner_.buffered() < kPmsFrameSize && adc_pending_.size() < 2;
  }

  void sleep_until_or_stop(std::chrono::steady_clock::time_point deadline) {
    while (!stop_.load(std::memory_order_relaxed)) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return;
      const auto left = deadline - now;
      std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
          left, std::chrono::milliseconds(20)));
    }
  }

  void shutdown_sinks() {
    if (sinks_down_) return;
    sinks_down_ = true;
    for (auto& w : workers_) w->shutdown();
  }

  SamplingConfig cfg_;
  BreakpointSet tables_;
  Mq135Config cal_;
  SourceSet sources_;

  Pms5003Scanner pms_scanner_;
  Dht11Scanner dht_scanner_;
  std::vector<std::uint8_t> adc_pending_;

  // Last-known-good values; zeros until a sensor first reports.
  int pm2_5_ = 0;
  int pm10_ = 0;
  double temperature_ = 0.0;
  double humidity_ = 0.0;
  double co_ppm_ = 0.0;

  SensorState pms_state_;
  SensorState dht_state_;
  SensorState adc_state_;

  std::uint64_t dht_out_of_range_ = 0;
  std::uint64_t adc_samples_ = 0;
  std::uint64_t adc_saturated_ = 0;
  std::uint64_t reopen_attempts_ = 0;

  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> cycles_{0};

  mutable std::mutex ring_mutex_;
  std::deque<std::shared_ptr<const CompositeReading>> ring_;
  std::shared_ptr<const CompositeReading> latest_;

  std::vector<std::unique_ptr<SinkWorker>> workers_;
  bool sinks_down_ = false;
};

} // namespace airmon

#endif
