#ifndef AIRMON_SOURCES_HPP
#define AIRMON_SOURCES_HPP

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "airmon/errors.hpp"
#include "airmon/net.hpp"
#include "airmon/simulator.hpp"

namespace airmon {

/// A non-blocking octet stream feeding one sensor channel.
class ByteSource {
public:
  virtual ~ByteSource() = default;

  /// Pacing hook: called once at the start of every sampling cycle.
  /// Paced sources (simulator, replay) release the next cycle's bytes
  /// here; live sources ignore it.
  virtual void advance_cycle() {}

  /// Non-blocking read; returns the number of octets written into `out`
  /// (0 when nothing is pending).
  virtual std::size_t poll(std::span<std::uint8_t> out) = 0;

  virtual bool closed() const { return false; }

  /// Attempt to re-establish a lost stream. Returns true on success.
  virtual bool reopen() { return false; }
};

/// Cycle-paced in-memory source; backs both the simulator and dump replay.
class MemorySource : public ByteSource {
public:
  explicit MemorySource(std::vector<std::vector<std::uint8_t>> cycles)
      : cycles_(std::move(cycles)) {}

  void advance_cycle() override {
    if (next_ < cycles_.size()) {
      auto& chunk = cycles_[next_++];
      pending_.insert(pending_.end(), chunk.begin(), chunk.end());
    }
  }

  std::size_t poll(std::span<std::uint8_t> out) override {
    const std::size_t n = std::min(out.size(), pending_.size() - offset_);
    std::copy_n(pending_.begin() + static_cast<std::ptrdiff_t>(offset_), n, out.begin());
    offset_ += n;
    if (offset_ == pending_.size()) {
      pending_.clear();
      offset_ = 0;
    }
    return n;
  }

  bool closed() const override {
    return next_ >= cycles_.size() && pending_.empty();
  }

private:
  std::vector<std::vector<std::uint8_t>> cycles_;
  std::size_t next_ = 0;
  std::vector<std::uint8_t> pending_;
  std::size_t offset_ = 0;
};

/// Byte stream from a filesystem path: a serial device node, a FIFO, or a
/// plain file. The descriptor is non-blocking; EOF marks the source
/// closed (reopen() retries the same path). Serial line settings are not
/// touched here - an HC-05 style adapter default of 9600-8-N-1 is assumed
/// to be configured externally.
class FdSource : public ByteSource {
public:
  explicit FdSource(std::string path) : path_(std::move(path)) {
    if (!open_fd()) throw IoError("cannot open source: " + path_);
  }

  ~FdSource() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::size_t poll(std::span<std::uint8_t> out) override {
    if (fd_ < 0) return 0;
    const ssize_t n = ::read(fd_, out.data(), out.size());
    if (n > 0) return static_cast<std::size_t>(n);
    if (n == 0) {
      ::close(fd_);
      fd_ = -1;
      return 0;
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return 0;
    ::close(fd_);
    fd_ = -1;
    return 0;
  }

  bool closed() const override { return fd_ < 0; }

  bool reopen() override {
    if (fd_ >= 0) return true;
    return open_fd();
  }

private:
  bool open_fd() {
    fd_ = ::open(path_.c_str(), O_RDONLY | O_NONBLOCK);
    return fd_ >= 0;
  }

  std::string path_;
  int fd_ = -1;
};

class TcpSource : public ByteSource {
public:
  explicit TcpSource(std::string endpoint) : endpoint_(std::move(endpoint)) {
    fd_ = detail::tcp_connect(endpoint_);
    if (fd_ < 0) throw IoError("cannot connect source: " + endpoint_);
  }

  ~TcpSource() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::size_t poll(std::span<std::uint8_t> out) override {
    if (fd_ < 0) return 0;
    const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
    if (n > 0) return static_cast<std::size_t>(n);
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) return 0;
    ::close(fd_);
    fd_ = -1;
    return 0;
  }

  bool closed() const override { return fd_ < 0; }

  bool reopen() override {
    if (fd_ >= 0) return true;
    fd_ = detail::tcp_connect(endpoint_);
    return fd_ >= 0;
  }

private:
  std::string endpoint_;
  int fd_ = -1;
};

/// The three per-channel sources a gateway samples from.
struct SourceSet {
  std::unique_ptr<ByteSource> pms5003;
  std::unique_ptr<ByteSource> dht11;
  std::unique_ptr<ByteSource> adc;
};

inline SourceSet sources_from_streams(SimulatedStreams streams) {
  SourceSet s;
  s.pms5003 = std::make_unique<MemorySource>(std::move(streams.pms5003.per_cycle));
  s.dht11 = std::make_unique<MemorySource>(std::move(streams.dht11.per_cycle));
  s.adc = std::make_unique<MemorySource>(std::move(streams.adc.per_cycle));
  return s;
}

} // namespace airmon

#endif
