#ifndef AIRMON_TELEMETRY_HPP
#define AIRMON_TELEMETRY_HPP

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "airmon/errors.hpp"
#include "airmon/net.hpp"
#include "airmon/reading.hpp"

namespace airmon {

// ---------------------------------------------------------------------------
// Line protocol
//
// One reading per line, CRLF-terminated, fixed field order:
//   PM2.5:<int> PM10:<int> T:<int> H:<int> CO:<d.dd> AQI:<int> CAT:<word>
// This is the stream the Bluetooth serial path carries and the unit the
// query protocol answers in. Self-synchronizing: a reader joining
// mid-stream recovers at the next CRLF.
// ---------------------------------------------------------------------------

inline std::string telemetry_line(const CompositeReading& r) {
  std::string s;
  s += "PM2.5:";
  s += std::to_string(r.pm2_5);
  s += " PM10:";
  s += std::to_string(r.pm10);
  s += " T:";
  s += std::to_string(display_int(r.temperature));
  s += " H:";
  s += std::to_string(display_int(r.humidity));
  s += " CO:";
  s += format_co(r.co_ppm);
  s += " AQI:";
  s += std::to_string(r.aqi.overall);
  s += " CAT:";
  s += to_string(r.aqi.category);
  s += "\r\n";
  return s;
}

struct TelemetryFields {
  int pm2_5 = 0;
  int pm10 = 0;
  int temperature = 0;
  int humidity = 0;
  double co = 0.0;
  int aqi = 0;
  AqiCategory category = AqiCategory::good;

  bool operator==(const TelemetryFields&) const = default;
};

/// Parses one telemetry line (with or without trailing CRLF); throws Error
/// on any deviation from the pinned layout.
inline TelemetryFields parse_telemetry_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);

  static constexpr std::array<std::string_view, 7> kKeys{
      "PM2.5", "PM10", "T", "H", "CO", "AQI", "CAT"};

  std::array<std::string_view, 7> values{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < kKeys.size(); ++i) {
    if (i > 0) {
      if (pos >= line.size() || line[pos] != ' ')
        throw Error("telemetry line: expected space before " + std::string(kKeys[i]));
      ++pos;
    }
    const auto& key = kKeys[i];
    if (line.compare(pos, key.size(), key) != 0 || pos + key.size() >= line.size() ||
        line[pos + key.size()] != ':')
      throw Error("telemetry line: expected \"" + std::string(key) + ":\"");
    pos += key.size() + 1;
    const auto end = line.find(' ', pos);
    const auto stop = (i + 1 < kKeys.size()) ? end : std::string_view::npos;
    values[i] = line.substr(pos, stop == std::string_view::npos ? line.size() - pos : stop - pos);
    pos += values[i].size();
  }

  auto to_int = [](std::string_view s, const char* what) {
    int v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw Error(std::string("telemetry line: bad ") + what);
    return v;
  };

  TelemetryFields f;
  f.pm2_5 = to_int(values[0], "PM2.5");
  f.pm10 = to_int(values[1], "PM10");
  f.temperature = to_int(values[2], "T");
  f.humidity = to_int(values[3], "H");
  f.co = std::stod(std::string(values[4]));
  f.aqi = to_int(values[5], "AQI");
  const auto cat = category_from_string(values[6]);
  if (!cat) throw Error("telemetry line: unknown category \"" + std::string(values[6]) + "\"");
  f.category = *cat;
  return f;
}

/// The display-truncated fields a reading is expected to serialize to.
inline TelemetryFields expected_fields(const CompositeReading& r) {
  TelemetryFields f;
  f.pm2_5 = r.pm2_5;
  f.pm10 = r.pm10;
  f.temperature = display_int(r.temperature);
  f.humidity = display_int(r.humidity);
  f.co = std::stod(format_co(r.co_ppm));
  f.aqi = r.aqi.overall;
  f.category = r.aqi.category;
  return f;
}

// ---------------------------------------------------------------------------
// Byte sinks (the HC-05 stand-in: any write-only octet pipe)
// ---------------------------------------------------------------------------

class ByteSink {
public:
  virtual ~ByteSink() = default;
  /// Writes the whole buffer or fails. Never blocks past the sink's
  /// configured timeout.
  virtual bool write(std::span<const std::uint8_t> data) = 0;
  virtual bool closed() const = 0;
  virtual bool reopen() { return false; }
};

/// Sink on a filesystem path (serial device node, FIFO, or file).
class FdByteSink : public ByteSink {
public:
  explicit FdByteSink(std::string path, std::chrono::milliseconds timeout = std::chrono::milliseconds(250))
      : path_(std::move(path)), timeout_(timeout) {
    if (!open_fd()) throw IoError("cannot open sink: " + path_);
  }

  ~FdByteSink() override {
    if (fd_ >= 0) ::close(fd_);
  }

  bool write(std::span<const std::uint8_t> data) override {
    if (fd_ < 0) return false;
    if (detail::send_all(fd_, data, false, timeout_)) return true;
    ::close(fd_);
    fd_ = -1;
    return false;
  }

  bool closed() const override { return fd_ < 0; }

  bool reopen() override {
    if (fd_ >= 0) return true;
    return open_fd();
  }

private:
  bool open_fd() {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_NONBLOCK, 0644);
    return fd_ >= 0;
  }

  std::string path_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
};

/// Sink on an outgoing TCP connection ("host:port").
class TcpByteSink : public ByteSink {
public:
  explicit TcpByteSink(std::string endpoint,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(250))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {
    if (!reopen()) throw IoError("cannot connect sink: " + endpoint_);
  }

  ~TcpByteSink() override {
    if (fd_ >= 0) ::close(fd_);
  }

  bool write(std::span<const std::uint8_t> data) override {
    if (fd_ < 0) return false;
    if (detail::send_all(fd_, data, true, timeout_)) return true;
    ::close(fd_);
    fd_ = -1;
    return false;
  }

  bool closed() const override { return fd_ < 0; }

  bool reopen() override {
    if (fd_ >= 0) return true;
    fd_ = detail::tcp_connect(endpoint_);
    return fd_ >= 0;
  }

private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
};

/// Formats readings as telemetry lines onto a byte sink, in seq order.
/// Failed writes are counted and the port is retried on later readings.
class LineEmitter {
public:
  explicit LineEmitter(std::unique_ptr<ByteSink> sink) : sink_(std::move(sink)) {}

  void emit(const CompositeReading& r) {
    const std::string line = telemetry_line(r);
    if (sink_->closed() && !sink_->reopen()) {
      ++port_errors_;
      return;
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(line.data());
    if (sink_->write(std::span<const std::uint8_t>(p, line.size())))
      ++lines_emitted_;
    else
      ++port_errors_;
  }

  std::uint64_t lines_emitted() const { return lines_emitted_; }
  std::uint64_t port_errors() const { return port_errors_; }

private:
  std::unique_ptr<ByteSink> sink_;
  std::uint64_t lines_emitted_ = 0;
  std::uint64_t port_errors_ = 0;
};

// ---------------------------------------------------------------------------
// Query protocol
//
// Plain text over TCP, CRLF lines, trusted-LAN only:
//   GET LATEST       -> one telemetry line            (ERR not-ready before
//                                                      the first cycle)
//   GET HISTORY <k>  -> up to k lines oldest-first, then one blank line
//   GET STATS        -> key:value counter lines, then one blank line
//   anything else    -> ERR unknown-command
// ---------------------------------------------------------------------------

class QueryBackend {
public:
  virtual ~QueryBackend() = default;
  virtual std::optional<CompositeReading> latest() const = 0;
  virtual std::vector<CompositeReading> history(std::size_t last_k) const = 0;
  virtual std::vector<std::pair<std::string, std::uint64_t>> stats() const = 0;
  /// Station label (the device cannot sense position, so the operator
  /// configures one); echoed as the first GET STATS line when set.
  virtual std::string location() const { return {}; }
};

class QueryServer {
public:
  /// Binds immediately (throws IoError - the CLI maps this to its sink
  /// bind-failure exit code). Port 0 picks an ephemeral port, readable via
  /// port() - tests rely on this.
  QueryServer(const QueryBackend& backend, const std::string& bind_addr, std::uint16_t port,
              std::size_t max_connections = 32)
      : backend_(backend), max_connections_(max_connections) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError("query server: socket failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      throw IoError("query server: bad bind address " + bind_addr);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
      ::close(listen_fd_);
      throw IoError("query server: cannot bind " + bind_addr + ":" + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~QueryServer() { stop(); }

  QueryServer(const QueryServer&) = delete;
  QueryServer& operator=(const QueryServer&) = delete;

  void start() {
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) {
      if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
      }
      return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (accept_thread_.joinable()) accept_thread_.join();
    // Connection threads are detached; they notice running_ within one
    // poll interval. Wait for the counter to drain before returning so
    // the backend reference stays valid for their whole lifetime.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (active_.load() > 0 && std::chrono::steady_clock::now() < deadline)
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  std::uint16_t port() const { return port_; }
  std::uint64_t connections_served() const { return connections_served_; }
  std::uint64_t connections_dropped() const { return connections_dropped_; }
  std::uint64_t send_failures() const { return send_failures_; }

private:
  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (!running_) break;
        if (errno == EINTR) continue;
        break;
      }
      if (active_.fetch_add(1) >= static_cast<int>(max_connections_)) {
        active_.fetch_sub(1);
        ::close(fd);
        ++connections_dropped_;
        continue;
      }
      ++connections_served_;
      std::thread([this, fd] {
        serve_connection(fd);
        active_.fetch_sub(1);
      }).detach();
    }
  }

  void serve_connection(int fd) {
    std::string buffer;
    std::array<char, 1024> chunk{};
    while (running_) {
      pollfd pfd{fd, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, 200);
      if (pr < 0 && errno != EINTR) break;
      if (pr <= 0) continue;
      const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
      if (n <= 0) break;
      buffer.append(chunk.data(), static_cast<std::size_t>(n));
      if (buffer.size() > 4096) break; // no legitimate request is this long
      std::size_t nl;
      bool dead = false;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!respond(fd, line)) {
          dead = true;
          break;
        }
      }
      if (dead) break;
    }
    ::close(fd);
  }

  bool send_str(int fd, std::string_view s) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    // A client that never drains its socket gets cut off here rather than
    // holding the connection's buffers forever.
    if (detail::send_all(fd, std::span<const std::uint8_t>(p, s.size()), true,
                         std::chrono::milliseconds(500)))
      return true;
    ++send_failures_;
    return false;
  }

  bool respond(int fd, const std::string& request) {
    if (request == "GET LATEST") {
      const auto r = backend_.latest();
      if (!r) return send_str(fd, "ERR not-ready\r\n");
      return send_str(fd, telemetry_line(*r));
    }
    if (request.rfind("GET HISTORY ", 0) == 0) {
      const std::string_view arg = std::string_view(request).substr(12);
      std::size_t k{};
      auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
      if (ec != std::errc{} || p != arg.data() + arg.size())
        return send_str(fd, "ERR bad-argument\r\n");
      std::string out;
      for (const auto& r : backend_.history(k)) out += telemetry_line(r);
      out += "\r\n";
      return send_str(fd, out);
    }
    if (request == "GET STATS") {
      std::string out;
      if (const auto loc = backend_.location(); !loc.empty()) out += "location:" + loc + "\r\n";
      for (const auto& [key, value] : backend_.stats())
        out += key + ":" + std::to_string(value) + "\r\n";
      out += "query.connections:" + std::to_string(connections_served_.load()) + "\r\n";
      out += "query.dropped_connections:" + std::to_string(connections_dropped_.load()) + "\r\n";
      out += "query.send_failures:" + std::to_string(send_failures_.load()) + "\r\n";
      out += "\r\n";
      return send_str(fd, out);
    }
    return send_str(fd, "ERR unknown-command\r\n");
  }

  const QueryBackend& backend_;
  const std::size_t max_connections_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<int> active_{0};
  std::thread accept_thread_;
  std::atomic<std::uint64_t> connections_served_{0};
  std::atomic<std::uint64_t> connections_dropped_{0};
  std::atomic<std::uint64_t> send_failures_{0};
};

/// One-shot client: sends a request and collects the response lines.
/// Multi-line responses (HISTORY, STATS) end at the blank line, which is
/// not included; single-line responses return one element.
inline std::vector<std::string> query_lines(const std::string& host, std::uint16_t port,
                                            const std::string& request,
                                            std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
  const int fd = [&] {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
    int s = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      s = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (s < 0) continue;
      if (::connect(s, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(s);
      s = -1;
    }
    freeaddrinfo(res);
    return s;
  }();
  if (fd < 0) throw IoError("query: cannot connect to " + host + ":" + std::to_string(port));

  const std::string req = request + "\r\n";
  if (::send(fd, req.data(), req.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(req.size())) {
    ::close(fd);
    throw IoError("query: send failed");
  }

  const bool multi_line = request.rfind("GET HISTORY", 0) == 0 || request == "GET STATS";
  std::string buf;
  std::vector<std::string> lines;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool done = false;
  while (!done) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) break;
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) break;
    std::array<char, 2048> chunk{};
    const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
    if (n <= 0) break;
    buf.append(chunk.data(), static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (multi_line && line.empty()) {
        done = true;
        break;
      }
      // an ERR line is always a complete response, even to multi-line requests
      const bool is_err = lines.empty() && line.rfind("ERR", 0) == 0;
      lines.push_back(std::move(line));
      if (!multi_line || is_err) {
        done = true;
        break;
      }
    }
  }
  ::close(fd);
  if (!done) throw IoError("query: incomplete response to \"" + request + "\"");
  return lines;
}

} // namespace airmon

#endif
