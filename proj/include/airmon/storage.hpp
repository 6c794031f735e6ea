#ifndef AIRMON_STORAGE_HPP
#define AIRMON_STORAGE_HPP

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "airmon/errors.hpp"
#include "airmon/reading.hpp"

namespace airmon {

/// One log line in the SD-card layout: seven columns, fixed order.
/// Integers bare, CO with exactly two decimals.
struct CsvRecord {
  std::uint64_t no = 0; // 1-based per file
  int pm2_5 = 0;
  int pm10 = 0;
  int temperature = 0;
  int humidity = 0;
  double co = 0.0;
  int aqi = 0;

  std::string to_line() const {
    std::string s;
    s += std::to_string(no);
    s += ',';
    s += std::to_string(pm2_5);
    s += ',';
    s += std::to_string(pm10);
    s += ',';
    s += std::to_string(temperature);
    s += ',';
    s += std::to_string(humidity);
    s += ',';
    s += format_co(co);
    s += ',';
    s += std::to_string(aqi);
    return s;
  }

  static CsvRecord from_line(std::string_view line);

  bool operator==(const CsvRecord&) const = default;
};

inline constexpr std::string_view kCsvHeader = "no,pm2.5,pm10,temperature,humidity,co,aqi";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

template <typename T>
T parse_num(std::string_view s, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end)
    throw IoError(std::string("csv: bad ") + what + " field: \"" + std::string(s) + "\"");
  return v;
}

} // namespace detail

inline CsvRecord CsvRecord::from_line(std::string_view line) {
  const auto f = detail::split_fields(line, ',');
  if (f.size() != 7) throw IoError("csv: expected 7 columns, got " + std::to_string(f.size()));
  CsvRecord r;
  r.no = detail::parse_num<std::uint64_t>(f[0], "no");
  r.pm2_5 = detail::parse_num<int>(f[1], "pm2.5");
  r.pm10 = detail::parse_num<int>(f[2], "pm10");
  r.temperature = detail::parse_num<int>(f[3], "temperature");
  r.humidity = detail::parse_num<int>(f[4], "humidity");
  r.co = detail::parse_num<double>(f[5], "co");
  r.aqi = detail::parse_num<int>(f[6], "aqi");
  return r;
}

inline CsvRecord to_csv_record(const CompositeReading& reading) {
  CsvRecord r;
  r.pm2_5 = reading.pm2_5;
  r.pm10 = reading.pm10;
  r.temperature = display_int(reading.temperature);
  r.humidity = display_int(reading.humidity);
  r.co = reading.co_ppm;
  r.aqi = reading.aqi.overall;
  return r;
}

/// Rotation thresholds; 0 disables that trigger.
struct RotationPolicy {
  std::uint64_t max_rows = 0;
  std::uint64_t max_bytes = 0;
};

/// Appending CSV writer with rotation and crash-safe lines. Each line goes
/// to disk as a single write(2) on an O_APPEND descriptor followed by
/// fsync, so a killed process leaves a valid header plus whole lines.
/// Single-writer: exactly one consumer context appends to a logger.
class CsvLogger {
public:
  CsvLogger(std::filesystem::path dir, std::string prefix, RotationPolicy policy = {},
            bool headerless = false)
      : dir_(std::move(dir)), prefix_(std::move(prefix)), policy_(policy),
        headerless_(headerless) {
    std::filesystem::create_directories(dir_);
    open_new_file();
  }

  ~CsvLogger() { close(); }

  CsvLogger(const CsvLogger&) = delete;
  CsvLogger& operator=(const CsvLogger&) = delete;

  /// Appends one record; the row number is assigned by the logger (dense,
  /// 1-based, resets on rotation). Rotation happens before the write when
  /// a policy threshold has been reached.
  CsvRecord append(CsvRecord record) {
    if (fd_ < 0) throw IoError("csv logger is closed");
    if (should_rotate()) rotate();
    record.no = rows_in_file_ + 1;
    std::string line = record.to_line();
    line += '\n';
    write_all(line);
    ++rows_in_file_;
    return record;
  }

  CsvRecord append(const CompositeReading& reading) { return append(to_csv_record(reading)); }

  /// Closes the current file and opens a fresh one (timestamp-named).
  void rotate() {
    close_current();
    open_new_file();
  }

  void flush() {
    if (fd_ >= 0) ::fsync(fd_);
  }

  void close() {
    if (fd_ >= 0) close_current();
  }

  const std::filesystem::path& current_path() const { return path_; }
  std::uint64_t rows_in_file() const { return rows_in_file_; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

private:
  bool should_rotate() const {
    if (policy_.max_rows > 0 && rows_in_file_ >= policy_.max_rows) return true;
    if (policy_.max_bytes > 0 && bytes_in_file_ >= policy_.max_bytes) return true;
    return false;
  }

  void open_new_file() {
    path_ = next_path();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_EXCL, 0644);
    if (fd_ < 0) throw IoError("cannot create log file: " + path_.string());
    files_.push_back(path_);
    rows_in_file_ = 0;
    bytes_in_file_ = 0;
    if (!headerless_) {
      std::string header(kCsvHeader);
      header += '\n';
      write_all(header);
    }
  }

  void close_current() {
    ::fsync(fd_);
    ::close(fd_);
    fd_ = -1;
  }

  std::filesystem::path next_path() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    std::filesystem::path p = dir_ / (prefix_ + "-" + stamp + ".csv");
    for (int n = 1; std::filesystem::exists(p); ++n)
      p = dir_ / (prefix_ + "-" + stamp + "-" + std::to_string(n) + ".csv");
    return p;
  }

  void write_all(const std::string& data) {
    const ssize_t n = ::write(fd_, data.data(), data.size());
    if (n != static_cast<ssize_t>(data.size())) throw IoError("short write to " + path_.string());
    if (::fsync(fd_) != 0) throw IoError("fsync failed on " + path_.string());
    bytes_in_file_ += data.size();
  }

  std::filesystem::path dir_;
  std::string prefix_;
  RotationPolicy policy_;
  bool headerless_;
  std::filesystem::path path_;
  std::vector<std::filesystem::path> files_;
  int fd_ = -1;
  std::uint64_t rows_in_file_ = 0;
  std::uint64_t bytes_in_file_ = 0;
};

/// Strict reader for files this logger wrote. Any malformed or incomplete
/// line throws, naming the line number, so crash inspection can assert
/// line-atomicity by parsing.
inline std::vector<CsvRecord> read_csv(std::istream& in, bool headerless = false) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<CsvRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    const auto nl = content.find('\n', start);
    if (nl == std::string::npos)
      throw IoError("csv: line " + std::to_string(line_no + 1) + " is not newline-terminated");
    const std::string_view line(content.data() + start, nl - start);
    ++line_no;
    if (line_no == 1 && !headerless) {
      if (line != kCsvHeader) throw IoError("csv: bad header: \"" + std::string(line) + "\"");
    } else {
      records.push_back(CsvRecord::from_line(line));
    }
    start = nl + 1;
  }
  return records;
}

inline std::vector<CsvRecord> read_csv_file(const std::filesystem::path& path,
                                            bool headerless = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open csv file: " + path.string());
  return read_csv(in, headerless);
}

} // namespace airmon

#endif
