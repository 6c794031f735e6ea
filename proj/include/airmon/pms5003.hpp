#ifndef AIRMON_PMS5003_HPP
#define AIRMON_PMS5003_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace airmon {

// PMS5003 wire format (datasheet "active mode" output):
//   0x42 0x4D | length (BE, = 28) | 13 big-endian data words | checksum
// The checksum is the 16-bit sum of the first 30 octets. Every frame is
// exactly 32 octets.
inline constexpr std::uint8_t kPmsSync0 = 0x42;
inline constexpr std::uint8_t kPmsSync1 = 0x4D;
inline constexpr std::size_t kPmsFrameSize = 32;
inline constexpr std::uint16_t kPmsLengthWord = 28;

struct Pms5003Frame {
  // CF=1 (factory calibration) mass concentrations, ug/m3.
  std::uint16_t pm1_0_cf1 = 0;
  std::uint16_t pm2_5_cf1 = 0;
  std::uint16_t pm10_cf1 = 0;
  // Atmospheric-environment corrected mass concentrations, ug/m3.
  std::uint16_t pm1_0_atm = 0;
  std::uint16_t pm2_5_atm = 0;
  std::uint16_t pm10_atm = 0;
  // Particle counts per 0.1 L, for sizes >0.3/0.5/1.0/2.5/5.0/10 um.
  std::array<std::uint16_t, 6> counts{};
  std::uint16_t reserved = 0;

  bool operator==(const Pms5003Frame&) const = default;

  /// Counts should not increase with particle size. The decoder reports
  /// this but never rejects a frame over it.
  bool counts_monotone() const {
    for (std::size_t i = 1; i < counts.size(); ++i)
      if (counts[i] > counts[i - 1]) return false;
    return true;
  }
};

enum class Pms5003Status { ok, bad_sync, bad_length, bad_checksum, truncated };

inline const char* to_string(Pms5003Status s) {
  switch (s) {
    case Pms5003Status::ok: return "OK";
    case Pms5003Status::bad_sync: return "BADSYNC";
    case Pms5003Status::bad_length: return "BADLENGTH";
    case Pms5003Status::bad_checksum: return "BADCHECKSUM";
    case Pms5003Status::truncated: return "TRUNCATED";
  }
  return "?";
}

struct Pms5003Decode {
  Pms5003Status status = Pms5003Status::truncated;
  Pms5003Frame frame{};
  std::size_t consumed = 0;
};

namespace detail {

inline void put_be16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v & 0xFF);
}

inline std::uint16_t get_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

} // namespace detail

inline std::array<std::uint8_t, kPmsFrameSize> pms5003_encode(const Pms5003Frame& f) {
  std::array<std::uint8_t, kPmsFrameSize> out{};
  out[0] = kPmsSync0;
  out[1] = kPmsSync1;
  detail::put_be16(&out[2], kPmsLengthWord);
  const std::array<std::uint16_t, 13> words{
      f.pm1_0_cf1, f.pm2_5_cf1, f.pm10_cf1,
      f.pm1_0_atm, f.pm2_5_atm, f.pm10_atm,
      f.counts[0], f.counts[1], f.counts[2],
      f.counts[3], f.counts[4], f.counts[5],
      f.reserved,
  };
  for (std::size_t i = 0; i < words.size(); ++i)
    detail::put_be16(&out[4 + 2 * i], words[i]);
  std::uint16_t sum = 0;
  for (std::size_t i = 0; i < kPmsFrameSize - 2; ++i) sum += out[i];
  detail::put_be16(&out[30], sum);
  return out;
}

/// Attempts to decode one frame at the start of `window`. On success,
/// consumed == 32. Failures consume nothing; resynchronization granularity
/// is the caller's policy (Pms5003Scanner advances one octet).
inline Pms5003Decode pms5003_decode(std::span<const std::uint8_t> window) {
  Pms5003Decode r;
  if (window.empty()) {
    r.status = Pms5003Status::truncated;
    return r;
  }
  if (window[0] != kPmsSync0 || (window.size() >= 2 && window[1] != kPmsSync1)) {
    r.status = Pms5003Status::bad_sync;
    return r;
  }
  if (window.size() < kPmsFrameSize) {
    r.status = Pms5003Status::truncated;
    return r;
  }
  if (detail::get_be16(&window[2]) != kPmsLengthWord) {
    r.status = Pms5003Status::bad_length;
    return r;
  }
  std::uint16_t sum = 0;
  for (std::size_t i = 0; i < kPmsFrameSize - 2; ++i) sum += window[i];
  if (sum != detail::get_be16(&window[30])) {
    r.status = Pms5003Status::bad_checksum;
    return r;
  }
  auto& f = r.frame;
  f.pm1_0_cf1 = detail::get_be16(&window[4]);
  f.pm2_5_cf1 = detail::get_be16(&window[6]);
  f.pm10_cf1 = detail::get_be16(&window[8]);
  f.pm1_0_atm = detail::get_be16(&window[10]);
  f.pm2_5_atm = detail::get_be16(&window[12]);
  f.pm10_atm = detail::get_be16(&window[14]);
  for (std::size_t i = 0; i < 6; ++i) f.counts[i] = detail::get_be16(&window[16 + 2 * i]);
  f.reserved = detail::get_be16(&window[28]);
  r.status = Pms5003Status::ok;
  r.consumed = kPmsFrameSize;
  return r;
}

struct ScannerStats {
  std::uint64_t frames = 0;
  std::uint64_t bytes_consumed = 0;
  std::uint64_t bytes_skipped = 0;
  std::uint64_t bad_checksum = 0;
  std::uint64_t bad_length = 0;
};

/// Stream resynchronizer. Feed arbitrary octets; every valid frame embedded
/// in the stream is eventually emitted. On any validation failure the
/// scanner advances a single octet, so a valid frame after a garbage prefix
/// of length g is emitted within g + 32 consumed octets. Single-consumer:
/// one scanner instance per input stream.
class Pms5003Scanner {
public:
  void feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    scan();
  }

  /// Frames decoded so far, in stream order; clears the internal list.
  std::vector<Pms5003Frame> take_frames() {
    std::vector<Pms5003Frame> out;
    out.swap(frames_);
    return out;
  }

  const ScannerStats& stats() const { return stats_; }
  std::size_t buffered() const { return buffer_.size(); }

private:
  void scan() {
    while (head_ < buffer_.size()) {
      const auto r = pms5003_decode(
          std::span<const std::uint8_t>(buffer_.data() + head_, buffer_.size() - head_));
      if (r.status == Pms5003Status::ok) {
        frames_.push_back(r.frame);
        ++stats_.frames;
        stats_.bytes_consumed += r.consumed;
        head_ += r.consumed;
        continue;
      }
      if (r.status == Pms5003Status::truncated) break;
      if (r.status == Pms5003Status::bad_checksum) ++stats_.bad_checksum;
      if (r.status == Pms5003Status::bad_length) ++stats_.bad_length;
      ++head_;
      ++stats_.bytes_skipped;
      ++stats_.bytes_consumed;
    }
    if (head_ > 0) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::vector<Pms5003Frame> frames_;
  ScannerStats stats_;
};

} // namespace airmon

#endif
