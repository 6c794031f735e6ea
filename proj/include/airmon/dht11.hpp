#ifndef AIRMON_DHT11_HPP
#define AIRMON_DHT11_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace airmon {

// DHT11 5-byte payload: humidity integral/decimal, temperature
// integral/decimal, checksum = low 8 bits of the sum of the first four.
inline constexpr std::size_t kDht11FrameSize = 5;

struct Dht11Frame {
  std::uint8_t humidity_int = 0;
  std::uint8_t humidity_dec = 0;
  std::uint8_t temp_int = 0;
  std::uint8_t temp_dec = 0;
  std::uint8_t checksum = 0;

  bool operator==(const Dht11Frame&) const = default;

  double temperature() const { return temp_int + temp_dec / 10.0; }
  double humidity() const { return humidity_int + humidity_dec / 10.0; }

  /// DHT11 rated envelope: 0-50 C, 20-90 %RH. Values outside still decode;
  /// this just drives the out-of-range warning.
  bool in_rated_range() const {
    return temp_int <= 50 && humidity_int >= 20 && humidity_int <= 90;
  }
};

enum class Dht11Status { ok, bad_checksum };

inline const char* to_string(Dht11Status s) {
  return s == Dht11Status::ok ? "OK" : "BADCHECKSUM";
}

struct Dht11Decode {
  Dht11Status status = Dht11Status::bad_checksum;
  Dht11Frame frame{};
  bool in_rated_range = false;
};

inline std::array<std::uint8_t, kDht11FrameSize> dht11_encode(std::uint8_t humidity_int,
                                                              std::uint8_t humidity_dec,
                                                              std::uint8_t temp_int,
                                                              std::uint8_t temp_dec) {
  std::array<std::uint8_t, kDht11FrameSize> out{humidity_int, humidity_dec, temp_int, temp_dec, 0};
  out[4] = static_cast<std::uint8_t>(humidity_int + humidity_dec + temp_int + temp_dec);
  return out;
}

inline std::array<std::uint8_t, kDht11FrameSize> dht11_encode(const Dht11Frame& f) {
  return dht11_encode(f.humidity_int, f.humidity_dec, f.temp_int, f.temp_dec);
}

inline Dht11Decode dht11_decode(std::span<const std::uint8_t, kDht11FrameSize> bytes) {
  Dht11Decode r;
  r.frame = Dht11Frame{bytes[0], bytes[1], bytes[2], bytes[3], bytes[4]};
  const auto expected = static_cast<std::uint8_t>(bytes[0] + bytes[1] + bytes[2] + bytes[3]);
  r.status = (expected == bytes[4]) ? Dht11Status::ok : Dht11Status::bad_checksum;
  r.in_rated_range = r.frame.in_rated_range();
  return r;
}

/// Frame accumulator for the virtual DHT11 byte stream (consecutive 5-byte
/// frames). The 8-bit checksum doubles as a weak sync: on a checksum
/// failure the reader advances one octet, so alignment recovers after
/// corruption at the cost of counting extra failures along the way.
class Dht11Scanner {
public:
  void feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    while (buffer_.size() - head_ >= kDht11FrameSize) {
      const auto r = dht11_decode(
          std::span<const std::uint8_t, kDht11FrameSize>(buffer_.data() + head_, kDht11FrameSize));
      if (r.status == Dht11Status::ok) {
        frames_.push_back(r.frame);
        ++frames_decoded_;
        head_ += kDht11FrameSize;
      } else {
        ++head_;
        ++bad_checksum_;
      }
    }
    if (head_ > 0) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  std::vector<Dht11Frame> take_frames() {
    std::vector<Dht11Frame> out;
    out.swap(frames_);
    return out;
  }

  std::uint64_t frames_decoded() const { return frames_decoded_; }
  std::uint64_t bad_checksum() const { return bad_checksum_; }

private:
  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::vector<Dht11Frame> frames_;
  std::uint64_t frames_decoded_ = 0;
  std::uint64_t bad_checksum_ = 0;
};

} // namespace airmon

#endif
