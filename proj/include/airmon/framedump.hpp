#ifndef AIRMON_FRAMEDUMP_HPP
#define AIRMON_FRAMEDUMP_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "airmon/errors.hpp"

namespace airmon {

// Capture dump format: a flat sequence of records, each
//   kind octet | payload length (32-bit big-endian) | payload
// Kinds 0x01/0x02/0x03 are the three sensor channels. A record holds one
// cycle's worth of raw stream bytes for that channel; an empty payload is
// a silent cycle, which keeps replay pacing byte-faithful.
enum class ChannelKind : std::uint8_t {
  pms5003 = 0x01,
  dht11 = 0x02,
  adc = 0x03,
};

inline const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::pms5003: return "pms5003";
    case ChannelKind::dht11: return "dht11";
    case ChannelKind::adc: return "adc";
  }
  return "?";
}

struct DumpRecord {
  ChannelKind kind = ChannelKind::pms5003;
  std::vector<std::uint8_t> payload;

  bool operator==(const DumpRecord&) const = default;
};

inline void write_dump_record(std::ostream& out, ChannelKind kind,
                              std::span<const std::uint8_t> payload) {
  const auto len = static_cast<std::uint32_t>(payload.size());
  const std::uint8_t header[5] = {
      static_cast<std::uint8_t>(kind),
      static_cast<std::uint8_t>(len >> 24),
      static_cast<std::uint8_t>(len >> 16),
      static_cast<std::uint8_t>(len >> 8),
      static_cast<std::uint8_t>(len),
  };
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  if (!payload.empty())
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("dump write failed");
}

inline std::vector<DumpRecord> read_dump(std::istream& in) {
  std::vector<DumpRecord> records;
  std::uint64_t offset = 0;
  for (;;) {
    std::uint8_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (in.gcount() == 0 && in.eof()) break;
    if (in.gcount() != sizeof header)
      throw MalformedDump("truncated record header at offset " + std::to_string(offset));
    const auto kind = header[0];
    if (kind != 0x01 && kind != 0x02 && kind != 0x03)
      throw MalformedDump("unknown kind byte " + std::to_string(kind) + " at offset " +
                          std::to_string(offset));
    const std::uint32_t len = (std::uint32_t{header[1]} << 24) | (std::uint32_t{header[2]} << 16) |
                              (std::uint32_t{header[3]} << 8) | std::uint32_t{header[4]};
    DumpRecord rec;
    rec.kind = static_cast<ChannelKind>(kind);
    rec.payload.resize(len);
    if (len > 0) {
      in.read(reinterpret_cast<char*>(rec.payload.data()), static_cast<std::streamsize>(len));
      if (in.gcount() != static_cast<std::streamsize>(len))
        throw MalformedDump("truncated payload at offset " + std::to_string(offset));
    }
    records.push_back(std::move(rec));
    offset += sizeof header + len;
  }
  return records;
}

inline std::vector<DumpRecord> read_dump_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dump file: " + path.string());
  return read_dump(in);
}

} // namespace airmon

#endif
