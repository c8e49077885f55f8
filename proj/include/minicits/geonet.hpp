#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minicits/byte_io.hpp"
#include "minicits/error.hpp"

namespace minicits {

inline constexpr std::size_t kGnHeaderSize = 44;
inline constexpr std::size_t kGnMaxPayload = 1400;
inline constexpr std::uint16_t kBtpPortCam = 2001;

/// GeoNetworking single-hop broadcast with a BTP-B header.
///
///   off  len  field
///   0    1    version(4) | nextHeader(4) = 1 | 1 (common header)
///   1    1    reserved
///   2    1    lifetime (raw)
///   3    1    remaining hop limit = 1
///   4    1    nextHeader(4) = 2 (BTP-B) | reserved(4)
///   5    1    headerType(4) = 5 (TSB) | headerSubtype(4) = 0 (SHB)
///   6    1    traffic class
///   7    1    flags = 0
///   8    2    payload length (bytes after the 44-byte header)
///   10   1    max hop limit = 1
///   11   1    reserved
///   12   8    source GN address
///   20   4    timestamp (ms mod 2^32)
///   24   4    latitude (1e-7 deg)
///   28   4    longitude (1e-7 deg)
///   32   2    speed (0.01 m/s)
///   34   2    heading (0.1 deg)
///   36   4    reserved
///   40   2    BTP destination port
///   42   2    BTP destination port info = 0
struct GnShbFrame {
  std::uint8_t lifetime = 0x50;
  std::uint8_t traffic_class = 0x02;
  std::uint64_t source_address = 0;
  std::uint32_t timestamp = 0;
  std::int32_t latitude = 0;
  std::int32_t longitude = 0;
  std::uint16_t speed = 0;
  std::uint16_t heading = 0;
  std::uint16_t btp_dest_port = kBtpPortCam;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const GnShbFrame&, const GnShbFrame&) = default;
};

namespace detail {

inline void validate_position_vector(const GnShbFrame& f) {
  if (f.latitude < -900000000 || f.latitude > 900000001) throw Error(Errc::range, "latitude", "out of range");
  if (f.longitude < -1800000000 || f.longitude > 1800000001) throw Error(Errc::range, "longitude", "out of range");
  if (f.speed > 16383) throw Error(Errc::range, "speed", "out of range");
  if (f.heading > 3601) throw Error(Errc::range, "heading", "out of range");
}

}  // namespace detail

inline std::vector<std::uint8_t> gn_encode(const GnShbFrame& f) {
  if (f.payload.size() > kGnMaxPayload) {
    throw Error(Errc::size, "payload", std::to_string(f.payload.size()) + " bytes exceeds 1400");
  }
  detail::validate_position_vector(f);
  std::vector<std::uint8_t> out;
  out.reserve(kGnHeaderSize + f.payload.size());
  detail::BeWriter w(out);
  w.u8(0x11);
  w.u8(0);
  w.u8(f.lifetime);
  w.u8(1);
  w.u8(0x20);
  w.u8(0x50);
  w.u8(f.traffic_class);
  w.u8(0);
  w.u16(static_cast<std::uint16_t>(f.payload.size()));
  w.u8(1);
  w.u8(0);
  w.u64(f.source_address);
  w.u32(f.timestamp);
  w.i32(f.latitude);
  w.i32(f.longitude);
  w.u16(f.speed);
  w.u16(f.heading);
  w.u32(0);
  w.u16(f.btp_dest_port);
  w.u16(0);
  w.bytes(f.payload);
  return out;
}

inline GnShbFrame gn_decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kGnHeaderSize) {
    throw Error(Errc::length, "", "frame shorter than 44-byte header: " + std::to_string(bytes.size()));
  }
  detail::BeReader r(bytes);
  const auto basic = r.u8();
  if ((basic >> 4) != 1) throw Error(Errc::unsupported_version, "version", std::to_string(basic >> 4));
  if ((basic & 0x0F) != 1) throw Error(Errc::unsupported_type, "basicNextHeader", std::to_string(basic & 0x0F));
  r.u8();
  GnShbFrame f;
  f.lifetime = r.u8();
  r.u8();
  const auto next_header = r.u8();
  if ((next_header >> 4) != 2) throw Error(Errc::unsupported_type, "nextHeader", "only BTP-B is supported");
  const auto type = r.u8();
  if (type != 0x50) {
    throw Error(Errc::unsupported_type, "headerType", std::to_string(type >> 4) + "/" + std::to_string(type & 0x0F));
  }
  f.traffic_class = r.u8();
  r.u8();
  const std::size_t payload_length = r.u16();
  if (payload_length != bytes.size() - kGnHeaderSize) {
    throw Error(Errc::inconsistent_length, "payloadLength",
                std::to_string(payload_length) + " != " + std::to_string(bytes.size() - kGnHeaderSize));
  }
  if (payload_length > kGnMaxPayload) throw Error(Errc::size, "payload", "exceeds 1400 bytes");
  r.u8();
  r.u8();
  f.source_address = r.u64();
  f.timestamp = r.u32();
  f.latitude = r.i32();
  f.longitude = r.i32();
  f.speed = r.u16();
  f.heading = r.u16();
  r.u32();
  f.btp_dest_port = r.u16();
  r.u16();
  detail::validate_position_vector(f);
  f.payload.assign(bytes.begin() + kGnHeaderSize, bytes.end());
  return f;
}

}  // namespace minicits
