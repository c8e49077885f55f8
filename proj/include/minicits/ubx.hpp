#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "minicits/byte_io.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

inline constexpr std::uint8_t kUbxSync1 = 0xB5;
inline constexpr std::uint8_t kUbxSync2 = 0x62;
inline constexpr std::uint8_t kUbxClassNav = 0x01;
inline constexpr std::uint8_t kUbxIdNavPvt = 0x07;
inline constexpr std::uint16_t kUbxNavPvtLength = 92;

/// Subset of UBX-NAV-PVT that the positioning pipeline consumes. Units are
/// the receiver's: 1e-7 deg, mm, mm/s, 1e-5 deg.
struct UbxNavPvt {
  std::uint32_t itow_ms = 0;
  std::uint8_t fix_type = 0;
  std::uint8_t flags = 0;
  std::uint8_t num_sv = 0;
  std::int32_t lon_e7 = 0;
  std::int32_t lat_e7 = 0;
  std::int32_t height_mm = 0;
  std::int32_t hmsl_mm = 0;
  std::int32_t ground_speed_mm_s = 0;
  std::int32_t heading_e5 = 0;

  friend bool operator==(const UbxNavPvt&, const UbxNavPvt&) = default;
};

/// 8-bit Fletcher over class, id, length and payload.
inline std::pair<std::uint8_t, std::uint8_t> ubx_fletcher(std::span<const std::uint8_t> data) {
  std::uint8_t a = 0, b = 0;
  for (auto byte : data) {
    a = static_cast<std::uint8_t>(a + byte);
    b = static_cast<std::uint8_t>(b + a);
  }
  return {a, b};
}

inline std::vector<std::uint8_t> ubx_encode_nav_pvt(const UbxNavPvt& m) {
  std::vector<std::uint8_t> out(6 + kUbxNavPvtLength + 2, 0);
  out[0] = kUbxSync1;
  out[1] = kUbxSync2;
  out[2] = kUbxClassNav;
  out[3] = kUbxIdNavPvt;
  detail::store_le16(&out[4], kUbxNavPvtLength);
  std::uint8_t* p = &out[6];
  detail::store_le32(p + 0, m.itow_ms);
  p[20] = m.fix_type;
  p[21] = m.flags;
  p[23] = m.num_sv;
  detail::store_le32(p + 24, static_cast<std::uint32_t>(m.lon_e7));
  detail::store_le32(p + 28, static_cast<std::uint32_t>(m.lat_e7));
  detail::store_le32(p + 32, static_cast<std::uint32_t>(m.height_mm));
  detail::store_le32(p + 36, static_cast<std::uint32_t>(m.hmsl_mm));
  detail::store_le32(p + 60, static_cast<std::uint32_t>(m.ground_speed_mm_s));
  detail::store_le32(p + 64, static_cast<std::uint32_t>(m.heading_e5));
  const auto [ck_a, ck_b] = ubx_fletcher(std::span(out).subspan(2, 4 + kUbxNavPvtLength));
  out[6 + kUbxNavPvtLength] = ck_a;
  out[7 + kUbxNavPvtLength] = ck_b;
  return out;
}

inline UbxNavPvt ubx_decode_nav_pvt_payload(std::span<const std::uint8_t> p) {
  UbxNavPvt m;
  m.itow_ms = detail::load_le32(&p[0]);
  m.fix_type = p[20];
  m.flags = p[21];
  m.num_sv = p[23];
  m.lon_e7 = static_cast<std::int32_t>(detail::load_le32(&p[24]));
  m.lat_e7 = static_cast<std::int32_t>(detail::load_le32(&p[28]));
  m.height_mm = static_cast<std::int32_t>(detail::load_le32(&p[32]));
  m.hmsl_mm = static_cast<std::int32_t>(detail::load_le32(&p[36]));
  m.ground_speed_mm_s = static_cast<std::int32_t>(detail::load_le32(&p[60]));
  m.heading_e5 = static_cast<std::int32_t>(detail::load_le32(&p[64]));
  return m;
}

/// Converts receiver units into a PvtFix. Position is reported only for
/// 2D/3D/GNSS+DR fixes with the gnssFixOK flag set.
inline PvtFix to_pvt_fix(const UbxNavPvt& m) {
  PvtFix fix;
  const bool fix_ok = (m.flags & 0x01) != 0 && m.fix_type >= 2 && m.fix_type <= 4;
  if (fix_ok) {
    GeoPoint p{m.lat_e7 * 1e-7, m.lon_e7 * 1e-7, m.hmsl_mm / 1000.0};
    if (p.valid()) fix.position = p;
    fix.speed_mps = m.ground_speed_mm_s / 1000.0;
    fix.heading_deg = normalize_heading(m.heading_e5 * 1e-5);
  }
  fix.timestamp_ms = static_cast<TimeMs>(m.itow_ms);
  return fix;
}

inline UbxNavPvt from_pvt_fix(const PvtFix& fix) {
  UbxNavPvt m;
  m.itow_ms = static_cast<std::uint32_t>(std::llround(fix.timestamp_ms.value_or(0.0)));
  if (fix.position) {
    m.fix_type = 3;
    m.flags = 0x01;
    m.num_sv = 8;
    m.lat_e7 = static_cast<std::int32_t>(std::llround(fix.position->latitude * 1e7));
    m.lon_e7 = static_cast<std::int32_t>(std::llround(fix.position->longitude * 1e7));
    const double alt = fix.position->altitude.value_or(0.0);
    m.hmsl_mm = static_cast<std::int32_t>(std::llround(alt * 1000.0));
    m.height_mm = m.hmsl_mm;
  }
  m.ground_speed_mm_s = static_cast<std::int32_t>(std::llround(fix.speed_mps.value_or(0.0) * 1000.0));
  m.heading_e5 = static_cast<std::int32_t>(std::llround(fix.heading_deg.value_or(0.0) * 1e5));
  return m;
}

enum class UbxStatus { frame, need_more, checksum_error, ignored };

struct UbxParseResult {
  UbxStatus status = UbxStatus::need_more;
  UbxNavPvt pvt;                 // valid when status == frame
  std::uint8_t msg_class = 0;    // set for frame / ignored
  std::uint8_t msg_id = 0;
  std::size_t skipped_bytes = 0; // garbage dropped while resynchronising
};

/// Incremental UBX reader. Bytes are appended with feed(); next() yields one
/// result at a time and only ever discards bytes it has fully judged.
class UbxParser {
 public:
  // Frames longer than this are treated as a corrupt length field.
  static constexpr std::size_t kMaxPayload = 4096;

  void feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  UbxParseResult next() {
    UbxParseResult r;
    r.skipped_bytes = resync();
    if (buf_.size() < 6) return r;
    const std::size_t len = detail::load_le16(&buf_[4]);
    if (len > kMaxPayload) {
      drop(1);
      r.status = UbxStatus::checksum_error;
      return r;
    }
    if (buf_.size() < 8 + len) return r;

    const auto body = std::span<const std::uint8_t>(buf_).subspan(2, 4 + len);
    const auto [ck_a, ck_b] = ubx_fletcher(body);
    if (ck_a != buf_[6 + len] || ck_b != buf_[7 + len]) {
      // Only the sync pair is consumed: the length may be the corrupted byte.
      drop(1);
      r.status = UbxStatus::checksum_error;
      return r;
    }
    r.msg_class = buf_[2];
    r.msg_id = buf_[3];
    if (r.msg_class == kUbxClassNav && r.msg_id == kUbxIdNavPvt && len == kUbxNavPvtLength) {
      r.pvt = ubx_decode_nav_pvt_payload(body.subspan(4));
      r.status = UbxStatus::frame;
    } else {
      r.status = UbxStatus::ignored;
    }
    drop(8 + len);
    return r;
  }

  std::size_t buffered() const { return buf_.size(); }

 private:
  std::size_t resync() {
    std::size_t i = 0;
    while (i < buf_.size()) {
      if (buf_[i] == kUbxSync1 && (i + 1 == buf_.size() || buf_[i + 1] == kUbxSync2)) break;
      ++i;
    }
    drop(i);
    return i;
  }

  void drop(std::size_t n) { buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n)); }

  std::vector<std::uint8_t> buf_;
};

}  // namespace minicits
