#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minicits/byte_io.hpp"
#include "minicits/error.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

inline constexpr std::size_t kCamWireSize = 26;
inline constexpr std::int32_t kLatitudeUnavailable = 900000001;
inline constexpr std::int32_t kLongitudeUnavailable = 1800000001;
inline constexpr std::int32_t kAltitudeUnavailable = 800001;
inline constexpr std::uint16_t kHeadingUnavailable = 3601;
inline constexpr std::uint16_t kSpeedUnavailable = 16383;
inline constexpr std::uint8_t kDriveDirectionUnavailable = 2;
inline constexpr std::uint8_t kStationTypePassengerCar = 5;

/// CAM v2 basic container in ETSI units. The wire form is a fixed 26-byte
/// big-endian layout in declaration order (not ASN.1 UPER).
struct CoopAwarenessMsg {
  std::uint8_t protocol_version = 2;
  std::uint8_t message_id = 2;
  std::uint32_t station_id = 0;
  std::uint16_t gen_delta_time = 0;
  std::int32_t latitude = kLatitudeUnavailable;    // 1e-7 deg
  std::int32_t longitude = kLongitudeUnavailable;  // 1e-7 deg
  std::int32_t altitude = kAltitudeUnavailable;    // 0.01 m
  std::uint16_t heading = kHeadingUnavailable;     // 0.1 deg
  std::uint16_t speed = kSpeedUnavailable;         // 0.01 m/s
  std::uint8_t drive_direction = kDriveDirectionUnavailable;
  std::uint8_t station_type = kStationTypePassengerCar;

  friend bool operator==(const CoopAwarenessMsg&, const CoopAwarenessMsg&) = default;
};

/// Range checks shared by encode and decode. Throws Errc::range naming the field.
inline void validate(const CoopAwarenessMsg& m) {
  auto check = [](bool ok, const char* field, const char* what) {
    if (!ok) throw Error(Errc::range, field, what);
  };
  check(m.latitude >= -900000000 && m.latitude <= kLatitudeUnavailable, "latitude", "outside [-900000000, 900000001]");
  check(m.longitude >= -1800000000 && m.longitude <= kLongitudeUnavailable, "longitude",
        "outside [-1800000000, 1800000001]");
  check(m.altitude >= -100000 && m.altitude <= kAltitudeUnavailable, "altitude", "outside [-100000, 800001]");
  check(m.heading <= kHeadingUnavailable, "heading", "outside [0, 3601]");
  check(m.speed <= kSpeedUnavailable, "speed", "outside [0, 16383]");
  check(m.drive_direction <= kDriveDirectionUnavailable, "driveDirection", "outside [0, 2]");
}

inline std::vector<std::uint8_t> cam_encode(const CoopAwarenessMsg& m) {
  if (m.protocol_version != 2) throw Error(Errc::range, "protocolVersion", "must be 2");
  if (m.message_id != 2) throw Error(Errc::range, "messageId", "must be 2");
  validate(m);
  std::vector<std::uint8_t> out;
  out.reserve(kCamWireSize);
  detail::BeWriter w(out);
  w.u8(m.protocol_version);
  w.u8(m.message_id);
  w.u32(m.station_id);
  w.u16(m.gen_delta_time);
  w.i32(m.latitude);
  w.i32(m.longitude);
  w.i32(m.altitude);
  w.u16(m.heading);
  w.u16(m.speed);
  w.u8(m.drive_direction);
  w.u8(m.station_type);
  return out;
}

inline CoopAwarenessMsg cam_decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kCamWireSize) {
    throw Error(Errc::length, "", "CAM payload must be 26 bytes, got " + std::to_string(bytes.size()));
  }
  detail::BeReader r(bytes);
  CoopAwarenessMsg m;
  m.protocol_version = r.u8();
  m.message_id = r.u8();
  if (m.protocol_version != 2) throw Error(Errc::unsupported_message, "protocolVersion", "only version 2 is supported");
  if (m.message_id != 2) throw Error(Errc::unsupported_message, "messageId", "not a CAM");
  m.station_id = r.u32();
  m.gen_delta_time = r.u16();
  m.latitude = r.i32();
  m.longitude = r.i32();
  m.altitude = r.i32();
  m.heading = r.u16();
  m.speed = r.u16();
  m.drive_direction = r.u8();
  m.station_type = r.u8();
  validate(m);
  return m;
}

/// ITS timestamp (ms) folded into the 16-bit generationDeltaTime field.
inline std::uint16_t gen_delta_time(std::int64_t its_timestamp_ms) {
  if (its_timestamp_ms < 0) throw Error(Errc::range, "timestamp", "must be >= 0");
  return static_cast<std::uint16_t>(its_timestamp_ms % 65536);
}

/// Fills the basic container from a fix, applying ETSI rounding and sentinels.
inline CoopAwarenessMsg make_cam(std::uint32_t station_id, const PvtFix& fix, std::int64_t now_ms,
                                 std::uint8_t station_type = kStationTypePassengerCar) {
  CoopAwarenessMsg m;
  m.station_id = station_id;
  m.station_type = station_type;
  m.gen_delta_time = gen_delta_time(now_ms);
  if (fix.position) {
    m.latitude = static_cast<std::int32_t>(std::llround(fix.position->latitude * 1e7));
    m.longitude = static_cast<std::int32_t>(std::llround(fix.position->longitude * 1e7));
    if (m.longitude == 1800000000) m.longitude = -1800000000;
    if (fix.position->altitude) {
      const auto alt = std::llround(*fix.position->altitude * 100.0);
      m.altitude = static_cast<std::int32_t>(std::clamp<long long>(alt, -100000, 800000));
    }
  }
  if (fix.heading_deg) {
    m.heading = static_cast<std::uint16_t>(std::llround(normalize_heading(*fix.heading_deg) * 10.0) % 3600);
  }
  if (fix.speed_mps) {
    m.speed = static_cast<std::uint16_t>(std::clamp<long long>(std::llround(*fix.speed_mps * 100.0), 0, 16382));
    m.drive_direction = 0;
  }
  return m;
}

inline std::optional<GeoPoint> cam_position(const CoopAwarenessMsg& m) {
  if (m.latitude == kLatitudeUnavailable || m.longitude == kLongitudeUnavailable) return std::nullopt;
  GeoPoint p{m.latitude * 1e-7, m.longitude * 1e-7, std::nullopt};
  if (m.altitude != kAltitudeUnavailable) p.altitude = m.altitude / 100.0;
  return p;
}

inline std::optional<double> cam_speed_mps(const CoopAwarenessMsg& m) {
  if (m.speed == kSpeedUnavailable) return std::nullopt;
  return m.speed / 100.0;
}

inline std::optional<double> cam_heading_deg(const CoopAwarenessMsg& m) {
  if (m.heading == kHeadingUnavailable) return std::nullopt;
  // 3600 is a legal encoding of north.
  return normalize_heading(m.heading / 10.0);
}

// ---------------------------------------------------------------------------
// Generation triggering

struct CamTriggerConfig {
  double t_gen_cam_min_ms = 100.0;
  double t_gen_cam_max_ms = 1000.0;
  int n_gen_cam = 3;
  double heading_delta_deg = 4.0;
  double position_delta_m = 4.0;
  double speed_delta_mps = 0.5;
};

struct CamGenerationState {
  bool has_transmitted = false;
  TimeMs last_tx_time = 0.0;
  std::optional<GeoPoint> last_tx_position;
  std::optional<double> last_tx_heading;
  std::optional<double> last_tx_speed;
  double t_gen_cam_ms = 1000.0;
  int n_gen_cam_countdown = 0;
};

enum class CamTriggerCause { none, first, dynamics, timer };

constexpr const char* to_string(CamTriggerCause c) {
  switch (c) {
    case CamTriggerCause::none: return "none";
    case CamTriggerCause::first: return "first";
    case CamTriggerCause::dynamics: return "dynamics";
    case CamTriggerCause::timer: return "timer";
  }
  return "none";
}

struct CamTriggerDecision {
  bool transmit = false;
  CamTriggerCause cause = CamTriggerCause::none;
  CamGenerationState next;
};

/// Decides whether a CAM is due at `now`. Nothing is sent before
/// max(T_GenCamMin, dccMinInterval) has elapsed; after that a heading,
/// position or speed change beyond threshold (or expiry of T_GenCam) sends.
inline CamTriggerDecision cam_trigger(const CamGenerationState& state, const PvtFix& fix, TimeMs now,
                                      double dcc_min_interval_ms, const CamTriggerConfig& cfg = {}) {
  CamTriggerDecision d;
  d.next = state;
  auto remember = [&](CamGenerationState& s) {
    s.has_transmitted = true;
    s.last_tx_time = now;
    s.last_tx_position = fix.position;
    s.last_tx_heading = fix.heading_deg;
    s.last_tx_speed = fix.speed_mps;
  };

  if (!state.has_transmitted) {
    d.transmit = true;
    d.cause = CamTriggerCause::first;
    d.next.t_gen_cam_ms = cfg.t_gen_cam_max_ms;
    d.next.n_gen_cam_countdown = 0;
    remember(d.next);
    return d;
  }

  const double elapsed = now - state.last_tx_time;
  if (elapsed < std::max(cfg.t_gen_cam_min_ms, dcc_min_interval_ms)) return d;

  bool dynamics = false;
  if (fix.heading_deg && state.last_tx_heading &&
      heading_difference(*fix.heading_deg, *state.last_tx_heading) >= cfg.heading_delta_deg) {
    dynamics = true;
  }
  if (fix.position && state.last_tx_position &&
      haversine_m(*fix.position, *state.last_tx_position) >= cfg.position_delta_m) {
    dynamics = true;
  }
  if (fix.speed_mps && state.last_tx_speed && std::fabs(*fix.speed_mps - *state.last_tx_speed) >= cfg.speed_delta_mps) {
    dynamics = true;
  }

  if (dynamics) {
    d.transmit = true;
    d.cause = CamTriggerCause::dynamics;
    d.next.t_gen_cam_ms = std::clamp(elapsed, cfg.t_gen_cam_min_ms, cfg.t_gen_cam_max_ms);
    d.next.n_gen_cam_countdown = cfg.n_gen_cam;
    remember(d.next);
  } else if (elapsed >= state.t_gen_cam_ms) {
    d.transmit = true;
    d.cause = CamTriggerCause::timer;
    if (d.next.n_gen_cam_countdown > 0 && --d.next.n_gen_cam_countdown == 0) {
      d.next.t_gen_cam_ms = cfg.t_gen_cam_max_ms;
    }
    remember(d.next);
  }
  return d;
}

}  // namespace minicits
