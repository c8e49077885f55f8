#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "minicits/error.hpp"

namespace minicits {

/// Milliseconds since the scenario epoch. Fractional values occur for
/// channel deliveries (latency + jitter); ticks are always integral.
using TimeMs = double;

inline constexpr double kMetersPerDegreeLat = 111320.0;
inline constexpr double kEarthRadiusM = 6371000.0;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps any angle in degrees into [0, 360).
inline double normalize_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h = 0.0;
  return h;
}

/// Smallest absolute difference between two headings, in [0, 180].
inline double heading_difference(double a, double b) {
  double d = std::fabs(normalize_heading(a) - normalize_heading(b));
  return d > 180.0 ? 360.0 - d : d;
}

struct GeoPoint {
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
  std::optional<double> altitude;  // meters

  bool valid() const {
    return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 &&
           latitude <= 90.0 && longitude >= -180.0 && longitude < 180.0 &&
           (!altitude || std::isfinite(*altitude));
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on a sphere of radius kEarthRadiusM.
inline double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = deg2rad(b.latitude - a.latitude);
  const double dlon = deg2rad(b.longitude - a.longitude);
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(deg2rad(a.latitude)) * std::cos(deg2rad(b.latitude)) * t * t;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::fmin(1.0, h)));
}

/// Pose in the track's local Cartesian frame. Heading is clockwise from
/// north (the y axis) in degrees.
struct LocalPose {
  double x = 0.0;
  double y = 0.0;
  double heading_deg = 0.0;
  double speed_mps = 0.0;
  TimeMs timestamp_ms = 0.0;
};

/// Anchors local (0,0) on the globe. `scale` multiplies every local distance
/// and speed before the geodetic conversion; the mini-car platform uses 10.
struct ScenarioFrame {
  GeoPoint origin{44.0, 11.0, std::nullopt};
  double scale = 10.0;

  bool valid() const { return origin.valid() && std::isfinite(scale) && scale > 0.0; }
};

/// Position/velocity/time fix. Unavailable fields are empty.
struct PvtFix {
  std::optional<GeoPoint> position;
  std::optional<double> speed_mps;
  std::optional<double> heading_deg;
  std::optional<TimeMs> timestamp_ms;

  friend bool operator==(const PvtFix&, const PvtFix&) = default;
};

inline void require_valid(const ScenarioFrame& frame) {
  if (!frame.valid()) throw Error(Errc::validation, "frame", "scale must be > 0 and origin a valid GeoPoint");
}

inline PvtFix local_to_geo(const LocalPose& pose, const ScenarioFrame& frame) {
  require_valid(frame);
  if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.heading_deg) ||
      !std::isfinite(pose.speed_mps) || !std::isfinite(pose.timestamp_ms) || pose.speed_mps < 0.0) {
    throw Error(Errc::invalid_pose, "pose", "non-finite or negative-speed pose");
  }
  const double cos_lat = std::cos(deg2rad(frame.origin.latitude));
  GeoPoint p;
  p.latitude = frame.origin.latitude + pose.y * frame.scale / kMetersPerDegreeLat;
  p.longitude = frame.origin.longitude + pose.x * frame.scale / (kMetersPerDegreeLat * cos_lat);
  p.altitude = frame.origin.altitude;
  return PvtFix{p, pose.speed_mps * frame.scale, normalize_heading(pose.heading_deg), pose.timestamp_ms};
}

inline LocalPose geo_to_local(const PvtFix& fix, const ScenarioFrame& frame) {
  require_valid(frame);
  if (!fix.position) throw Error(Errc::missing_position, "position", "fix carries no position");
  const double cos_lat = std::cos(deg2rad(frame.origin.latitude));
  LocalPose pose;
  pose.y = (fix.position->latitude - frame.origin.latitude) * kMetersPerDegreeLat / frame.scale;
  pose.x = (fix.position->longitude - frame.origin.longitude) * kMetersPerDegreeLat * cos_lat / frame.scale;
  pose.speed_mps = fix.speed_mps ? *fix.speed_mps / frame.scale : 0.0;
  pose.heading_deg = fix.heading_deg ? normalize_heading(*fix.heading_deg) : 0.0;
  pose.timestamp_ms = fix.timestamp_ms.value_or(0.0);
  return pose;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// East/north offset of `p` from the frame origin in scaled ("virtual")
/// meters, i.e. the distances a receiver sees in CAM coordinates.
inline Vec2 geo_to_virtual(const GeoPoint& p, const ScenarioFrame& frame) {
  const double cos_lat = std::cos(deg2rad(frame.origin.latitude));
  return {(p.longitude - frame.origin.longitude) * kMetersPerDegreeLat * cos_lat,
          (p.latitude - frame.origin.latitude) * kMetersPerDegreeLat};
}

}  // namespace minicits
