#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "minicits/error.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

/// Polyline reference trajectory in the local frame (meters). A closed path
/// has an implicit segment from the last waypoint back to the first.
class Path {
 public:
  struct Projection {
    Vec2 point;
    double arc_s = 0.0;
    double distance = 0.0;
    std::size_t segment = 0;
    double t = 0.0;
  };

  static Path make(std::vector<Vec2> points, bool closed) {
    if (points.size() < (closed ? 3u : 2u)) {
      throw Error(Errc::geometry, "path", closed ? "closed path needs >= 3 waypoints" : "path needs >= 2 waypoints");
    }
    Path p;
    p.points_ = std::move(points);
    p.closed_ = closed;
    p.arc_.reserve(p.points_.size() + 1);
    p.arc_.push_back(0.0);
    for (std::size_t i = 0; i < p.segment_count(); ++i) {
      const double len = (p.segment_end(i) - p.segment_start(i)).norm();
      if (!(len > 0.0) || !std::isfinite(len)) {
        throw Error(Errc::geometry, "path[" + std::to_string(i) + "]", "consecutive waypoints must be distinct and finite");
      }
      p.arc_.push_back(p.arc_.back() + len);
    }
    return p;
  }

  const std::vector<Vec2>& points() const { return points_; }
  bool closed() const { return closed_; }
  std::size_t segment_count() const { return closed_ ? points_.size() : points_.size() - 1; }
  Vec2 segment_start(std::size_t i) const { return points_[i]; }
  Vec2 segment_end(std::size_t i) const { return points_[(i + 1) % points_.size()]; }
  double length() const { return arc_.back(); }
  /// Cumulative arc length at the start of segment i (size segment_count()+1).
  const std::vector<double>& arc_lengths() const { return arc_; }

  double wrap(double s) const {
    if (!closed_) return std::clamp(s, 0.0, length());
    double w = std::fmod(s, length());
    return w < 0.0 ? w + length() : w;
  }

  Vec2 point_at(double s) const {
    const auto [seg, t] = locate(s);
    return segment_start(seg) + (segment_end(seg) - segment_start(seg)) * t;
  }

  /// Unit tangent of the segment containing arc length s.
  Vec2 tangent_at(double s) const {
    const auto seg = locate(s).first;
    const Vec2 d = segment_end(seg) - segment_start(seg);
    return d * (1.0 / d.norm());
  }

  Projection project(Vec2 p) const {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < segment_count(); ++i) {
      const Vec2 a = segment_start(i);
      const Vec2 d = segment_end(i) - a;
      const double t = std::clamp((p - a).dot(d) / d.dot(d), 0.0, 1.0);
      const Vec2 q = a + d * t;
      const double dist = (p - q).norm();
      if (dist < best.distance) best = {q, arc_[i] + t * (arc_[i + 1] - arc_[i]), dist, i, t};
    }
    return best;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    s = wrap(s);
    auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    std::size_t seg = it == arc_.begin() ? 0 : static_cast<std::size_t>(it - arc_.begin()) - 1;
    seg = std::min(seg, segment_count() - 1);
    const double t = (s - arc_[seg]) / (arc_[seg + 1] - arc_[seg]);
    return {seg, std::clamp(t, 0.0, 1.0)};
  }

  std::vector<Vec2> points_;
  std::vector<double> arc_;
  bool closed_ = false;
};

inline nlohmann::json path_to_json(const Path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : path.points()) arr.push_back({p.x, p.y});
  return arr;
}

inline Path path_from_json(const nlohmann::json& j, bool closed) {
  if (!j.is_array()) throw Error(Errc::schema, "path", "expected an array of [x, y] pairs");
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw Error(Errc::schema, "path[" + std::to_string(i) + "]", "expected [x, y]");
    }
    pts.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return Path::make(std::move(pts), closed);
}

/// Closed rounded-rectangle ("stadium" when corner_radius == width/2)
/// centred on the origin, long axis along x, traversed counter-clockwise
/// starting from the middle of the bottom straight.
inline Path build_oval(double length_m, double width_m, double corner_radius_m, double spacing_m) {
  if (!(length_m > 0.0 && width_m > 0.0 && corner_radius_m > 0.0 && spacing_m > 0.0)) {
    throw Error(Errc::geometry, "oval", "all dimensions must be positive");
  }
  if (corner_radius_m > width_m / 2.0 || corner_radius_m > length_m / 2.0) {
    throw Error(Errc::geometry, "oval.corner_radius_m", "corner radius exceeds half the width or length");
  }
  const double r = corner_radius_m;
  const double lx = length_m - 2.0 * r;
  const double ly = width_m - 2.0 * r;
  const double quarter = std::numbers::pi * r / 2.0;
  const double perimeter = 2.0 * lx + 2.0 * ly + 4.0 * quarter;
  const auto n = static_cast<std::size_t>(std::llround(perimeter / spacing_m));
  if (n < 3) throw Error(Errc::geometry, "oval.spacing_m", "spacing too large for the track");

  struct Piece {
    double len;
    bool arc;
    Vec2 a;       // straight start, or arc centre
    Vec2 dir;     // straight direction
    double phi0;  // arc start angle
  };
  const double hx = lx / 2.0, hy = ly / 2.0;
  const double pi = std::numbers::pi;
  const Piece pieces[] = {
      {lx / 2.0, false, {0.0, -width_m / 2.0}, {1, 0}, 0},
      {quarter, true, {hx, -hy}, {}, -pi / 2.0},
      {ly, false, {length_m / 2.0, -hy}, {0, 1}, 0},
      {quarter, true, {hx, hy}, {}, 0.0},
      {lx, false, {hx, width_m / 2.0}, {-1, 0}, 0},
      {quarter, true, {-hx, hy}, {}, pi / 2.0},
      {ly, false, {-length_m / 2.0, hy}, {0, -1}, 0},
      {quarter, true, {-hx, -hy}, {}, pi},
      {lx / 2.0, false, {-hx, -width_m / 2.0}, {1, 0}, 0},
  };

  std::vector<Vec2> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = perimeter * static_cast<double>(i) / static_cast<double>(n);
    for (const auto& p : pieces) {
      if (s <= p.len || &p == &pieces[8]) {
        if (p.arc) {
          const double phi = p.phi0 + s / r;
          pts.push_back({p.a.x + r * std::cos(phi), p.a.y + r * std::sin(phi)});
        } else {
          pts.push_back(p.a + p.dir * s);
        }
        break;
      }
      s -= p.len;
    }
  }
  return Path::make(std::move(pts), true);
}

// ---------------------------------------------------------------------------
// Kinematic bicycle + pure pursuit

struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // rad, counter-clockwise from +x
  double v = 0.0;
  double wheelbase = 0.33;
};

struct PurePursuitConfig {
  double lookahead_m = 0.8;
  double target_speed_mps = 1.0;
  double max_steer_rad = 0.41;
  double speed_time_constant_s = 0.3;

  void validate() const {
    if (!(lookahead_m > 0.0)) throw Error(Errc::validation, "pure_pursuit.lookahead_m", "must be > 0");
    if (!(max_steer_rad > 0.0)) throw Error(Errc::validation, "pure_pursuit.max_steer_rad", "must be > 0");
    if (!(target_speed_mps >= 0.0)) throw Error(Errc::validation, "target_speed_mps", "must be >= 0");
    if (!(speed_time_constant_s > 0.0)) throw Error(Errc::validation, "pure_pursuit.speed_time_constant_s", "must be > 0");
  }
};

struct LookaheadResult {
  Vec2 point;
  double arc_s = 0.0;
  bool fallback = false;  // car farther than Ld from the path: nearest point returned
};

/// First point where the path leaves the circle of radius Ld around
/// `position`, searching forward from the nearest path point.
inline LookaheadResult lookahead_point(const Path& path, Vec2 position, double lookahead_m) {
  const auto proj = path.project(position);
  if (proj.distance > lookahead_m) return {proj.point, proj.arc_s, true};

  const std::size_t nseg = path.segment_count();
  double t_start = proj.t;
  std::size_t seg = proj.segment;
  for (std::size_t k = 0; k <= nseg; ++k) {
    const Vec2 a = path.segment_start(seg);
    const Vec2 d = path.segment_end(seg) - a;
    const Vec2 f = a - position;
    const double qa = d.dot(d);
    const double qb = 2.0 * f.dot(d);
    const double qc = f.dot(f) - lookahead_m * lookahead_m;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
      if (t >= t_start && t <= 1.0) {
        const auto& arc = path.arc_lengths();
        return {a + d * t, arc[seg] + t * (arc[seg + 1] - arc[seg]), false};
      }
    }
    t_start = 0.0;
    if (++seg == nseg) {
      if (!path.closed()) break;
      seg = 0;
    }
  }
  // Open path ending inside the circle: steer at its end.
  const Vec2 end = path.points().back();
  return {end, path.length(), false};
}

struct SteerResult {
  double steer_rad = 0.0;
  bool degenerate = false;  // target coincided with the rear axle
};

inline SteerResult pure_pursuit_steer(const BicycleState& s, Vec2 target, double max_steer_rad) {
  const double dx = target.x - s.x;
  const double dy = target.y - s.y;
  const double d2 = dx * dx + dy * dy;
  if (!(d2 > 1e-18)) return {0.0, true};
  const double lateral = -std::sin(s.theta) * dx + std::cos(s.theta) * dy;
  const double curvature = 2.0 * lateral / d2;
  return {std::clamp(std::atan(s.wheelbase * curvature), -max_steer_rad, max_steer_rad), false};
}

/// Forward-Euler kinematic bicycle step about the rear axle; speed follows a
/// first-order lag toward target_speed. dt in seconds, (0, 0.05].
inline BicycleState bicycle_step(const BicycleState& s, double steer_rad, double dt_s, double target_speed_mps,
                                 double time_constant_s = 0.3) {
  if (!(dt_s > 0.0 && dt_s <= 0.05)) throw Error(Errc::step, "dt", "step must be in (0, 50] ms");
  BicycleState n = s;
  n.x += s.v * std::cos(s.theta) * dt_s;
  n.y += s.v * std::sin(s.theta) * dt_s;
  n.theta += s.v / s.wheelbase * std::tan(steer_rad) * dt_s;
  n.theta = std::remainder(n.theta, 2.0 * std::numbers::pi);
  n.v = target_speed_mps + (s.v - target_speed_mps) * std::exp(-dt_s / time_constant_s);
  return n;
}

inline double theta_to_heading_deg(double theta) { return normalize_heading(90.0 - rad2deg(theta)); }
inline double heading_deg_to_theta(double heading) { return deg2rad(90.0 - heading); }

/// A mini-car driving a closed path with pure pursuit.
class PurePursuitVehicle {
 public:
  PurePursuitVehicle(Path path, PurePursuitConfig cfg, double start_arc_m, double wheelbase = 0.33)
      : path_(std::move(path)), cfg_(cfg) {
    cfg_.validate();
    if (!(wheelbase > 0.0)) throw Error(Errc::validation, "wheelbase_m", "must be > 0");
    const Vec2 p = path_.point_at(start_arc_m);
    const Vec2 t = path_.tangent_at(start_arc_m);
    state_ = {p.x, p.y, std::atan2(t.y, t.x), cfg_.target_speed_mps, wheelbase};
  }

  void step(double dt_s) {
    const auto target = lookahead_point(path_, {state_.x, state_.y}, cfg_.lookahead_m);
    last_steer_ = pure_pursuit_steer(state_, target.point, cfg_.max_steer_rad).steer_rad;
    state_ = bicycle_step(state_, last_steer_, dt_s, cfg_.target_speed_mps, cfg_.speed_time_constant_s);
  }

  LocalPose pose(TimeMs now) const {
    return {state_.x, state_.y, theta_to_heading_deg(state_.theta), std::max(0.0, state_.v), now};
  }

  double cross_track_error() const { return path_.project({state_.x, state_.y}).distance; }
  const BicycleState& state() const { return state_; }
  const Path& path() const { return path_; }
  const PurePursuitConfig& config() const { return cfg_; }
  double last_steer() const { return last_steer_; }

 private:
  Path path_;
  PurePursuitConfig cfg_;
  BicycleState state_;
  double last_steer_ = 0.0;
};

}  // namespace minicits
