#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "minicits/error.hpp"
#include "minicits/ldm.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

/// Intersection area. The centre lives in the local track frame (physical
/// meters, like every other local coordinate); the radius is in scaled
/// ("virtual") meters because it is compared against CAM-derived geometry.
struct IntersectionZone {
  Vec2 center;
  double radius_m = 7.5;

  void validate() const {
    if (!(radius_m > 0.0)) throw Error(Errc::validation, "zone.radius_m", "must be > 0");
  }
};

struct IcwConfig {
  double tti_threshold_s = 5.0;
  double ego_proximity_m = 20.0;  // virtual meters
  double hold_ms = 1000.0;

  void validate() const {
    if (!(tti_threshold_s > 0.0)) throw Error(Errc::validation, "icw.tti_threshold_s", "must be > 0");
    if (!(ego_proximity_m > 0.0)) throw Error(Errc::validation, "icw.ego_proximity_m", "must be > 0");
    if (!(hold_ms > 0.0)) throw Error(Errc::validation, "icw.hold_ms", "must be > 0");
  }
};

inline constexpr double kIcwMinSpeedMps = 0.1;

enum class TtiKind { approaching, receding, insufficient_data };

struct TtiResult {
  TtiKind kind = TtiKind::insufficient_data;
  double tti_s = 0.0;
  double distance_m = 0.0;  // remote to zone centre, virtual meters
};

/// Straight-ray projection of the remote's CAM kinematics onto the zone.
inline TtiResult time_to_intersection(const LdmEntry& entry, const IntersectionZone& zone, const ScenarioFrame& frame) {
  TtiResult r;
  const Vec2 pos = geo_to_virtual(entry.position, frame);
  const Vec2 center = zone.center * frame.scale;
  const Vec2 to_center = center - pos;
  r.distance_m = to_center.norm();
  if (!entry.speed_mps || !entry.heading_deg) return r;
  r.kind = TtiKind::receding;
  if (*entry.speed_mps < kIcwMinSpeedMps) return r;
  const double h = deg2rad(*entry.heading_deg);
  const Vec2 dir{std::sin(h), std::cos(h)};
  const double along = to_center.dot(dir);
  if (along < 0.0) return r;
  const double miss = (to_center - dir * along).norm();
  if (miss > zone.radius_m) return r;
  r.kind = TtiKind::approaching;
  r.tti_s = along / *entry.speed_mps;
  return r;
}

enum class WarningState { raised, cleared };

struct WarningEvent {
  TimeMs time_ms = 0.0;
  std::uint32_t remote_station_id = 0;
  double tti_s = 0.0;
  double remote_distance_m = 0.0;
  WarningState state = WarningState::raised;
};

/// Per-ego warning latch. Emits only edges: a raise when the condition first
/// holds, a clear once it has been false for hold_ms.
class IcwEvaluator {
 public:
  std::vector<WarningEvent> evaluate(const LocalPose& ego, const std::vector<LdmQueryResult>& results,
                                     const IntersectionZone& zone, const ScenarioFrame& frame, const IcwConfig& cfg,
                                     TimeMs now) {
    std::vector<WarningEvent> events;
    const double ego_dist = (Vec2{ego.x, ego.y} - zone.center).norm() * frame.scale;
    const bool ego_near = ego_dist <= cfg.ego_proximity_m;

    std::set<std::uint32_t> seen;
    for (const auto& res : results) {
      const auto id = res.entry.station_id;
      seen.insert(id);
      const auto tti = time_to_intersection(res.entry, zone, frame);
      auto& st = remotes_[id];
      st.last_tti_s = tti.kind == TtiKind::approaching ? tti.tti_s : st.last_tti_s;
      st.last_distance_m = tti.distance_m;
      const bool cond = ego_near && tti.kind == TtiKind::approaching && tti.tti_s <= cfg.tti_threshold_s;
      if (cond) {
        st.last_true_ms = now;
        if (!st.active) {
          st.active = true;
          events.push_back({now, id, tti.tti_s, tti.distance_m, WarningState::raised});
        }
      } else {
        maybe_clear(id, st, cfg, now, events);
      }
    }
    for (auto& [id, st] : remotes_) {
      if (!seen.count(id)) maybe_clear(id, st, cfg, now, events);
    }
    return events;
  }

  bool active(std::uint32_t remote) const {
    const auto it = remotes_.find(remote);
    return it != remotes_.end() && it->second.active;
  }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& [id, st] : remotes_) n += st.active ? 1 : 0;
    return n;
  }

 private:
  struct RemoteState {
    bool active = false;
    TimeMs last_true_ms = 0.0;
    double last_tti_s = 0.0;
    double last_distance_m = 0.0;
  };

  static void maybe_clear(std::uint32_t id, RemoteState& st, const IcwConfig& cfg, TimeMs now,
                          std::vector<WarningEvent>& events) {
    if (st.active && now - st.last_true_ms >= cfg.hold_ms) {
      st.active = false;
      events.push_back({now, id, st.last_tti_s, st.last_distance_m, WarningState::cleared});
    }
  }

  std::map<std::uint32_t, RemoteState> remotes_;
};

}  // namespace minicits
