#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "minicits/cam.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

inline constexpr double kDefaultLdmMaxAgeMs = 1500.0;

struct LdmEntry {
  std::uint32_t station_id = 0;
  GeoPoint position;
  std::optional<double> speed_mps;
  std::optional<double> heading_deg;
  std::uint16_t last_gen_delta_time = 0;
  TimeMs insert_time_ms = 0.0;
};

struct LdmQueryResult {
  LdmEntry entry;
  double distance_m = 0.0;
  double age_ms = 0.0;
};

enum class LdmUpsert { inserted, updated, duplicate, stale, no_position };

constexpr const char* to_string(LdmUpsert u) {
  switch (u) {
    case LdmUpsert::inserted: return "inserted";
    case LdmUpsert::updated: return "updated";
    case LdmUpsert::duplicate: return "duplicate";
    case LdmUpsert::stale: return "stale";
    case LdmUpsert::no_position: return "no_position";
  }
  return "";
}

/// Latest known state per remote station, keyed by station id.
class LocalDynamicMap {
 public:
  LdmUpsert upsert(const CoopAwarenessMsg& msg, TimeMs now) {
    const auto pos = cam_position(msg);
    if (!pos) return LdmUpsert::no_position;
    auto it = entries_.find(msg.station_id);
    if (it != entries_.end()) {
      if (it->second.last_gen_delta_time == msg.gen_delta_time) return LdmUpsert::duplicate;
      if (now < it->second.insert_time_ms) return LdmUpsert::stale;
    }
    LdmEntry e{msg.station_id, *pos, cam_speed_mps(msg), cam_heading_deg(msg), msg.gen_delta_time, now};
    if (it == entries_.end()) {
      entries_.emplace(msg.station_id, e);
      return LdmUpsert::inserted;
    }
    it->second = e;
    return LdmUpsert::updated;
  }

  /// Fresh entries (age <= max_age_ms) sorted by (distance, station id).
  std::vector<LdmQueryResult> query(const GeoPoint& center, TimeMs now,
                                    double max_age_ms = kDefaultLdmMaxAgeMs) const {
    std::vector<LdmQueryResult> out;
    for (const auto& [id, e] : entries_) {
      const double age = std::max(0.0, now - e.insert_time_ms);
      if (age > max_age_ms) continue;
      out.push_back({e, haversine_m(center, e.position), age});
    }
    std::sort(out.begin(), out.end(), [](const LdmQueryResult& a, const LdmQueryResult& b) {
      if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
      return a.entry.station_id < b.entry.station_id;
    });
    return out;
  }

  /// Drops entries older than max_age_ms; returns how many were removed.
  std::size_t gc(TimeMs now, double max_age_ms = kDefaultLdmMaxAgeMs) {
    return std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.insert_time_ms > max_age_ms; });
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::uint32_t, LdmEntry>& entries() const { return entries_; }

 private:
  std::map<std::uint32_t, LdmEntry> entries_;
};

}  // namespace minicits
