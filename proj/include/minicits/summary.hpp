#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "minicits/event_log.hpp"

namespace minicits {

struct StationSummary {
  std::uint64_t cam_tx = 0;
  std::uint64_t cam_rx = 0;
  std::uint64_t warnings_raised = 0;   // raised by this station (as ego)
  std::uint64_t warnings_cleared = 0;
  std::uint64_t zone_entries = 0;      // this station entering the zone
  std::uint64_t warned_entries = 0;    // ... with a raise about it beforehand
  std::vector<double> lead_times_ms;
};

/// Run statistics derived from the event log alone, so a stored log can be
/// re-summarized offline and compared with what the run printed.
class SummaryBuilder {
 public:
  explicit SummaryBuilder(double duration_s, const std::vector<std::uint32_t>& station_ids = {})
      : duration_s_(duration_s) {
    for (auto id : station_ids) stations_[id];
  }

  void add(const EventLogRecord& r) {
    auto& st = stations_[r.station];
    if (r.kind == "cam-tx") {
      ++st.cam_tx;
    } else if (r.kind == "cam-rx") {
      ++st.cam_rx;
    } else if (r.kind == "icw") {
      const auto remote = r.detail.at("remote").get<std::uint32_t>();
      if (r.detail.at("state").get<std::string>() == "raised") {
        ++st.warnings_raised;
        auto& pending = zone_[remote].first_raise_ms;
        if (!pending) pending = r.t_ms;
      } else {
        ++st.warnings_cleared;
      }
    } else if (r.kind == "pose") {
      const bool in_zone = r.detail.at("in_zone").get<bool>();
      auto& z = zone_[r.station];
      if (in_zone && !z.inside) {
        ++st.zone_entries;
        if (z.first_raise_ms) {
          ++st.warned_entries;
          st.lead_times_ms.push_back(r.t_ms - *z.first_raise_ms);
        }
      } else if (!in_zone && z.inside) {
        z.first_raise_ms.reset();
      }
      z.inside = in_zone;
    }
  }

  const std::map<std::uint32_t, StationSummary>& stations() const { return stations_; }

  std::optional<double> min_lead_ms() const {
    std::optional<double> best;
    for (const auto& [id, s] : stations_) {
      for (double l : s.lead_times_ms) best = best ? std::min(*best, l) : l;
    }
    return best;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["duration_s"] = duration_s_;
    std::uint64_t raised = 0, cleared = 0;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [id, s] : stations_) {
      nlohmann::ordered_json e;
      e["cam_tx"] = s.cam_tx;
      e["cam_rx"] = s.cam_rx;
      e["cam_rate_hz"] = duration_s_ > 0.0 ? static_cast<double>(s.cam_tx) / duration_s_ : 0.0;
      e["warnings_raised"] = s.warnings_raised;
      e["warnings_cleared"] = s.warnings_cleared;
      e["zone_entries"] = s.zone_entries;
      e["warned_entries"] = s.warned_entries;
      if (!s.lead_times_ms.empty()) {
        e["min_lead_ms"] = *std::min_element(s.lead_times_ms.begin(), s.lead_times_ms.end());
      } else {
        e["min_lead_ms"] = nullptr;
      }
      raised += s.warnings_raised;
      cleared += s.warnings_cleared;
      per[std::to_string(id)] = e;
    }
    j["stations"] = per;
    j["warnings_raised"] = raised;
    j["warnings_cleared"] = cleared;
    if (const auto m = min_lead_ms()) j["min_lead_ms"] = *m;
    else j["min_lead_ms"] = nullptr;
    return j;
  }

 private:
  struct ZoneTrack {
    bool inside = false;
    std::optional<double> first_raise_ms;  // earliest raise about this station since it last left the zone
  };

  double duration_s_;
  std::map<std::uint32_t, StationSummary> stations_;
  std::map<std::uint32_t, ZoneTrack> zone_;
};

}  // namespace minicits
