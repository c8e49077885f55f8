#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "minicits/error.hpp"
#include "minicits/nmea.hpp"
#include "minicits/positioning.hpp"
#include "minicits/ubx.hpp"

namespace minicits {

/// Source of PVT fixes for one station.
class PositionProvider {
 public:
  virtual ~PositionProvider() = default;

  /// Fixes that became available at or before `now`, oldest first.
  virtual std::vector<PvtFix> poll(TimeMs now) = 0;

  /// True once no further fix will ever be produced.
  virtual bool finished() const { return false; }
};

enum class GnssEncoding { nmea, ubx };

/// Emulated GNSS receiver. Ground-truth local poses go in, get rendered to
/// NMEA sentences (or UBX-NAV-PVT frames) on a byte stream, and come back out
/// through the regular parsers, so every fix carries the wire quantization.
class VirtualGnssDevice : public PositionProvider {
 public:
  VirtualGnssDevice(ScenarioFrame frame, GnssEncoding encoding) : frame_(frame), encoding_(encoding) {
    require_valid(frame_);
  }

  void observe(const LocalPose& pose) {
    const PvtFix fix = local_to_geo(pose, frame_);
    if (encoding_ == GnssEncoding::nmea) {
      for (const auto& s : nmea_generate(fix)) text_ += s;
    } else {
      UbxNavPvt m = from_pvt_fix(fix);
      // iTOW wraps at 2^32 ms; the sim clock stays far below that.
      m.itow_ms = static_cast<std::uint32_t>(std::llround(pose.timestamp_ms));
      ubx_.feed(ubx_encode_nav_pvt(m));
    }
  }

  std::vector<PvtFix> poll(TimeMs) override {
    std::vector<PvtFix> out;
    if (encoding_ == GnssEncoding::nmea) {
      std::size_t start = 0;
      for (auto nl = text_.find('\n'); nl != std::string::npos; nl = text_.find('\n', start)) {
        const auto r = nmea_parse(std::string_view(text_).substr(start, nl + 1 - start));
        start = nl + 1;
        if (r.status != NmeaStatus::ok) continue;
        merge_fix(pending_, r.fix);
        if (r.type == "GGA") {
          out.push_back(pending_);
          pending_ = {};
        }
      }
      text_.erase(0, start);
    } else {
      for (auto r = ubx_.next(); r.status != UbxStatus::need_more; r = ubx_.next()) {
        if (r.status == UbxStatus::frame) out.push_back(to_pvt_fix(r.pvt));
      }
    }
    return out;
  }

 private:
  ScenarioFrame frame_;
  GnssEncoding encoding_;
  std::string text_;
  PvtFix pending_;
  UbxParser ubx_;
};

struct TraceRecord {
  std::int64_t t_ms = 0;
  double lat = 0.0;
  double lon = 0.0;
  double speed_mps = 0.0;
  double heading_deg = 0.0;

  PvtFix to_fix() const {
    return PvtFix{GeoPoint{lat, lon, std::nullopt}, speed_mps, heading_deg, static_cast<TimeMs>(t_ms)};
  }
};

/// Reads a JSON-lines trace: one {t_ms, lat, lon, speed_mps, heading_deg}
/// object per line. Blank lines are skipped.
inline std::vector<TraceRecord> load_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::schema, where, e.what());
    }
    if (!j.is_object()) throw Error(Errc::schema, where, "record must be a JSON object");
    for (const char* key : {"t_ms", "lat", "lon", "speed_mps", "heading_deg"}) {
      if (!j.contains(key)) throw Error(Errc::schema, where, std::string("missing field '") + key + "'");
      if (!j[key].is_number()) throw Error(Errc::schema, where, std::string("field '") + key + "' must be a number");
    }
    if (!j["t_ms"].is_number_integer()) throw Error(Errc::schema, where, "field 't_ms' must be an integer");
    TraceRecord r{j["t_ms"].get<std::int64_t>(), j["lat"].get<double>(), j["lon"].get<double>(),
                  j["speed_mps"].get<double>(), j["heading_deg"].get<double>()};
    if (!GeoPoint{r.lat, r.lon, std::nullopt}.valid() || r.speed_mps < 0.0 || !std::isfinite(r.heading_deg)) {
      throw Error(Errc::validation, where, "position, speed or heading out of range");
    }
    if (!out.empty() && r.t_ms < out.back().t_ms) {
      throw Error(Errc::validation, where, "t_ms decreases (" + std::to_string(r.t_ms) + " < " +
                                               std::to_string(out.back().t_ms) + ")");
    }
    out.push_back(r);
  }
  return out;
}

inline void write_trace_record(std::ostream& out, const PvtFix& fix) {
  if (!fix.position || !fix.timestamp_ms) return;
  nlohmann::ordered_json j;
  j["t_ms"] = static_cast<std::int64_t>(std::llround(*fix.timestamp_ms));
  j["lat"] = fix.position->latitude;
  j["lon"] = fix.position->longitude;
  j["speed_mps"] = fix.speed_mps.value_or(0.0);
  j["heading_deg"] = fix.heading_deg.value_or(0.0);
  out << j.dump() << '\n';
}

/// Replays a recorded trace against the simulation clock.
class TraceProvider : public PositionProvider {
 public:
  explicit TraceProvider(std::vector<TraceRecord> records) : records_(records.begin(), records.end()) {}

  std::vector<PvtFix> poll(TimeMs now) override {
    std::vector<PvtFix> out;
    while (!records_.empty() && static_cast<TimeMs>(records_.front().t_ms) <= now) {
      out.push_back(records_.front().to_fix());
      records_.pop_front();
    }
    return out;
  }

  bool finished() const override { return records_.empty(); }

 private:
  std::deque<TraceRecord> records_;
};

}  // namespace minicits
