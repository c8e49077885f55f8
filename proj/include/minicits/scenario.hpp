#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "minicits/cam.hpp"
#include "minicits/dcc.hpp"
#include "minicits/error.hpp"
#include "minicits/icw.hpp"
#include "minicits/ldm.hpp"
#include "minicits/netsim.hpp"
#include "minicits/positioning.hpp"
#include "minicits/providers.hpp"
#include "minicits/vehicle.hpp"

namespace minicits {

enum class StationRole { mobile, stationary };
enum class PositioningSource { nmea, ubx, trace };

struct StationConfig {
  std::uint32_t id = 0;
  std::string name;
  StationRole role = StationRole::stationary;
  std::optional<Path> path;
  double start_offset_m = 0.0;
  LocalPose pose;  // stationary stations
  double target_speed_mps = 1.0;
  double wheelbase_m = 0.33;
  PurePursuitConfig pure_pursuit;
  bool cam_enabled = true;
  bool dcc_enabled = false;
  bool icw_enabled = false;
  PositioningSource positioning = PositioningSource::nmea;
  std::vector<TraceRecord> trace;  // when positioning == trace
  double pose_noise_sigma_m = 0.0;
};

inline const std::set<std::string>& all_log_kinds() {
  static const std::set<std::string> kinds{"cam-tx", "cam-rx", "ldm", "dcc", "icw", "pose", "api"};
  return kinds;
}

struct ScenarioConfig {
  std::string name;
  double duration_s = 60.0;
  double step_ms = 10.0;
  ScenarioFrame frame;
  ChannelConfig channel;
  CamTriggerConfig cam;
  DccTable dcc_table = DccTable::defaults();
  double dcc_window_ms = 100.0;
  double dcc_smoothing = 0.0;
  double ldm_max_age_ms = kDefaultLdmMaxAgeMs;
  IntersectionZone zone;
  IcwConfig icw;
  double icw_period_ms = 100.0;
  std::vector<StationConfig> stations;
  std::set<std::string> log_kinds = all_log_kinds();

  const StationConfig* find_station(std::uint32_t id) const {
    for (const auto& s : stations) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }
};

namespace detail {

// Strict JSON object reader: every key must be consumed, otherwise finish()
// reports it as unknown. Field names in errors are full dotted paths.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(Errc::schema, path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const nlohmann::json& raw(const std::string& key) {
    if (!j_.contains(key)) throw Error(Errc::schema, at(key), "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw Error(Errc::schema, at(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double dflt) { return has(key) ? number(key) : dflt; }

  std::uint64_t unsigned_int(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw Error(Errc::schema, at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw Error(Errc::schema, at(key), "expected a boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw Error(Errc::schema, at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, std::string dflt) { return has(key) ? string(key) : dflt; }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), at(key)); }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw Error(Errc::schema, at(key), "unknown field");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw Error(Errc::validation, field, what);
}

inline Path read_path(ObjectReader& r) {
  if (r.has("oval")) {
    auto o = r.object("oval");
    const double length = o.number("length_m");
    const double width = o.number("width_m");
    const double radius = o.number("corner_radius_m", width / 2.0);
    const double spacing = o.number("spacing_m", 0.05);
    o.finish();
    return build_oval(length, width, radius, spacing);
  }
  const bool closed = r.boolean("closed", true);
  return path_from_json(r.raw("points"), closed);
}

inline PositioningSource parse_positioning(const std::string& s, const std::string& field) {
  if (s == "nmea") return PositioningSource::nmea;
  if (s == "ubx") return PositioningSource::ubx;
  if (s == "trace") return PositioningSource::trace;
  throw Error(Errc::validation, field, "must be one of nmea, ubx, trace");
}

}  // namespace detail

inline DccTable dcc_table_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw Error(Errc::schema, path, "expected an array of rows");
  DccTable t;
  for (std::size_t i = 0; i < j.size(); ++i) {
    detail::ObjectReader row(j[i], path + "[" + std::to_string(i) + "]");
    DccRow r;
    r.name = row.string("name", "row" + std::to_string(i));
    r.cbr_threshold = row.number("cbr");
    r.min_interval_ms = row.number("interval_ms");
    row.finish();
    t.rows.push_back(r);
  }
  t.validate();
  return t;
}

inline nlohmann::ordered_json dcc_table_to_json(const DccTable& t) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) arr.push_back({{"name", r.name}, {"cbr", r.cbr_threshold}, {"interval_ms", r.min_interval_ms}});
  return arr;
}

/// Builds a validated ScenarioConfig from parsed JSON. Relative trace paths
/// resolve against `base_dir`.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::require;
  ScenarioConfig c;
  detail::ObjectReader root(j, "");
  c.name = root.string("name", "");
  c.duration_s = root.number("duration_s");
  require(c.duration_s >= 0.0 && std::isfinite(c.duration_s), "duration_s", "must be >= 0");
  c.step_ms = root.number("step_ms", 10.0);
  require(c.step_ms > 0.0 && c.step_ms <= 50.0 && c.step_ms == std::floor(c.step_ms), "step_ms",
          "must be an integer in [1, 50]");
  c.channel.rng_seed = root.has("seed") ? root.unsigned_int("seed") : 1;

  {
    auto f = root.object("frame");
    auto o = f.object("origin");
    c.frame.origin.latitude = o.number("lat");
    c.frame.origin.longitude = o.number("lon");
    if (o.has("alt")) c.frame.origin.altitude = o.number("alt");
    o.finish();
    require(c.frame.origin.valid(), "frame.origin", "latitude must be in [-90, 90], longitude in [-180, 180)");
    c.frame.scale = f.number("scale", 10.0);
    require(c.frame.scale > 0.0 && std::isfinite(c.frame.scale), "frame.scale", "must be > 0");
    f.finish();
  }

  if (root.has("channel")) {
    auto ch = root.object("channel");
    c.channel.bitrate_bps = ch.number("bitrate_bps", c.channel.bitrate_bps);
    c.channel.loss_probability = ch.number("loss_probability", c.channel.loss_probability);
    c.channel.latency_ms = ch.number("latency_ms", c.channel.latency_ms);
    c.channel.jitter_ms = ch.number("jitter_ms", c.channel.jitter_ms);
    ch.finish();
  }
  c.channel.validate();

  if (root.has("cam")) {
    auto cam = root.object("cam");
    c.cam.t_gen_cam_min_ms = cam.number("t_gen_cam_min_ms", c.cam.t_gen_cam_min_ms);
    c.cam.t_gen_cam_max_ms = cam.number("t_gen_cam_max_ms", c.cam.t_gen_cam_max_ms);
    c.cam.n_gen_cam = static_cast<int>(cam.number("n_gen_cam", c.cam.n_gen_cam));
    c.cam.heading_delta_deg = cam.number("heading_delta_deg", c.cam.heading_delta_deg);
    c.cam.position_delta_m = cam.number("position_delta_m", c.cam.position_delta_m);
    c.cam.speed_delta_mps = cam.number("speed_delta_mps", c.cam.speed_delta_mps);
    cam.finish();
    require(c.cam.t_gen_cam_min_ms > 0.0 && c.cam.t_gen_cam_min_ms <= c.cam.t_gen_cam_max_ms, "cam.t_gen_cam_min_ms",
            "must be > 0 and <= t_gen_cam_max_ms");
    require(c.cam.n_gen_cam >= 0, "cam.n_gen_cam", "must be >= 0");
  }

  if (root.has("dcc")) {
    auto d = root.object("dcc");
    c.dcc_window_ms = d.number("window_ms", c.dcc_window_ms);
    c.dcc_smoothing = d.number("smoothing", c.dcc_smoothing);
    if (d.has("table")) c.dcc_table = dcc_table_from_json(d.raw("table"), "dcc.table");
    d.finish();
    require(c.dcc_window_ms > 0.0 && std::fmod(c.dcc_window_ms, c.step_ms) == 0.0, "dcc.window_ms",
            "must be a positive multiple of step_ms");
    require(c.dcc_smoothing >= 0.0 && c.dcc_smoothing < 1.0, "dcc.smoothing", "must be in [0, 1)");
  }

  if (root.has("ldm")) {
    auto l = root.object("ldm");
    c.ldm_max_age_ms = l.number("max_age_ms", c.ldm_max_age_ms);
    l.finish();
    require(c.ldm_max_age_ms > 0.0, "ldm.max_age_ms", "must be > 0");
  }

  if (root.has("zone")) {
    auto z = root.object("zone");
    auto center = z.object("center");
    c.zone.center = {center.number("x"), center.number("y")};
    center.finish();
    c.zone.radius_m = z.number("radius_m", c.zone.radius_m);
    z.finish();
  }
  c.zone.validate();

  if (root.has("icw")) {
    auto i = root.object("icw");
    c.icw.tti_threshold_s = i.number("tti_threshold_s", c.icw.tti_threshold_s);
    c.icw.ego_proximity_m = i.number("ego_proximity_m", c.icw.ego_proximity_m);
    c.icw.hold_ms = i.number("hold_ms", c.icw.hold_ms);
    c.icw_period_ms = i.number("period_ms", c.icw_period_ms);
    i.finish();
    require(c.icw_period_ms > 0.0 && std::fmod(c.icw_period_ms, c.step_ms) == 0.0, "icw.period_ms",
            "must be a positive multiple of step_ms");
  }
  c.icw.validate();

  if (root.has("log")) {
    auto l = root.object("log");
    const auto& kinds = l.raw("kinds");
    if (!kinds.is_array()) throw Error(Errc::schema, "log.kinds", "expected an array of strings");
    c.log_kinds.clear();
    for (const auto& k : kinds) {
      if (!k.is_string() || !all_log_kinds().count(k.get<std::string>())) {
        throw Error(Errc::validation, "log.kinds", "unknown log kind " + k.dump());
      }
      c.log_kinds.insert(k.get<std::string>());
    }
    l.finish();
  }

  const auto& stations = root.raw("stations");
  if (!stations.is_array()) throw Error(Errc::schema, "stations", "expected an array");
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const std::string at = "stations[" + std::to_string(i) + "]";
    detail::ObjectReader s(stations[i], at);
    StationConfig st;
    const auto id = s.unsigned_int("id");
    require(id <= 0xFFFFFFFFULL, at + ".id", "must fit in 32 bits");
    st.id = static_cast<std::uint32_t>(id);
    require(ids.insert(st.id).second, at + ".id", "duplicate station id " + std::to_string(st.id));
    st.name = s.string("name", std::to_string(st.id));
    const auto role = s.string("role");
    require(role == "mobile" || role == "stationary", at + ".role", "must be 'mobile' or 'stationary'");
    st.role = role == "mobile" ? StationRole::mobile : StationRole::stationary;
    st.positioning = detail::parse_positioning(s.string("positioning", "nmea"), at + ".positioning");
    st.cam_enabled = s.boolean("cam_enabled", true);
    st.dcc_enabled = s.boolean("dcc_enabled", false);
    st.icw_enabled = s.boolean("icw_enabled", false);
    st.pose_noise_sigma_m = s.number("pose_noise_sigma_m", 0.0);
    require(st.pose_noise_sigma_m >= 0.0, at + ".pose_noise_sigma_m", "must be >= 0");

    if (st.positioning == PositioningSource::trace) {
      const std::filesystem::path file = s.string("trace");
      const auto full = file.is_absolute() ? file : base_dir / file;
      std::ifstream in(full);
      if (!in) throw Error(Errc::io, at + ".trace", "cannot open " + full.string());
      try {
        st.trace = load_trace(in);
      } catch (const Error& e) {
        throw Error(e.code(), at + ".trace " + e.field(), e.what());
      }
    } else if (st.role == StationRole::mobile) {
      require(s.has("path"), at + ".path", "mobile stations need a path");
      auto p = s.object("path");
      try {
        st.path = detail::read_path(p);
      } catch (const Error& e) {
        throw Error(e.code(), at + ".path." + e.field(), e.what());
      }
      p.finish();
      st.start_offset_m = s.number("start_offset_m", 0.0);
      st.target_speed_mps = s.number("target_speed_mps", 1.0);
      require(st.target_speed_mps >= 0.0, at + ".target_speed_mps", "must be >= 0");
      st.wheelbase_m = s.number("wheelbase_m", 0.33);
      require(st.wheelbase_m > 0.0, at + ".wheelbase_m", "must be > 0");
      if (s.has("pure_pursuit")) {
        auto pp = s.object("pure_pursuit");
        st.pure_pursuit.lookahead_m = pp.number("lookahead_m", st.pure_pursuit.lookahead_m);
        st.pure_pursuit.max_steer_rad = pp.number("max_steer_rad", st.pure_pursuit.max_steer_rad);
        st.pure_pursuit.speed_time_constant_s = pp.number("speed_time_constant_s", st.pure_pursuit.speed_time_constant_s);
        pp.finish();
      }
      st.pure_pursuit.target_speed_mps = st.target_speed_mps;
      try {
        st.pure_pursuit.validate();
      } catch (const Error& e) {
        throw Error(e.code(), at + "." + e.field(), e.what());
      }
    } else {
      auto p = s.object("pose");
      st.pose.x = p.number("x");
      st.pose.y = p.number("y");
      st.pose.heading_deg = normalize_heading(p.number("heading_deg", 0.0));
      p.finish();
      st.target_speed_mps = 0.0;
    }
    s.finish();
    c.stations.push_back(std::move(st));
  }
  root.finish();
  return c;
}

/// Parses scenario text. JSON syntax errors are reported as "line L, column C".
inline ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(Errc::schema, "line " + std::to_string(line) + ", column " + std::to_string(col), e.what());
  }
  return scenario_from_json(j, base_dir);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io, file.string(), "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), file.parent_path());
}

}  // namespace minicits
