#pragma once

#include <cstdint>
#include <future>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"
#include "minicits/scenario.hpp"
#include "minicits/simulation.hpp"

namespace minicits {

inline constexpr std::uint16_t kDefaultApiPort = 48110;

namespace detail {

struct BadArgs {
  std::string detail;
};

inline nlohmann::ordered_json api_ok(nlohmann::ordered_json data) {
  nlohmann::ordered_json r;
  r["ok"] = true;
  r["data"] = std::move(data);
  return r;
}

inline nlohmann::ordered_json api_error(const std::string& error, const std::string& detail = {}) {
  nlohmann::ordered_json r;
  r["ok"] = false;
  r["error"] = error;
  if (!detail.empty()) r["detail"] = detail;
  return r;
}

inline void only_keys(const nlohmann::json& args, std::initializer_list<const char*> allowed) {
  for (const auto& [k, _] : args.items()) {
    bool found = false;
    for (const char* a : allowed) found = found || k == a;
    if (!found) throw BadArgs{"unknown argument '" + k + "'"};
  }
}

inline nlohmann::ordered_json ldm_query_response(Simulation& sim, Station& st, const nlohmann::json& args) {
  only_keys(args, {"center", "max_age_ms"});
  if (!args.contains("center") || !args["center"].is_object()) throw BadArgs{"'center' object is required"};
  const auto& c = args["center"];
  for (const auto& [k, _] : c.items()) {
    if (k != "lat" && k != "lon") throw BadArgs{"unknown argument 'center." + k + "'"};
  }
  if (!c.contains("lat") || !c["lat"].is_number() || !c.contains("lon") || !c["lon"].is_number()) {
    throw BadArgs{"'center' needs numeric 'lat' and 'lon'"};
  }
  const GeoPoint center{c["lat"].get<double>(), c["lon"].get<double>(), std::nullopt};
  if (!center.valid()) throw BadArgs{"'center' is not a valid WGS-84 position"};
  double max_age = sim.config().ldm_max_age_ms;
  if (args.contains("max_age_ms")) {
    if (!args["max_age_ms"].is_number() || args["max_age_ms"].get<double>() < 0.0) {
      throw BadArgs{"'max_age_ms' must be a non-negative number"};
    }
    max_age = args["max_age_ms"].get<double>();
  }
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& r : st.ldm.query(center, sim.now(), max_age)) {
    nlohmann::ordered_json e;
    e["station_id"] = r.entry.station_id;
    e["position"] = {{"lat", r.entry.position.latitude}, {"lon", r.entry.position.longitude}};
    e["speed_mps"] = r.entry.speed_mps ? nlohmann::ordered_json(*r.entry.speed_mps) : nlohmann::ordered_json();
    e["heading_deg"] = r.entry.heading_deg ? nlohmann::ordered_json(*r.entry.heading_deg) : nlohmann::ordered_json();
    e["distance_m"] = r.distance_m;
    e["age_ms"] = r.age_ms;
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json data;
  data["entries"] = std::move(entries);
  return data;
}

inline nlohmann::ordered_json status_response(Simulation& sim, Station& st) {
  nlohmann::ordered_json d;
  d["station_id"] = st.id();
  d["name"] = st.config.name;
  d["time_ms"] = sim.now();
  d["cam_enabled"] = st.cam_enabled;
  d["dcc_enabled"] = st.dcc_enabled;
  d["dcc_state"] = st.dcc_table.rows[st.dcc_state.row].name;
  d["dcc_interval_ms"] = dcc_min_interval(st.dcc_table, st.dcc_state);
  d["cbr"] = st.last_cbr;
  d["cam_tx"] = st.cam_tx;
  d["cam_rx"] = st.cam_rx;
  d["ldm_size"] = st.ldm.size();
  d["warnings_active"] = st.icw.active_count();
  if (st.fix && st.fix->position) {
    d["position"] = {{"lat", st.fix->position->latitude}, {"lon", st.fix->position->longitude}};
  } else {
    d["position"] = nullptr;
  }
  return d;
}

}  // namespace detail

/// Handles one request line against `station`. Must run on the simulation
/// thread (see api_call for the thread-safe entry point). Never throws.
inline nlohmann::ordered_json api_handle(Simulation& sim, std::uint32_t station, std::string_view line) {
  using detail::api_error;
  using detail::api_ok;
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    return api_error("parse_error");
  }
  if (!req.is_object()) return api_error("bad_args", "request must be a JSON object");
  for (const auto& [k, _] : req.items()) {
    if (k != "cmd" && k != "args") return api_error("bad_args", "unknown request field '" + k + "'");
  }
  if (!req.contains("cmd") || !req["cmd"].is_string()) return api_error("bad_args", "'cmd' string is required");
  const std::string cmd = req["cmd"].get<std::string>();
  const nlohmann::json args = req.contains("args") ? req["args"] : nlohmann::json::object();
  if (!args.is_object()) return api_error("bad_args", "'args' must be an object");

  static const std::set<std::string> known{"cam_start", "cam_stop", "dcc_config", "ldm_query", "status"};
  if (!known.count(cmd)) return api_error("unknown_command");

  Station& st = sim.station(station);
  nlohmann::ordered_json response;
  try {
    if (cmd == "cam_start" || cmd == "cam_stop") {
      detail::only_keys(args, {});
      st.cam_enabled = cmd == "cam_start";
      response = api_ok({{"cam_enabled", st.cam_enabled}});
    } else if (cmd == "dcc_config") {
      detail::only_keys(args, {"table", "enabled", "smoothing"});
      DccTable table = st.dcc_table;
      bool enabled = st.dcc_enabled;
      double smoothing = st.dcc_smoothing;
      if (args.contains("table")) {
        try {
          table = dcc_table_from_json(args["table"], "table");
        } catch (const Error& e) {
          throw detail::BadArgs{e.what()};
        }
      }
      if (args.contains("enabled")) {
        if (!args["enabled"].is_boolean()) throw detail::BadArgs{"'enabled' must be a boolean"};
        enabled = args["enabled"].get<bool>();
      }
      if (args.contains("smoothing")) {
        if (!args["smoothing"].is_number()) throw detail::BadArgs{"'smoothing' must be a number"};
        smoothing = args["smoothing"].get<double>();
        if (!(smoothing >= 0.0 && smoothing < 1.0)) throw detail::BadArgs{"'smoothing' must be in [0, 1)"};
      }
      st.dcc_table = table;
      st.dcc_enabled = enabled;
      st.dcc_smoothing = smoothing;
      st.dcc_state = dcc_update(st.dcc_table, DccState{0, st.last_cbr}, st.last_cbr);
      response = api_ok({{"enabled", st.dcc_enabled}, {"table", dcc_table_to_json(st.dcc_table)}});
    } else if (cmd == "ldm_query") {
      response = api_ok(detail::ldm_query_response(sim, st, args));
    } else {
      detail::only_keys(args, {});
      response = api_ok(detail::status_response(sim, st));
    }
  } catch (const detail::BadArgs& e) {
    response = api_error("bad_args", e.detail);
  }

  nlohmann::ordered_json log;
  log["cmd"] = cmd;
  log["ok"] = response["ok"];
  log["live"] = true;
  sim.emit(sim.now(), station, "api", std::move(log));
  return response;
}

/// Thread-safe: queues the request into the simulation and blocks until it
/// has been applied at an event boundary. Returns the response line.
inline std::string api_call(Simulation& sim, std::uint32_t station, std::string line) {
  auto promise = std::make_shared<std::promise<std::string>>();
  auto fut = promise->get_future();
  sim.post([promise, station, line = std::move(line)](Simulation& s) {
    promise->set_value(api_handle(s, station, line).dump());
  });
  return fut.get();
}

}  // namespace minicits
