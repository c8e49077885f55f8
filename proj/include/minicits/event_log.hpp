#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "minicits/error.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

/// One line of the JSONL event log. Field order is fixed:
/// {"t_ms", "station", "kind", "detail"}.
struct EventLogRecord {
  TimeMs t_ms = 0.0;
  std::uint32_t station = 0;
  std::string kind;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["t_ms"] = t_ms;
    j["station"] = station;
    j["kind"] = kind;
    j["detail"] = detail;
    return j;
  }

  static EventLogRecord from_json(const nlohmann::ordered_json& j) {
    EventLogRecord r;
    r.t_ms = j.at("t_ms").get<double>();
    r.station = j.at("station").get<std::uint32_t>();
    r.kind = j.at("kind").get<std::string>();
    r.detail = j.at("detail");
    return r;
  }
};

using EventSink = std::function<void(const EventLogRecord&)>;

inline EventSink jsonl_sink(std::ostream& out) {
  return [&out](const EventLogRecord& r) { out << r.to_json().dump() << '\n'; };
}

/// Calls `fn` for every record of a JSONL log; errors name the line.
inline void read_event_log(std::istream& in, const EventSink& fn) {
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      fn(EventLogRecord::from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::schema, "line " + std::to_string(n), e.what());
    }
  }
}

/// 64-bit FNV-1a, used to fingerprint logs.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace minicits
