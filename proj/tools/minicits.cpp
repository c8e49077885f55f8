// Command-line front end: run scenarios, inspect frames, serve the JSON API.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minicits/minicits.hpp"

namespace {

using namespace minicits;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::validation:
    case Errc::schema:
    case Errc::geometry:
    case Errc::range:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

std::vector<std::uint8_t> parse_hex(std::string hex) {
  std::erase_if(hex, [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == ':'; });
  if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex.erase(0, 2);
  if (hex.size() % 2 != 0) throw Error(Errc::validation, "hex", "odd number of hex digits");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = detail::hex_value(hex[i]);
    const int lo = detail::hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::validation, "hex", "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return out;
}

nlohmann::ordered_json cam_json(const CoopAwarenessMsg& m) {
  nlohmann::ordered_json j;
  j["protocolVersion"] = m.protocol_version;
  j["messageId"] = m.message_id;
  j["stationId"] = m.station_id;
  j["genDeltaTime"] = m.gen_delta_time;
  j["latitude"] = m.latitude;
  j["longitude"] = m.longitude;
  j["altitude"] = m.altitude;
  j["heading"] = m.heading;
  j["speed"] = m.speed;
  j["driveDirection"] = m.drive_direction;
  j["stationType"] = m.station_type;
  return j;
}

nlohmann::ordered_json decode_bytes(const std::vector<std::uint8_t>& bytes) {
  nlohmann::ordered_json out;
  if (bytes.size() >= 2 && bytes[0] == kUbxSync1 && bytes[1] == kUbxSync2) {
    UbxParser p;
    p.feed(bytes);
    const auto r = p.next();
    if (r.status != UbxStatus::frame) {
      throw Error(Errc::validation, "ubx",
                  r.status == UbxStatus::need_more       ? "truncated frame"
                  : r.status == UbxStatus::checksum_error ? "checksum mismatch"
                                                          : "not a NAV-PVT frame");
    }
    out["type"] = "ubx-nav-pvt";
    out["iTOW"] = r.pvt.itow_ms;
    out["fixType"] = r.pvt.fix_type;
    out["lat_e7"] = r.pvt.lat_e7;
    out["lon_e7"] = r.pvt.lon_e7;
    out["hMSL_mm"] = r.pvt.hmsl_mm;
    out["gSpeed_mm_s"] = r.pvt.ground_speed_mm_s;
    out["headMot_e5"] = r.pvt.heading_e5;
    return out;
  }
  if (bytes.size() == kCamWireSize) {
    out["type"] = "cam";
    out["cam"] = cam_json(cam_decode(bytes));
    return out;
  }
  const auto f = gn_decode(bytes);
  out["type"] = "gn-shb";
  nlohmann::ordered_json gn;
  gn["lifetime"] = f.lifetime;
  gn["trafficClass"] = f.traffic_class;
  gn["sourceAddress"] = f.source_address;
  gn["timestamp"] = f.timestamp;
  gn["latitude"] = f.latitude;
  gn["longitude"] = f.longitude;
  gn["speed"] = f.speed;
  gn["heading"] = f.heading;
  gn["btpDestPort"] = f.btp_dest_port;
  gn["payloadLength"] = f.payload.size();
  out["gn"] = gn;
  if (f.btp_dest_port == kBtpPortCam) out["cam"] = cam_json(cam_decode(f.payload));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative mini-car C-ITS stack simulator"};
  app.require_subcommand(1);

  std::string scenario_file, out_file, summary_file, trace_dir, hex, log_file;
  std::uint64_t seed = 0;
  double duration = 0.0, speedup = 1.0;
  std::uint16_t port = kDefaultApiPort;
  std::uint32_t api_station = 0;

  auto* run = app.add_subcommand("run", "Run a scenario and write the JSONL event log");
  run->add_option("--scenario", scenario_file, "Scenario JSON file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides the scenario)");
  auto* dur_opt = run->add_option("--duration", duration, "Duration in seconds (overrides the scenario)");
  run->add_option("--out", out_file, "Event log path ('-' for stdout)")->required();
  run->add_option("--summary", summary_file, "Also write the summary JSON here");
  run->add_option("--record-traces", trace_dir, "Directory for per-station trace_<id>.jsonl recordings");

  auto* decode = app.add_subcommand("decode", "Decode a GN/BTP+CAM frame, bare CAM, or UBX frame");
  decode->add_option("--hex", hex, "Frame bytes as hex")->required();

  auto* verify = app.add_subcommand("verify", "Recompute a run summary from its event log");
  verify->add_option("--log", log_file, "Event log (JSONL)")->required();
  verify->add_option("--scenario", scenario_file, "Scenario the log was produced from")->required();
  auto* vdur_opt = verify->add_option("--duration", duration, "Duration override used for the run");
  verify->add_option("--summary", summary_file, "Summary JSON to compare against");

  auto* serve = app.add_subcommand("serve", "Run a scenario live with the JSON-over-TCP API");
  serve->add_option("--scenario", scenario_file, "Scenario JSON file")->required();
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  auto* station_opt = serve->add_option("--station", api_station, "Station the API controls (default: first)");
  auto* sdur_opt = serve->add_option("--duration", duration, "Duration in seconds (0 = run until interrupted)");
  serve->add_option("--speedup", speedup, "Simulated seconds per wall-clock second")->capture_default_str();
  serve->add_option("--out", out_file, "Event log path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      RunOptions opt;
      if (*seed_opt) opt.seed = seed;
      if (*dur_opt) opt.duration_s = duration;
      if (!trace_dir.empty()) opt.trace_dir = trace_dir;
      const auto cfg = load_scenario(scenario_file);
      std::ofstream file;
      if (out_file == "-") {
        opt.log = &std::cout;
      } else {
        file.open(out_file);
        if (!file) throw Error(Errc::io, out_file, "cannot open output file");
        opt.log = &file;
      }
      const auto result = run_scenario(cfg, opt);
      if (!summary_file.empty()) std::ofstream(summary_file) << result.summary.dump(2) << '\n';
      (out_file == "-" ? std::cerr : std::cout) << result.summary.dump(2) << '\n';
      return 0;
    }

    if (*decode) {
      std::cout << decode_bytes(parse_hex(hex)).dump(2) << '\n';
      return 0;
    }

    if (*verify) {
      auto cfg = load_scenario(scenario_file);
      if (*vdur_opt) cfg.duration_s = duration;
      std::ifstream in(log_file);
      if (!in) throw Error(Errc::io, log_file, "cannot open log");
      SummaryBuilder builder(cfg.duration_s, station_ids(cfg));
      read_event_log(in, [&](const EventLogRecord& r) { builder.add(r); });
      const auto summary = builder.to_json();
      std::cout << summary.dump(2) << '\n';
      if (!summary_file.empty()) {
        std::ifstream s(summary_file);
        if (!s) throw Error(Errc::io, summary_file, "cannot open summary");
        const auto expected = nlohmann::ordered_json::parse(s);
        if (expected != summary) {
          std::cerr << "summary mismatch\n";
          return kExitRuntime;
        }
        std::cerr << "summary matches\n";
      }
      return 0;
    }

    if (*serve) {
      auto cfg = load_scenario(scenario_file);
      if (*sdur_opt) cfg.duration_s = duration;
      const bool unlimited = cfg.duration_s == 0.0;
      if (unlimited) cfg.duration_s = 1.0;  // placeholder so the first tick is scheduled
      if (cfg.stations.empty()) throw Error(Errc::validation, "stations", "scenario has no stations");
      if (!(speedup > 0.0)) throw Error(Errc::validation, "speedup", "must be > 0");
      if (!*station_opt) api_station = cfg.stations.front().id;
      if (!cfg.find_station(api_station)) {
        throw Error(Errc::validation, "station", "no station " + std::to_string(api_station));
      }
      std::ofstream log;
      if (!out_file.empty()) log.open(out_file);
      Simulation sim(cfg, [&](const EventLogRecord& r) {
        if (log.is_open()) log << r.to_json().dump() << '\n';
      });
      if (unlimited) sim.set_end_ms(std::numeric_limits<double>::infinity());
      LineServer server([&](const std::string& line) { return api_call(sim, api_station, line); }, port);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      std::cerr << "API listening on 127.0.0.1:" << server.port() << " (station " << api_station << ")\n";
      sim.run_paced(speedup, [] { return !g_stop.load(); });
      server.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
