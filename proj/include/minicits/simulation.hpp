#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "minicits/cam.hpp"
#include "minicits/dcc.hpp"
#include "minicits/event_log.hpp"
#include "minicits/geonet.hpp"
#include "minicits/icw.hpp"
#include "minicits/ldm.hpp"
#include "minicits/netsim.hpp"
#include "minicits/providers.hpp"
#include "minicits/scenario.hpp"
#include "minicits/vehicle.hpp"

namespace minicits {

/// Runtime state of one C-ITS station (vehicle + OBU).
struct Station {
  StationConfig config;
  std::optional<PurePursuitVehicle> vehicle;
  std::unique_ptr<PositionProvider> provider;
  VirtualGnssDevice* device = nullptr;  // non-owning view of provider when it is a virtual receiver
  RngStream noise_rng;

  LocalPose truth;               // ground-truth pose at the last tick
  std::optional<PvtFix> fix;     // latest fix from the provider
  bool cam_enabled = true;
  bool dcc_enabled = false;
  CamGenerationState cam_state;
  DccTable dcc_table;
  double dcc_smoothing = 0.0;
  DccState dcc_state;
  double last_cbr = 0.0;
  LocalDynamicMap ldm;
  IcwEvaluator icw;
  std::uint64_t cam_tx = 0;
  std::uint64_t cam_rx = 0;
  std::ostream* trace_out = nullptr;

  std::uint32_t id() const { return config.id; }
  double dcc_interval_ms() const { return dcc_enabled ? dcc_min_interval(dcc_table, dcc_state) : 0.0; }
};

/// Deterministic discrete-event world: a fixed-step tick drives motion,
/// positioning, CAM generation, DCC and ICW for every station in id order;
/// frame receptions are separate events at their delivery time.
class Simulation {
 public:
  struct Tick {};
  struct FrameRx {
    std::uint32_t rx_station = 0;
    std::uint32_t tx_station = 0;
    TimeMs sent_ms = 0.0;
    std::vector<std::uint8_t> bytes;
  };
  using Payload = std::variant<Tick, FrameRx>;

  Simulation(ScenarioConfig cfg, EventSink sink)
      : cfg_(std::move(cfg)), sink_(std::move(sink)), channel_(cfg_.channel) {
    require_valid(cfg_.frame);
    for (const auto& sc : cfg_.stations) {
      auto st = std::make_unique<Station>();
      st->config = sc;
      st->cam_enabled = sc.cam_enabled;
      st->dcc_enabled = sc.dcc_enabled;
      st->dcc_table = cfg_.dcc_table;
      st->dcc_smoothing = cfg_.dcc_smoothing;
      st->cam_state.t_gen_cam_ms = cfg_.cam.t_gen_cam_max_ms;
      st->noise_rng = RngStream(stream_seed(cfg_.channel.rng_seed, sc.id, RngPurpose::pose_noise));
      if (sc.positioning == PositioningSource::trace) {
        st->provider = std::make_unique<TraceProvider>(sc.trace);
      } else {
        auto dev = std::make_unique<VirtualGnssDevice>(
            cfg_.frame, sc.positioning == PositioningSource::ubx ? GnssEncoding::ubx : GnssEncoding::nmea);
        st->device = dev.get();
        st->provider = std::move(dev);
        if (sc.role == StationRole::mobile) {
          PurePursuitConfig pp = sc.pure_pursuit;
          pp.target_speed_mps = sc.target_speed_mps;
          st->vehicle.emplace(*sc.path, pp, sc.start_offset_m, sc.wheelbase_m);
        }
      }
      st->truth = sc.pose;
      channel_.register_station(sc.id);
      stations_.emplace(sc.id, std::move(st));
    }
    end_ms_ = cfg_.duration_s * 1000.0;
    if (end_ms_ > 0.0) queue_.schedule(0.0, Tick{});
  }

  const ScenarioConfig& config() const { return cfg_; }
  TimeMs now() const { return queue_.now(); }
  TimeMs end_ms() const { return end_ms_; }
  void set_end_ms(TimeMs end) { end_ms_ = end; }
  bool finished() const {
    const auto t = queue_.next_time();
    return !t || *t >= end_ms_;
  }
  std::uint64_t events_processed() const { return events_processed_; }

  Station& station(std::uint32_t id) {
    const auto it = stations_.find(id);
    if (it == stations_.end()) throw Error(Errc::registration, "station " + std::to_string(id), "unknown station");
    return *it->second;
  }
  const std::map<std::uint32_t, std::unique_ptr<Station>>& stations() const { return stations_; }
  BroadcastChannel& channel() { return channel_; }

  /// Processes exactly one event. Returns false at end of simulation.
  bool step() {
    drain_commands();
    if (finished()) return false;
    auto ev = queue_.pop();
    ++events_processed_;
    std::visit([&](auto& p) { handle(ev->time, p); }, ev->payload);
    return true;
  }

  void run() {
    while (step()) {
    }
  }

  // --- external commands -----------------------------------------------------

  /// Thread-safe: `cmd` runs on the simulation thread at the next event boundary.
  void post(std::function<void(Simulation&)> cmd) {
    {
      std::lock_guard lock(cmd_mutex_);
      commands_.push_back(std::move(cmd));
    }
    cmd_cv_.notify_all();
  }

  /// Runs the event loop paced against the wall clock (`speedup` sim seconds
  /// per wall second), servicing posted commands while waiting. After the
  /// scenario ends, keeps serving commands until `keep_running` returns false.
  void run_paced(double speedup, const std::function<bool()>& keep_running) {
    const auto wall0 = std::chrono::steady_clock::now();
    const TimeMs sim0 = now();
    while (keep_running()) {
      drain_commands();
      std::unique_lock lock(cmd_mutex_);
      if (finished()) {
        cmd_cv_.wait_for(lock, std::chrono::milliseconds(50), [&] { return !commands_.empty(); });
        continue;
      }
      const TimeMs next = *queue_.next_time();
      const auto due = wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double, std::milli>((next - sim0) / speedup));
      if (cmd_cv_.wait_until(lock, due, [&] { return !commands_.empty(); })) continue;
      lock.unlock();
      step();
    }
  }

  void emit(TimeMs t, std::uint32_t station, const char* kind, nlohmann::ordered_json detail) {
    if (!cfg_.log_kinds.count(kind)) return;
    if (sink_) sink_(EventLogRecord{t, station, kind, std::move(detail)});
  }

 private:
  void drain_commands() {
    std::deque<std::function<void(Simulation&)>> batch;
    {
      std::lock_guard lock(cmd_mutex_);
      batch.swap(commands_);
    }
    for (auto& c : batch) c(*this);
  }

  bool in_zone(const LocalPose& p) const {
    return (Vec2{p.x, p.y} - cfg_.zone.center).norm() * cfg_.frame.scale < cfg_.zone.radius_m;
  }

  static bool on_period(TimeMs t, double period) { return std::fmod(t, period) == 0.0; }

  void handle(TimeMs t, Tick&) {
    const double dt_s = cfg_.step_ms / 1000.0;
    for (auto& [id, st] : stations_) tick_station(*st, t, dt_s);
    const TimeMs next = t + cfg_.step_ms;
    if (next < end_ms_) queue_.schedule(next, Tick{});
  }

  void tick_station(Station& st, TimeMs t, double dt_s) {
    const auto& sc = st.config;
    // 1. motion
    if (st.vehicle) {
      if (t > 0.0) st.vehicle->step(dt_s);
      st.truth = st.vehicle->pose(t);
    } else {
      st.truth.timestamp_ms = t;
    }
    if (st.vehicle || (t == 0.0 && sc.positioning != PositioningSource::trace)) log_pose(st, st.truth, t);

    // 2. positioning
    if (st.device) {
      LocalPose observed = st.truth;
      if (sc.pose_noise_sigma_m > 0.0) {
        observed.x += st.noise_rng.gaussian(sc.pose_noise_sigma_m);
        observed.y += st.noise_rng.gaussian(sc.pose_noise_sigma_m);
      }
      st.device->observe(observed);
    }
    const auto fixes = st.provider->poll(t);
    if (!fixes.empty()) {
      st.fix = fixes.back();
      if (st.trace_out) {
        for (const auto& f : fixes) write_trace_record(*st.trace_out, f);
      }
      if (!st.device && st.fix->position) {
        st.truth = geo_to_local(*st.fix, cfg_.frame);
        st.truth.timestamp_ms = t;
        log_pose(st, st.truth, t);
      }
    }

    // 3. CAM generation
    if (st.cam_enabled && st.fix) {
      const auto d = cam_trigger(st.cam_state, *st.fix, t, st.dcc_interval_ms(), cfg_.cam);
      if (d.transmit) {
        st.cam_state = d.next;
        transmit_cam(st, t, d.cause);
      }
    }

    // 4. channel load and DCC
    if (t > 0.0 && on_period(t, cfg_.dcc_window_ms)) {
      const double busy = channel_.busy_time_ms(st.id(), t - cfg_.dcc_window_ms, t);
      st.last_cbr = cbr_measure(busy, cfg_.dcc_window_ms);
      const auto prev = st.dcc_state.row;
      st.dcc_state = dcc_update(st.dcc_table, st.dcc_state, st.last_cbr, st.dcc_smoothing);
      nlohmann::ordered_json d;
      d["cbr"] = st.last_cbr;
      d["enabled"] = st.dcc_enabled;
      d["state"] = st.dcc_table.rows[st.dcc_state.row].name;
      d["row"] = st.dcc_state.row;
      d["interval_ms"] = dcc_min_interval(st.dcc_table, st.dcc_state);
      d["changed"] = prev != st.dcc_state.row;
      emit(t, st.id(), "dcc", std::move(d));
    }

    // 5. ICW periodic evaluation
    if (sc.icw_enabled && on_period(t, cfg_.icw_period_ms)) evaluate_icw(st, t);
  }

  void log_pose(const Station& st, const LocalPose& p, TimeMs t) {
    nlohmann::ordered_json d;
    d["x"] = p.x;
    d["y"] = p.y;
    d["heading_deg"] = p.heading_deg;
    d["speed_mps"] = p.speed_mps;
    d["in_zone"] = in_zone(p);
    emit(t, st.id(), "pose", std::move(d));
  }

  void transmit_cam(Station& st, TimeMs t, CamTriggerCause cause) {
    const auto msg = make_cam(st.id(), *st.fix, static_cast<std::int64_t>(std::llround(t)));
    GnShbFrame frame;
    frame.source_address = st.id();
    frame.timestamp = static_cast<std::uint32_t>(static_cast<std::uint64_t>(std::llround(t)) & 0xFFFFFFFFULL);
    frame.latitude = msg.latitude;
    frame.longitude = msg.longitude;
    frame.speed = msg.speed;
    frame.heading = msg.heading;
    frame.payload = cam_encode(msg);
    auto bytes = gn_encode(frame);
    ++st.cam_tx;

    nlohmann::ordered_json d;
    d["gdt"] = msg.gen_delta_time;
    d["cause"] = to_string(cause);
    d["lat"] = msg.latitude;
    d["lon"] = msg.longitude;
    d["speed"] = msg.speed;
    d["heading"] = msg.heading;
    d["bytes"] = bytes.size();
    emit(t, st.id(), "cam-tx", std::move(d));

    for (const auto& dl : channel_.broadcast(st.id(), bytes.size(), t)) {
      if (dl.time < end_ms_) queue_.schedule(dl.time, FrameRx{dl.rx_station, st.id(), t, bytes});
    }
  }

  void handle(TimeMs t, FrameRx& rx) {
    Station& st = *stations_.at(rx.rx_station);
    CoopAwarenessMsg msg;
    try {
      const auto frame = gn_decode(rx.bytes);
      if (frame.btp_dest_port != kBtpPortCam) return;
      msg = cam_decode(frame.payload);
    } catch (const Error& e) {
      nlohmann::ordered_json d;
      d["from"] = rx.tx_station;
      d["error"] = std::string(to_string(e.code()));
      emit(t, st.id(), "cam-rx", std::move(d));
      return;
    }
    ++st.cam_rx;
    nlohmann::ordered_json d;
    d["from"] = msg.station_id;
    d["gdt"] = msg.gen_delta_time;
    d["delay_ms"] = t - rx.sent_ms;
    emit(t, st.id(), "cam-rx", std::move(d));

    const auto outcome = st.ldm.upsert(msg, t);
    nlohmann::ordered_json l;
    l["remote"] = msg.station_id;
    l["outcome"] = to_string(outcome);
    l["size"] = st.ldm.size();
    emit(t, st.id(), "ldm", std::move(l));

    if (st.config.icw_enabled && (outcome == LdmUpsert::inserted || outcome == LdmUpsert::updated)) {
      evaluate_icw(st, t);
    }
  }

  void evaluate_icw(Station& st, TimeMs t) {
    st.ldm.gc(t, cfg_.ldm_max_age_ms);
    const LocalPose ego = st.fix && st.fix->position ? geo_to_local(*st.fix, cfg_.frame) : st.truth;
    const GeoPoint center = st.fix && st.fix->position ? *st.fix->position : cfg_.frame.origin;
    auto results = st.ldm.query(center, t, cfg_.ldm_max_age_ms);
    std::erase_if(results, [&](const LdmQueryResult& r) { return r.entry.station_id == st.id(); });
    for (const auto& w : st.icw.evaluate(ego, results, cfg_.zone, cfg_.frame, cfg_.icw, t)) {
      nlohmann::ordered_json d;
      d["remote"] = w.remote_station_id;
      d["state"] = w.state == WarningState::raised ? "raised" : "cleared";
      d["tti_s"] = w.tti_s;
      d["distance_m"] = w.remote_distance_m;
      emit(t, st.id(), "icw", std::move(d));
    }
  }

  ScenarioConfig cfg_;
  EventSink sink_;
  BroadcastChannel channel_;
  EventQueue<Payload> queue_;
  std::map<std::uint32_t, std::unique_ptr<Station>> stations_;
  TimeMs end_ms_ = 0.0;
  std::uint64_t events_processed_ = 0;

  std::mutex cmd_mutex_;
  std::condition_variable cmd_cv_;
  std::deque<std::function<void(Simulation&)>> commands_;
};

}  // namespace minicits
