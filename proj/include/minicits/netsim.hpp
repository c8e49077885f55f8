#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "minicits/error.hpp"
#include "minicits/positioning.hpp"

namespace minicits {

/// Frame airtime in microseconds at the given PHY bitrate. Preamble and PLCP
/// overhead are not modeled.
inline double airtime_us(std::size_t frame_len_bytes, double bitrate_bps) {
  return static_cast<double>(frame_len_bytes) * 8.0 / bitrate_bps * 1e6;
}

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class RngPurpose : std::uint8_t { loss = 1, jitter = 2, pose_noise = 3 };

/// Seed for the stream owned by (station, purpose). Streams are independent
/// of which other stations exist.
inline std::uint64_t stream_seed(std::uint64_t scenario_seed, std::uint32_t station, RngPurpose purpose) {
  std::uint64_t s = scenario_seed;
  const std::uint64_t base = splitmix64(s);
  std::uint64_t t = base ^ ((static_cast<std::uint64_t>(station) << 8) | static_cast<std::uint8_t>(purpose));
  splitmix64(t);
  return splitmix64(t);
}

/// mt19937_64 stream. Uniform and Gaussian draws are computed directly from
/// the raw 64-bit output, so a seed gives the same values with any library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  double gaussian(double sigma) {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v * sigma;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2) * sigma;
  }

 private:
  std::mt19937_64 gen_;
  std::optional<double> cached_;
};

// ---------------------------------------------------------------------------
// Event queue

/// Min-queue ordered by (time, insertion sequence). Scheduling before the
/// time of the last popped event is an ordering error.
template <typename Payload>
class EventQueue {
 public:
  struct Event {
    TimeMs time = 0.0;
    std::uint64_t seq = 0;
    Payload payload;
  };

  std::uint64_t schedule(TimeMs time, Payload payload) {
    if (!(time >= now_)) {
      throw Error(Errc::ordering, "", "event at " + std::to_string(time) + " ms scheduled into the past (now " +
                                          std::to_string(now_) + " ms)");
    }
    heap_.push_back(Event{time, next_seq_, std::move(payload)});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return next_seq_++;
  }

  /// Pops the earliest event; nullopt signals end of simulation.
  std::optional<Event> pop() {
    if (heap_.empty()) return std::nullopt;
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Event e = std::move(heap_.back());
    heap_.pop_back();
    now_ = e.time;
    return e;
  }

  std::optional<TimeMs> next_time() const {
    if (heap_.empty()) return std::nullopt;
    return heap_.front().time;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  TimeMs now() const { return now_; }

 private:
  static bool later(const Event& a, const Event& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }

  std::vector<Event> heap_;
  std::uint64_t next_seq_ = 0;
  TimeMs now_ = 0.0;
};

// ---------------------------------------------------------------------------
// Broadcast channel

struct ChannelConfig {
  double bitrate_bps = 6'000'000.0;
  double loss_probability = 0.0;
  double latency_ms = 1.0;
  double jitter_ms = 0.0;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (!(bitrate_bps > 0.0) || !std::isfinite(bitrate_bps)) throw Error(Errc::validation, "channel.bitrate_bps", "must be > 0");
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
      throw Error(Errc::validation, "channel.loss_probability", "must be in [0, 1]");
    }
    if (!(latency_ms >= 0.0) || !std::isfinite(latency_ms)) throw Error(Errc::validation, "channel.latency_ms", "must be >= 0");
    if (!(jitter_ms >= 0.0) || !std::isfinite(jitter_ms)) throw Error(Errc::validation, "channel.jitter_ms", "must be >= 0");
  }
};

struct Delivery {
  std::uint32_t rx_station = 0;
  TimeMs time = 0.0;
};

/// Collision-free shared medium: every registered station hears every frame
/// (channel busy), and decodes it unless its own loss draw drops it.
class BroadcastChannel {
 public:
  // Busy intervals older than this are discarded.
  static constexpr double kRetentionMs = 1000.0;

  explicit BroadcastChannel(ChannelConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  void register_station(std::uint32_t id) {
    if (stations_.count(id)) throw Error(Errc::registration, "station " + std::to_string(id), "already registered");
    stations_.emplace(id, StationState{RngStream(stream_seed(cfg_.rng_seed, id, RngPurpose::loss)),
                                       RngStream(stream_seed(cfg_.rng_seed, id, RngPurpose::jitter)),
                                       {}});
  }

  bool is_registered(std::uint32_t id) const { return stations_.count(id) != 0; }

  std::vector<Delivery> broadcast(std::uint32_t tx_station, std::size_t frame_len, TimeMs now) {
    if (!stations_.count(tx_station)) {
      throw Error(Errc::registration, "station " + std::to_string(tx_station), "not registered");
    }
    const double busy_ms = airtime_us(frame_len, cfg_.bitrate_bps) / 1000.0;
    std::vector<Delivery> out;
    for (auto& [id, st] : stations_) {
      st.busy.emplace_back(now, now + busy_ms);
      while (!st.busy.empty() && st.busy.front().second < now - kRetentionMs) st.busy.pop_front();
      if (id == tx_station) continue;
      const bool lost = st.loss_rng.bernoulli(cfg_.loss_probability);
      const double jitter = cfg_.jitter_ms > 0.0 ? st.jitter_rng.uniform01() * cfg_.jitter_ms : 0.0;
      if (!lost) out.push_back({id, now + cfg_.latency_ms + jitter});
    }
    return out;
  }

  /// Sum of frame airtime overlapping [from, to] as sensed by `station`.
  double busy_time_ms(std::uint32_t station, TimeMs from, TimeMs to) const {
    const auto it = stations_.find(station);
    if (it == stations_.end()) throw Error(Errc::registration, "station " + std::to_string(station), "not registered");
    double sum = 0.0;
    for (const auto& [start, end] : it->second.busy) {
      sum += std::max(0.0, std::min(end, to) - std::max(start, from));
    }
    return sum;
  }

  const ChannelConfig& config() const { return cfg_; }
  void set_loss_probability(double p) {
    ChannelConfig next = cfg_;
    next.loss_probability = p;
    next.validate();
    cfg_ = next;
  }

 private:
  struct StationState {
    RngStream loss_rng;
    RngStream jitter_rng;
    std::deque<std::pair<TimeMs, TimeMs>> busy;
  };

  ChannelConfig cfg_;
  std::map<std::uint32_t, StationState> stations_;
};

}  // namespace minicits
