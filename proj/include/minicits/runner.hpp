#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "minicits/scenario.hpp"
#include "minicits/simulation.hpp"
#include "minicits/summary.hpp"

namespace minicits {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::ostream* log = nullptr;  // JSONL event log; null discards records
  std::optional<std::filesystem::path> trace_dir;  // record each station's fixes as trace_<id>.jsonl
};

struct RunResult {
  nlohmann::ordered_json summary;
  std::uint64_t events = 0;
  std::uint64_t log_hash = 0xcbf29ce484222325ULL;  // FNV-1a over the JSONL text
};

inline ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opt) {
  if (opt.seed) cfg.channel.rng_seed = *opt.seed;
  if (opt.duration_s) {
    if (!(*opt.duration_s >= 0.0)) throw Error(Errc::validation, "duration", "must be >= 0");
    cfg.duration_s = *opt.duration_s;
  }
  return cfg;
}

inline std::vector<std::uint32_t> station_ids(const ScenarioConfig& cfg) {
  std::vector<std::uint32_t> ids;
  for (const auto& s : cfg.stations) ids.push_back(s.id);
  return ids;
}

/// Runs the scenario to completion, streaming the log and summarizing it.
inline RunResult run_scenario(const ScenarioConfig& base, const RunOptions& opt = {}) {
  const ScenarioConfig cfg = apply_overrides(base, opt);
  RunResult result;
  SummaryBuilder summary(cfg.duration_s, station_ids(cfg));
  auto sink = [&](const EventLogRecord& r) {
    summary.add(r);
    const std::string line = r.to_json().dump() + "\n";
    result.log_hash = fnv1a64(line, result.log_hash);
    if (opt.log) *opt.log << line;
  };

  Simulation sim(cfg, sink);
  std::map<std::uint32_t, std::unique_ptr<std::ofstream>> traces;
  if (opt.trace_dir) {
    std::filesystem::create_directories(*opt.trace_dir);
    for (auto& [id, st] : sim.stations()) {
      auto f = std::make_unique<std::ofstream>(*opt.trace_dir / ("trace_" + std::to_string(id) + ".jsonl"));
      if (!*f) throw Error(Errc::io, opt.trace_dir->string(), "cannot write trace file");
      st->trace_out = f.get();
      traces.emplace(id, std::move(f));
    }
  }
  sim.run();
  result.events = sim.events_processed();
  result.summary = summary.to_json();
  return result;
}

}  // namespace minicits
