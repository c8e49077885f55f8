#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "minicits/error.hpp"

namespace minicits {

struct DccRow {
  std::string name;
  double cbr_threshold = 0.0;  // lower bound: the row applies for cbr >= threshold
  double min_interval_ms = 0.0;

  friend bool operator==(const DccRow&, const DccRow&) = default;
};

/// Reactive DCC lookup table. Rows are ordered by strictly increasing CBR
/// lower bound; the first row starts at 0.
struct DccTable {
  std::vector<DccRow> rows;

  static DccTable defaults() {
    return {{{"relaxed", 0.00, 60.0},
             {"active1", 0.30, 100.0},
             {"active2", 0.40, 200.0},
             {"active3", 0.50, 250.0},
             {"restrictive", 0.60, 1000.0}}};
  }

  void validate() const {
    if (rows.empty()) throw Error(Errc::validation, "dcc.table", "table must have at least one row");
    if (rows.front().cbr_threshold != 0.0) throw Error(Errc::validation, "dcc.table[0].cbr", "first row must start at 0");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const std::string at = "dcc.table[" + std::to_string(i) + "]";
      if (!(r.cbr_threshold >= 0.0 && r.cbr_threshold <= 1.0)) throw Error(Errc::validation, at + ".cbr", "outside [0, 1]");
      if (!(r.min_interval_ms >= 0.0) || !std::isfinite(r.min_interval_ms)) {
        throw Error(Errc::validation, at + ".interval_ms", "must be finite and >= 0");
      }
      if (i > 0 && r.cbr_threshold <= rows[i - 1].cbr_threshold) {
        throw Error(Errc::validation, at + ".cbr", "thresholds must be strictly increasing");
      }
      if (i > 0 && r.min_interval_ms < rows[i - 1].min_interval_ms) {
        throw Error(Errc::validation, at + ".interval_ms", "intervals must be non-decreasing");
      }
    }
  }

  /// Index of the last row whose lower bound is <= cbr.
  std::size_t lookup(double cbr) const {
    std::size_t idx = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (cbr >= rows[i].cbr_threshold) idx = i;
    }
    return idx;
  }

  friend bool operator==(const DccTable&, const DccTable&) = default;
};

struct DccState {
  std::size_t row = 0;
  double last_cbr = 0.0;
};

inline double cbr_measure(double busy_time_ms, double window_ms) {
  if (!(window_ms > 0.0)) throw Error(Errc::invalid_window, "window", "measurement window must be > 0");
  return std::clamp(busy_time_ms / window_ms, 0.0, 1.0);
}

/// Maps a CBR sample onto the table. With smoothing in (0, 1) the sample is
/// first blended as cbr' = a*prev + (1-a)*cbr; 0 disables smoothing.
inline DccState dcc_update(const DccTable& table, const DccState& state, double cbr, double smoothing = 0.0) {
  const double c = std::clamp(cbr, 0.0, 1.0);
  const double filtered = smoothing > 0.0 ? smoothing * state.last_cbr + (1.0 - smoothing) * c : c;
  return {table.lookup(filtered), filtered};
}

inline double dcc_min_interval(const DccTable& table, const DccState& state) {
  return table.rows.at(state.row).min_interval_ms;
}

}  // namespace minicits
