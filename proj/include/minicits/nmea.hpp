#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minicits/positioning.hpp"

namespace minicits {

inline constexpr double kKnotsPerMps = 1.9438445;

/// XOR of every byte of the sentence body (between '$' and '*').
inline std::uint8_t nmea_checksum(std::string_view body) {
  std::uint8_t sum = 0;
  for (char c : body) sum ^= static_cast<std::uint8_t>(c);
  return sum;
}

/// Wraps a body into a full sentence: '$' body '*' HH CR LF.
inline std::string nmea_frame(std::string_view body) {
  char tail[8];
  std::snprintf(tail, sizeof tail, "*%02X\r\n", nmea_checksum(body));
  std::string s;
  s.reserve(body.size() + 6);
  s.push_back('$');
  s.append(body);
  s.append(tail);
  return s;
}

namespace detail {

// Fix timestamps count from 2025-01-01T00:00:00Z when rendered as UTC.
inline constexpr std::chrono::sys_days kNmeaEpoch =
    std::chrono::sys_days{std::chrono::year{2025} / std::chrono::January / 1};

inline std::string nmea_time(std::optional<TimeMs> ts) {
  if (!ts) return {};
  const auto cs = static_cast<std::int64_t>(std::floor(*ts / 10.0));
  std::int64_t day_cs = cs % 8640000;
  if (day_cs < 0) day_cs += 8640000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d%02d%02d.%02d", static_cast<int>(day_cs / 360000),
                static_cast<int>(day_cs / 6000 % 60), static_cast<int>(day_cs / 100 % 60),
                static_cast<int>(day_cs % 100));
  return buf;
}

inline std::string nmea_date(std::optional<TimeMs> ts) {
  if (!ts) return {};
  const auto days = static_cast<int>(std::floor(*ts / 86400000.0));
  const std::chrono::year_month_day ymd{kNmeaEpoch + std::chrono::days{days}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02u%02u%02d", static_cast<unsigned>(ymd.day()),
                static_cast<unsigned>(ymd.month()), static_cast<int>(ymd.year()) % 100);
  return buf;
}

// ddmm.mmmmm (lat) / dddmm.mmmmm (lon), rounded once on an integer grid so a
// carry never produces "60.00000" minutes.
inline std::string nmea_angle(double deg, int degree_digits) {
  const auto total = static_cast<std::int64_t>(std::llround(std::fabs(deg) * 60.0 * 1e5));
  const auto whole = total / 6000000;
  const auto rem = total % 6000000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%0*lld%02lld.%05lld", degree_digits, static_cast<long long>(whole),
                static_cast<long long>(rem / 100000), static_cast<long long>(rem % 100000));
  return buf;
}

inline std::vector<std::string_view> split_fields(std::string_view body) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = body.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(body.substr(start));
      return out;
    }
    out.push_back(body.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace detail

/// Renders one RMC and one GGA sentence for `fix`. Unavailable fields are
/// left empty; the sentences are still framed and checksummed.
inline std::vector<std::string> nmea_generate(const PvtFix& fix, std::string_view talker = "GP") {
  const std::string time = detail::nmea_time(fix.timestamp_ms);
  std::string lat, ns, lon, ew;
  if (fix.position) {
    lat = detail::nmea_angle(fix.position->latitude, 2);
    ns = fix.position->latitude < 0.0 ? "S" : "N";
    lon = detail::nmea_angle(fix.position->longitude, 3);
    ew = fix.position->longitude < 0.0 ? "W" : "E";
  }
  char num[32];
  std::string speed, course, alt;
  if (fix.speed_mps) {
    std::snprintf(num, sizeof num, "%.3f", *fix.speed_mps * kKnotsPerMps);
    speed = num;
  }
  if (fix.heading_deg) {
    std::snprintf(num, sizeof num, "%.2f", normalize_heading(*fix.heading_deg));
    course = num;
  }
  if (fix.position && fix.position->altitude) {
    std::snprintf(num, sizeof num, "%.1f", *fix.position->altitude);
    alt = num;
  }
  const bool has_pos = fix.position.has_value();

  std::string rmc = std::string(talker) + "RMC," + time + "," + (has_pos ? "A" : "V") + "," + lat + "," +
                    ns + "," + lon + "," + ew + "," + speed + "," + course + "," +
                    detail::nmea_date(fix.timestamp_ms) + ",,," + (has_pos ? "A" : "N");
  std::string gga = std::string(talker) + "GGA," + time + "," + lat + "," + ns + "," + lon + "," + ew + "," +
                    (has_pos ? "1,08,0.9," : "0,00,,") + alt + ",M,,M,,";
  return {nmea_frame(rmc), nmea_frame(gga)};
}

enum class NmeaStatus { ok, ignored, checksum_error, framing_error };

struct NmeaParseResult {
  NmeaStatus status = NmeaStatus::framing_error;
  std::string talker;
  std::string type;  // "RMC", "GGA", or whatever was ignored
  PvtFix fix;
  std::optional<std::int64_t> time_of_day_ms;
};

namespace detail {

inline std::optional<double> parse_nmea_angle(std::string_view value, std::string_view hemi, int degree_digits,
                                              bool& malformed) {
  if (value.empty() && hemi.empty()) return std::nullopt;
  if (value.size() < static_cast<std::size_t>(degree_digits) + 2 || hemi.size() != 1) {
    malformed = true;
    return std::nullopt;
  }
  const auto deg = parse_double(value.substr(0, degree_digits));
  const auto min = parse_double(value.substr(degree_digits));
  if (!deg || !min || *min < 0.0 || *min >= 60.0) {
    malformed = true;
    return std::nullopt;
  }
  double v = *deg + *min / 60.0;
  const char h = hemi[0];
  const bool neg_hemi = degree_digits == 2 ? h == 'S' : h == 'W';
  const bool pos_hemi = degree_digits == 2 ? h == 'N' : h == 'E';
  if (!neg_hemi && !pos_hemi) {
    malformed = true;
    return std::nullopt;
  }
  return neg_hemi ? -v : v;
}

inline std::optional<std::int64_t> parse_nmea_time(std::string_view s, bool& malformed) {
  if (s.empty()) return std::nullopt;
  if (s.size() < 6) {
    malformed = true;
    return std::nullopt;
  }
  const auto hh = parse_double(s.substr(0, 2));
  const auto mm = parse_double(s.substr(2, 2));
  const auto ss = parse_double(s.substr(4));
  if (!hh || !mm || !ss || *hh >= 24 || *mm >= 60 || *ss >= 61 || *ss < 0) {
    malformed = true;
    return std::nullopt;
  }
  return static_cast<std::int64_t>(*hh) * 3600000 + static_cast<std::int64_t>(*mm) * 60000 +
         std::llround(*ss * 1000.0);
}

inline std::optional<std::int64_t> parse_nmea_date_days(std::string_view s, bool& malformed) {
  if (s.empty()) return std::nullopt;
  const auto v = s.size() == 6 ? parse_double(s) : std::nullopt;
  if (!v) {
    malformed = true;
    return std::nullopt;
  }
  const auto n = static_cast<int>(*v);
  const std::chrono::year_month_day ymd{std::chrono::year{2000 + n % 100},
                                        std::chrono::month{static_cast<unsigned>(n / 100 % 100)},
                                        std::chrono::day{static_cast<unsigned>(n / 10000)}};
  if (!ymd.ok()) {
    malformed = true;
    return std::nullopt;
  }
  return (std::chrono::sys_days{ymd} - kNmeaEpoch).count();
}

}  // namespace detail

/// Validates framing and checksum, then extracts PVT fields from RMC or GGA.
/// Other well-formed sentences come back with status `ignored`.
inline NmeaParseResult nmea_parse(std::string_view sentence) {
  NmeaParseResult r;
  while (!sentence.empty() && (sentence.back() == '\n' || sentence.back() == '\r')) sentence.remove_suffix(1);
  if (sentence.size() < 4 || sentence.front() != '$' || sentence[sentence.size() - 3] != '*') return r;
  const std::string_view body = sentence.substr(1, sentence.size() - 4);
  for (char c : body) {
    if (c < 0x20 || c > 0x7E || c == '$' || c == '*') return r;
  }
  const int hi = detail::hex_value(sentence[sentence.size() - 2]);
  const int lo = detail::hex_value(sentence[sentence.size() - 1]);
  if (hi < 0 || lo < 0) return r;
  if (nmea_checksum(body) != static_cast<std::uint8_t>(hi * 16 + lo)) {
    r.status = NmeaStatus::checksum_error;
    return r;
  }

  const auto f = detail::split_fields(body);
  const std::string_view address = f[0];
  if (address.empty()) return r;
  if (address.front() == 'P') {
    r.status = NmeaStatus::ignored;
    r.type = std::string(address);
    return r;
  }
  if (address.size() != 5) return r;
  r.talker = std::string(address.substr(0, 2));
  r.type = std::string(address.substr(2));
  if (r.type != "RMC" && r.type != "GGA") {
    r.status = NmeaStatus::ignored;
    return r;
  }

  bool bad = false;
  if (r.type == "RMC") {
    if (f.size() < 10) return r;
    r.time_of_day_ms = detail::parse_nmea_time(f[1], bad);
    const auto lat = detail::parse_nmea_angle(f[3], f[4], 2, bad);
    const auto lon = detail::parse_nmea_angle(f[5], f[6], 3, bad);
    if (f[2] == "A" && lat && lon) r.fix.position = GeoPoint{*lat, *lon, std::nullopt};
    if (!f[7].empty()) {
      const auto kn = detail::parse_double(f[7]);
      if (kn && *kn >= 0.0) r.fix.speed_mps = *kn / kKnotsPerMps;
      else bad = true;
    }
    if (!f[8].empty()) {
      const auto c = detail::parse_double(f[8]);
      if (c) r.fix.heading_deg = normalize_heading(*c);
      else bad = true;
    }
    const auto days = detail::parse_nmea_date_days(f[9], bad);
    if (days && r.time_of_day_ms) r.fix.timestamp_ms = static_cast<TimeMs>(*days * 86400000 + *r.time_of_day_ms);
  } else {
    if (f.size() < 10) return r;
    r.time_of_day_ms = detail::parse_nmea_time(f[1], bad);
    const auto lat = detail::parse_nmea_angle(f[2], f[3], 2, bad);
    const auto lon = detail::parse_nmea_angle(f[4], f[5], 3, bad);
    const auto quality = f[6].empty() ? std::optional<double>{0.0} : detail::parse_double(f[6]);
    if (!quality) bad = true;
    if (quality && *quality != 0.0 && lat && lon) {
      r.fix.position = GeoPoint{*lat, *lon, std::nullopt};
      if (!f[9].empty()) {
        const auto alt = detail::parse_double(f[9]);
        if (alt) r.fix.position->altitude = *alt;
        else bad = true;
      }
    }
  }
  if (bad || (r.fix.position && !r.fix.position->valid())) {
    r.fix = {};
    r.status = NmeaStatus::framing_error;
    return r;
  }
  r.status = NmeaStatus::ok;
  return r;
}

/// Folds the fields present in `part` into `acc`. Altitude from GGA is kept
/// when a later RMC supplies the horizontal position only.
inline void merge_fix(PvtFix& acc, const PvtFix& part) {
  if (part.position) {
    const auto alt = acc.position ? acc.position->altitude : std::nullopt;
    acc.position = part.position;
    if (!acc.position->altitude) acc.position->altitude = alt;
  }
  if (part.speed_mps) acc.speed_mps = part.speed_mps;
  if (part.heading_deg) acc.heading_deg = part.heading_deg;
  if (part.timestamp_ms) acc.timestamp_ms = part.timestamp_ms;
}

}  // namespace minicits
