#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "minicits/cam.hpp"
#include "minicits/geonet.hpp"

using namespace minicits;

namespace {

CoopAwarenessMsg random_cam(std::mt19937_64& rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  CoopAwarenessMsg m;
  m.station_id = static_cast<std::uint32_t>(pick(0, 0xFFFFFFFF));
  m.gen_delta_time = static_cast<std::uint16_t>(pick(0, 65535));
  m.latitude = static_cast<std::int32_t>(pick(-900000000, 900000001));
  m.longitude = static_cast<std::int32_t>(pick(-1800000000, 1800000001));
  m.altitude = static_cast<std::int32_t>(pick(-100000, 800001));
  m.heading = static_cast<std::uint16_t>(pick(0, 3601));
  m.speed = static_cast<std::uint16_t>(pick(0, 16383));
  m.drive_direction = static_cast<std::uint8_t>(pick(0, 2));
  m.station_type = static_cast<std::uint8_t>(pick(0, 255));
  return m;
}

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::validation;
}

// Fix `meters` due north of (44, 11) using the spherical radius the trigger uses.
PvtFix fix_north(double meters, double speed, double heading = 0.0) {
  const double lat = 44.0 + meters / 6371000.0 * 180.0 / M_PI;
  return PvtFix{GeoPoint{lat, 11.0, std::nullopt}, speed, heading, 0.0};
}

}  // namespace

TEST(CamCodec, DefaultLayout) {
  CoopAwarenessMsg m;
  m.latitude = 0;
  m.longitude = 0;
  const auto b = cam_encode(m);
  ASSERT_EQ(b.size(), 26u);
  EXPECT_EQ(b[0], 0x02);
  EXPECT_EQ(b[1], 0x02);
  // altitude sentinel 800001 = 0x000C3501 at offset 16
  EXPECT_EQ(b[16], 0x00);
  EXPECT_EQ(b[17], 0x0C);
  EXPECT_EQ(b[18], 0x35);
  EXPECT_EQ(b[19], 0x01);
  // heading 3601 = 0x0E11, speed 16383 = 0x3FFF, drive direction 2, station type 5
  EXPECT_EQ(b[20], 0x0E);
  EXPECT_EQ(b[21], 0x11);
  EXPECT_EQ(b[22], 0x3F);
  EXPECT_EQ(b[23], 0xFF);
  EXPECT_EQ(b[24], 2);
  EXPECT_EQ(b[25], 5);
}

TEST(CamCodec, LatitudeBytes) {
  CoopAwarenessMsg m;
  m.latitude = 440000000;  // 44.0000000 deg = 0x1A39DE00
  const auto b = cam_encode(m);
  EXPECT_EQ(b[8], 0x1A);
  EXPECT_EQ(b[9], 0x39);
  EXPECT_EQ(b[10], 0xDE);
  EXPECT_EQ(b[11], 0x00);
  const auto fix = PvtFix{GeoPoint{44.0, 11.0, std::nullopt}, std::nullopt, std::nullopt, 0.0};
  EXPECT_EQ(make_cam(1, fix, 0).latitude, 440000000);
}

TEST(CamCodec, NegativeLongitudeTwosComplement) {
  CoopAwarenessMsg m;
  m.longitude = -1;
  const auto b = cam_encode(m);
  EXPECT_EQ(b[12], 0xFF);
  EXPECT_EQ(b[15], 0xFF);
  EXPECT_EQ(cam_decode(b).longitude, -1);
}

TEST(CamCodec, RoundTrip10k) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const auto m = random_cam(rng);
    const auto bytes = cam_encode(m);
    ASSERT_EQ(cam_decode(bytes), m);
    ASSERT_EQ(cam_encode(cam_decode(bytes)), bytes);
  }
}

TEST(CamCodec, DecodeErrors) {
  std::vector<std::uint8_t> short_buf(25, 0);
  EXPECT_EQ(code_of([&] { cam_decode(short_buf); }), Errc::length);
  auto b = cam_encode(CoopAwarenessMsg{});
  b[0] = 1;
  EXPECT_EQ(code_of([&] { cam_decode(b); }), Errc::unsupported_message);
  b = cam_encode(CoopAwarenessMsg{});
  b[1] = 3;
  EXPECT_EQ(code_of([&] { cam_decode(b); }), Errc::unsupported_message);
  b = cam_encode(CoopAwarenessMsg{});
  b[20] = 0x0E;
  b[21] = 0x12;  // heading 3602
  try {
    cam_decode(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::range);
    EXPECT_EQ(e.field(), "heading");
  }
}

TEST(CamCodec, EncodeRangeNamesField) {
  CoopAwarenessMsg m;
  m.speed = 16384;
  try {
    cam_encode(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::range);
    EXPECT_EQ(e.field(), "speed");
  }
  m = {};
  m.latitude = 900000002;
  EXPECT_EQ(code_of([&] { cam_encode(m); }), Errc::range);
}

TEST(CamCodec, SentinelsMapToUnavailable) {
  CoopAwarenessMsg m;
  m.heading = 3601;
  const auto d = cam_decode(cam_encode(m));
  EXPECT_FALSE(cam_heading_deg(d));
  EXPECT_FALSE(cam_speed_mps(d));
  EXPECT_FALSE(cam_position(d));
  const auto e = make_cam(9, PvtFix{}, 0);
  EXPECT_EQ(e.latitude, kLatitudeUnavailable);
  EXPECT_EQ(e.heading, kHeadingUnavailable);
  EXPECT_EQ(e.speed, kSpeedUnavailable);
  EXPECT_EQ(e.drive_direction, kDriveDirectionUnavailable);
  EXPECT_EQ(e.altitude, kAltitudeUnavailable);
}

TEST(CamCodec, FuzzNeverCrashes) {
  std::mt19937_64 rng(5);
  int ok = 0, err = 0;
  for (int i = 0; i < 100000; ++i) {
    std::vector<std::uint8_t> b(26);
    if (i % 2) {
      b = cam_encode(random_cam(rng));
      b[rng() % 26] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    } else {
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    }
    try {
      cam_decode(b);
      ++ok;
    } catch (const Error&) {
      ++err;
    }
  }
  EXPECT_EQ(ok + err, 100000);
  EXPECT_GT(ok, 0);
}

TEST(CamCodec, PositionQuantization) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-179.0, 179.0);
  for (int i = 0; i < 10000; ++i) {
    PvtFix f{GeoPoint{lat(rng), lon(rng), std::nullopt}, 1.0, 10.0, 0.0};
    const auto p = *cam_position(cam_decode(cam_encode(make_cam(1, f, 0))));
    ASSERT_LE(std::fabs(p.latitude - f.position->latitude), 0.5e-7 + 1e-15);
    ASSERT_LE(std::fabs(p.longitude - f.position->longitude), 0.5e-7 + 1e-15);
  }
}

TEST(GenDeltaTime, Wraps) {
  EXPECT_EQ(gen_delta_time(0), 0);
  EXPECT_EQ(gen_delta_time(65536), 0);
  EXPECT_EQ(gen_delta_time(65537), 1);
  EXPECT_THROW(gen_delta_time(-1), Error);
}

TEST(CamTrigger, StationaryEvery1000ms) {
  CamGenerationState s;
  const PvtFix still = fix_north(0.0, 0.0);
  std::vector<TimeMs> tx;
  for (TimeMs t = 0; t <= 10000; t += 10) {
    const auto d = cam_trigger(s, still, t, 60.0);
    if (d.transmit) tx.push_back(t);
    s = d.next;
  }
  ASSERT_EQ(tx.size(), 11u);
  for (std::size_t i = 0; i < tx.size(); ++i) EXPECT_EQ(tx[i], 1000.0 * static_cast<double>(i));
}

TEST(CamTrigger, MinIntervalGate) {
  CamGenerationState s = cam_trigger({}, fix_north(0, 10.0, 0.0), 0, 0).next;
  EXPECT_FALSE(cam_trigger(s, fix_north(0, 10.0, 180.0), 50, 0).transmit);
  EXPECT_TRUE(cam_trigger(s, fix_north(0, 10.0, 180.0), 100, 0).transmit);
  // DCC interval above T_GenCamMin takes over the gate.
  EXPECT_FALSE(cam_trigger(s, fix_north(0, 10.0, 180.0), 150, 200).transmit);
  EXPECT_TRUE(cam_trigger(s, fix_north(0, 10.0, 180.0), 200, 200).transmit);
}

TEST(CamTrigger, EachDynamicsThreshold) {
  const CamGenerationState s = cam_trigger({}, fix_north(0, 5.0, 10.0), 0, 0).next;
  EXPECT_FALSE(cam_trigger(s, fix_north(0, 5.0, 13.9), 200, 0).transmit);
  EXPECT_EQ(cam_trigger(s, fix_north(0, 5.0, 14.0), 200, 0).cause, CamTriggerCause::dynamics);
  EXPECT_EQ(cam_trigger(s, fix_north(0, 5.0, 6.0), 200, 0).cause, CamTriggerCause::dynamics);
  EXPECT_FALSE(cam_trigger(s, fix_north(3.99, 5.0, 10.0), 200, 0).transmit);
  EXPECT_EQ(cam_trigger(s, fix_north(4.01, 5.0, 10.0), 200, 0).cause, CamTriggerCause::dynamics);
  EXPECT_FALSE(cam_trigger(s, fix_north(0, 5.49, 10.0), 200, 0).transmit);
  EXPECT_EQ(cam_trigger(s, fix_north(0, 5.5, 10.0), 200, 0).cause, CamTriggerCause::dynamics);
  // Heading wraps through north.
  const CamGenerationState n = cam_trigger({}, fix_north(0, 5.0, 358.0), 0, 0).next;
  EXPECT_FALSE(cam_trigger(n, fix_north(0, 5.0, 1.0), 200, 0).transmit);
  EXPECT_TRUE(cam_trigger(n, fix_north(0, 5.0, 2.0), 200, 0).transmit);
}

TEST(CamTrigger, DynamicIntervalAndCountdown) {
  CamGenerationState s = cam_trigger({}, fix_north(0, 10.0), 0, 0).next;
  // Dynamics trigger after 300 ms sets T_GenCam to 300 and arms N_GenCam = 3.
  auto d = cam_trigger(s, fix_north(0, 10.0, 90.0), 300, 0);
  ASSERT_EQ(d.cause, CamTriggerCause::dynamics);
  EXPECT_EQ(d.next.t_gen_cam_ms, 300.0);
  EXPECT_EQ(d.next.n_gen_cam_countdown, 3);
  s = d.next;
  // Then the vehicle holds still: three timer CAMs at the dynamic interval, then back to 1000 ms.
  const PvtFix same = fix_north(0, 10.0, 90.0);
  std::vector<TimeMs> tx;
  for (TimeMs t = 310; t <= 3500; t += 10) {
    d = cam_trigger(s, same, t, 0);
    if (d.transmit) {
      EXPECT_EQ(d.cause, CamTriggerCause::timer);
      tx.push_back(t);
    }
    s = d.next;
  }
  ASSERT_GE(tx.size(), 4u);
  EXPECT_EQ(tx[0], 600.0);
  EXPECT_EQ(tx[1], 900.0);
  EXPECT_EQ(tx[2], 1200.0);
  EXPECT_EQ(tx[3], 2200.0);
  EXPECT_EQ(s.t_gen_cam_ms, 1000.0);
}

TEST(CamTrigger, ConstantSpeedPeriod) {
  // Straight northbound run; the expected period is the first 10 ms step at
  // which the travelled distance reaches 4 m.
  for (double v : {4.5, 6.0, 8.5, 12.0, 15.0}) {
    CamGenerationState s;
    std::vector<TimeMs> tx;
    for (TimeMs t = 0; t <= 20000; t += 10) {
      const auto d = cam_trigger(s, fix_north(v * t / 1000.0, v), t, 60.0);
      if (d.transmit) tx.push_back(t);
      s = d.next;
    }
    const double expected = std::ceil(4.0 / v * 100.0 - 1e-9) * 10.0;
    const double mean = (tx.back() - tx.front()) / static_cast<double>(tx.size() - 1);
    EXPECT_NEAR(mean, std::max(expected, 100.0), 10.0) << v;
    EXPECT_NEAR(mean / 1000.0, 4.0 / v, 0.011) << v;
  }
}

TEST(CamTrigger, SpacingBounds) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double dcc : {0.0, 60.0, 250.0}) {
    CamGenerationState s;
    TimeMs last = -1;
    double heading = 0.0, pos = 0.0, speed = 3.0;
    for (TimeMs t = 0; t <= 30000; t += 10) {
      if (u(rng) < 0.05) heading += 10.0 * u(rng);
      if (u(rng) < 0.02) speed = 10.0 * u(rng);
      pos += speed * 0.01;
      const auto d = cam_trigger(s, fix_north(pos, speed, heading), t, dcc);
      if (d.transmit) {
        if (last >= 0) {
          ASSERT_GE(t - last, std::max(100.0, dcc));
          ASSERT_LE(t - last, 1000.0 + 10.0);
        }
        last = t;
      }
      s = d.next;
      ASSERT_GE(s.t_gen_cam_ms, 100.0);
      ASSERT_LE(s.t_gen_cam_ms, 1000.0);
      ASSERT_LE(s.n_gen_cam_countdown, 3);
    }
  }
}

namespace {

GnShbFrame random_gn(std::mt19937_64& rng, std::size_t payload_len) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  GnShbFrame f;
  f.lifetime = static_cast<std::uint8_t>(pick(0, 255));
  f.traffic_class = static_cast<std::uint8_t>(pick(0, 255));
  f.source_address = rng();
  f.timestamp = static_cast<std::uint32_t>(rng());
  f.latitude = static_cast<std::int32_t>(pick(-900000000, 900000001));
  f.longitude = static_cast<std::int32_t>(pick(-1800000000, 1800000001));
  f.speed = static_cast<std::uint16_t>(pick(0, 16383));
  f.heading = static_cast<std::uint16_t>(pick(0, 3601));
  f.btp_dest_port = static_cast<std::uint16_t>(pick(0, 65535));
  f.payload.resize(payload_len);
  for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
  return f;
}

}  // namespace

TEST(GeoNet, CamFrameIs70Bytes) {
  GnShbFrame f;
  f.payload = cam_encode(CoopAwarenessMsg{});
  const auto b = gn_encode(f);
  ASSERT_EQ(b.size(), 70u);
  EXPECT_EQ(b[0], 0x11);   // version 1, next header common
  EXPECT_EQ(b[3], 1);      // remaining hop limit
  EXPECT_EQ(b[4], 0x20);   // BTP-B
  EXPECT_EQ(b[5], 0x50);   // SHB
  EXPECT_EQ(b[8], 0);
  EXPECT_EQ(b[9], 26);     // payload length
  EXPECT_EQ(b[10], 1);     // max hop limit
  EXPECT_EQ(b[40], 0x07);  // port 2001 = 0x07D1
  EXPECT_EQ(b[41], 0xD1);
  EXPECT_EQ(std::vector<std::uint8_t>(b.begin() + 44, b.end()), f.payload);
}

TEST(GeoNet, RoundTripAndLengthField) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto f = random_gn(rng, static_cast<std::size_t>(rng() % 200));
    const auto b = gn_encode(f);
    ASSERT_EQ(b.size(), 44 + f.payload.size());
    ASSERT_EQ((b[8] << 8) | b[9], static_cast<int>(f.payload.size()));
    ASSERT_EQ(gn_decode(b), f);
    ASSERT_EQ(gn_encode(gn_decode(b)), b);
  }
}

TEST(GeoNet, Errors) {
  std::vector<std::uint8_t> b43(43, 0);
  EXPECT_EQ(code_of([&] { gn_decode(b43); }), Errc::length);

  GnShbFrame f;
  f.payload.assign(26, 0);
  auto b = gn_encode(f);
  b[9] = 27;
  EXPECT_EQ(code_of([&] { gn_decode(b); }), Errc::inconsistent_length);

  b = gn_encode(f);
  b[0] = 0x21;
  EXPECT_EQ(code_of([&] { gn_decode(b); }), Errc::unsupported_version);
  b = gn_encode(f);
  b[5] = 0x40;
  EXPECT_EQ(code_of([&] { gn_decode(b); }), Errc::unsupported_type);
  b = gn_encode(f);
  b[5] = 0x51;
  EXPECT_EQ(code_of([&] { gn_decode(b); }), Errc::unsupported_type);

  f.payload.assign(1401, 0);
  EXPECT_EQ(code_of([&] { gn_encode(f); }), Errc::size);
  f.payload.assign(1400, 0);
  EXPECT_EQ(gn_encode(f).size(), 1444u);
}

TEST(GeoNet, FuzzNeverCrashes) {
  std::mt19937_64 rng(13);
  GnShbFrame base;
  base.payload = cam_encode(CoopAwarenessMsg{});
  const auto valid = gn_encode(base);
  int decoded = 0;
  for (int i = 0; i < 100000; ++i) {
    std::vector<std::uint8_t> b;
    if (i % 2) {
      b = valid;
      const int flips = 1 + static_cast<int>(rng() % 4);
      for (int k = 0; k < flips; ++k) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
      if (rng() % 4 == 0) b.resize(rng() % (b.size() + 1));
    } else {
      b.resize(rng() % 120);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    }
    try {
      gn_decode(b);
      ++decoded;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(decoded, 0);
}
