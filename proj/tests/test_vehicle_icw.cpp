#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "minicits/icw.hpp"
#include "minicits/vehicle.hpp"

using namespace minicits;

namespace {

Path canonical_oval(double spacing = 0.05) { return build_oval(4.0, 2.5, 1.25, spacing); }

double stadium_perimeter(double l, double w, double r) { return 2.0 * (l - 2 * r) + 2.0 * (w - 2 * r) + 2.0 * M_PI * r; }

}  // namespace

TEST(Oval, SpacingAndClosure) {
  const auto p = canonical_oval(0.1);
  ASSERT_TRUE(p.closed());
  const auto& pts = p.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double gap = (pts[(i + 1) % pts.size()] - pts[i]).norm();
    ASSERT_GE(gap, 0.05) << i;
    ASSERT_LE(gap, 0.15) << i;
  }
  EXPECT_LE((pts.front() - pts.back()).norm(), 0.1 + 1e-9);
  EXPECT_NEAR(pts.front().x, 0.0, 1e-12);
  EXPECT_NEAR(pts.front().y, -1.25, 1e-12);
}

TEST(Oval, PerimeterMatchesStadium) {
  for (auto [l, w, r] : {std::tuple{4.0, 2.5, 1.25}, std::tuple{6.0, 3.0, 0.5}, std::tuple{3.0, 3.0, 1.0}}) {
    const auto p = build_oval(l, w, r, 0.05);
    EXPECT_NEAR(p.length() / stadium_perimeter(l, w, r), 1.0, 0.01);
  }
}

TEST(Oval, CounterClockwise) {
  const auto& pts = canonical_oval().points();
  double area2 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  EXPECT_GT(area2, 0.0);
  // Stadium area: rectangle core plus a full circle of the corner radius.
  EXPECT_NEAR(area2 / 2.0, (4.0 - 2.5) * 2.5 + M_PI * 1.25 * 1.25, 0.02);
}

TEST(Oval, InfeasibleGeometry) {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  EXPECT_EQ(code([] { build_oval(4.0, 2.5, 1.3, 0.05); }), Errc::geometry);
  EXPECT_EQ(code([] { build_oval(0.0, 2.5, 1.0, 0.05); }), Errc::geometry);
  EXPECT_EQ(code([] { build_oval(4.0, 2.5, 1.0, 0.0); }), Errc::geometry);
  EXPECT_EQ(code([] { Path::make({{0, 0}, {1, 0}}, true); }), Errc::geometry);
  EXPECT_EQ(code([] { Path::make({{0, 0}, {0, 0}, {1, 1}}, true); }), Errc::geometry);
}

TEST(PathJson, RoundTrip) {
  const auto p = Path::make({{0, 0}, {1, 0}, {1, 1}}, true);
  const auto j = path_to_json(p);
  EXPECT_EQ(j.dump(), "[[0.0,0.0],[1.0,0.0],[1.0,1.0]]");
  const auto q = path_from_json(j, true);
  EXPECT_EQ(q.points(), p.points());
  EXPECT_DOUBLE_EQ(q.length(), 2.0 + std::sqrt(2.0));
  EXPECT_THROW(path_from_json(nlohmann::json::parse("[[0,0],[1]]"), false), Error);
}

TEST(Lookahead, StraightSegment) {
  const auto p = Path::make({{0, 0}, {10, 0}}, false);
  const auto r = lookahead_point(p, {2.0, 0.0}, 0.8);
  EXPECT_FALSE(r.fallback);
  EXPECT_NEAR(r.point.x, 2.8, 1e-12);
  EXPECT_NEAR(r.point.y, 0.0, 1e-12);
  EXPECT_NEAR(r.arc_s, 2.8, 1e-12);
}

TEST(Lookahead, FarFromPathFallsBack) {
  const auto p = Path::make({{0, 0}, {10, 0}}, false);
  const auto r = lookahead_point(p, {3.0, 2.0}, 0.8);
  EXPECT_TRUE(r.fallback);
  EXPECT_NEAR(r.point.x, 3.0, 1e-12);
  EXPECT_NEAR(r.point.y, 0.0, 1e-12);
}

TEST(Lookahead, CanonicalOvalDenseSampling) {
  const auto path = canonical_oval();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> s_dist(0.0, path.length()), off(-0.1, 0.1);
  const double ld = 0.8;
  for (int i = 0; i < 500; ++i) {
    const double s0 = s_dist(rng);
    const Vec2 t = path.tangent_at(s0);
    const Vec2 car = path.point_at(s0) + Vec2{-t.y, t.x} * off(rng);
    const auto r = lookahead_point(path, car, ld);
    ASSERT_FALSE(r.fallback);
    const double d = (r.point - car).norm();
    ASSERT_GE(d, 0.99 * ld);
    ASSERT_LE(d, 1.01 * ld);
    // Oracle: walk the path in 1 mm steps from the projection until the car-distance reaches Ld.
    const double s_proj = path.project(car).arc_s;
    double s = s_proj;
    while ((path.point_at(s) - car).norm() < ld) s += 0.001;
    ASSERT_LE((path.point_at(s) - r.point).norm(), 0.003) << i;
  }
}

TEST(PurePursuit, StraightAheadAndSymmetry) {
  BicycleState s;
  EXPECT_EQ(pure_pursuit_steer(s, {2.0, 0.0}, 0.41).steer_rad, 0.0);
  // Target at lateral 1 m, distance 2 m: kappa = 2*1/4 = 0.5, steer = atan(0.33*0.5).
  const Vec2 target{std::sqrt(3.0), 1.0};
  const auto left = pure_pursuit_steer(s, target, 0.41);
  EXPECT_NEAR(left.steer_rad, std::atan(0.165), 1e-12);
  EXPECT_NEAR(left.steer_rad, 0.1636, 1e-4);
  EXPECT_NEAR(pure_pursuit_steer(s, {target.x, -target.y}, 0.41).steer_rad, -left.steer_rad, 1e-15);
}

TEST(PurePursuit, RotatedFrame) {
  BicycleState s{1.0, 2.0, M_PI / 2, 1.0, 0.33};  // facing +y
  // Lateral 1 m to the left of +y is -x.
  EXPECT_NEAR(pure_pursuit_steer(s, {0.0, 2.0 + std::sqrt(3.0)}, 0.41).steer_rad, std::atan(0.165), 1e-12);
}

TEST(PurePursuit, ClampAndDegenerate) {
  BicycleState s;
  EXPECT_EQ(pure_pursuit_steer(s, {0.0, 0.3}, 0.41).steer_rad, 0.41);
  EXPECT_EQ(pure_pursuit_steer(s, {0.0, -0.3}, 0.41).steer_rad, -0.41);
  const auto d = pure_pursuit_steer(s, {0.0, 0.0}, 0.41);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.steer_rad, 0.0);
}

TEST(Bicycle, StraightStep) {
  BicycleState s{0, 0, 0, 1.0, 0.33};
  const auto n = bicycle_step(s, 0.0, 0.05, 1.0);
  EXPECT_NEAR(n.x, 0.05, 1e-15);
  EXPECT_EQ(n.y, 0.0);
  EXPECT_EQ(n.theta, 0.0);
  EXPECT_EQ(n.v, 1.0);
  auto m = s;
  for (int i = 0; i < 2; ++i) m = bicycle_step(m, 0.0, 0.05, 1.0);
  EXPECT_NEAR(m.x, 0.1, 1e-15);
}

TEST(Bicycle, StationaryOnlySpeedLags) {
  BicycleState s{1, 2, 0.5, 0.0, 0.33};
  const auto n = bicycle_step(s, 0.3, 0.01, 1.0, 0.3);
  EXPECT_EQ(n.x, 1.0);
  EXPECT_EQ(n.y, 2.0);
  EXPECT_EQ(n.theta, 0.5);
  EXPECT_NEAR(n.v, 1.0 - std::exp(-0.01 / 0.3), 1e-15);
}

TEST(Bicycle, StepRange) {
  BicycleState s;
  EXPECT_THROW(bicycle_step(s, 0, 0.0, 1), Error);
  EXPECT_THROW(bicycle_step(s, 0, 0.051, 1), Error);
  EXPECT_NO_THROW(bicycle_step(s, 0, 0.05, 1));
}

TEST(Bicycle, ConstantSteerClosesCircle) {
  const double delta = 0.3, L = 0.33, v = 1.0, dt = 0.001;
  const double radius = L / std::tan(delta);
  BicycleState s{0, 0, 0, v, L};
  const int steps = static_cast<int>(std::llround(2 * M_PI * radius / v / dt));
  double max_r_err = 0;
  for (int i = 0; i < steps; ++i) {
    s = bicycle_step(s, delta, dt, v);
    // Circle centre is (0, R) for a left turn from the origin facing +x.
    max_r_err = std::max(max_r_err, std::fabs(std::hypot(s.x, s.y - radius) - radius) / radius);
  }
  EXPECT_LT(max_r_err, 0.01);
  EXPECT_LT(std::hypot(s.x, s.y) / (2 * M_PI * radius), 0.01);
}

TEST(Bicycle, SteerNeverChangesSpeed) {
  BicycleState a{0, 0, 0, 0.4, 0.33}, b = a;
  for (int i = 0; i < 100; ++i) {
    a = bicycle_step(a, 0.0, 0.01, 1.0);
    b = bicycle_step(b, 0.4, 0.01, 1.0);
    ASSERT_EQ(a.v, b.v);
  }
}

TEST(Vehicle, CrossTrackAfterFirstLap) {
  const auto path = canonical_oval();
  PurePursuitVehicle car(path, PurePursuitConfig{}, 5.427, 0.33);
  const double dt = 0.01;
  const int lap_steps = static_cast<int>(path.length() / 1.0 / dt) + 1;
  double worst = 0.0;
  for (int i = 0; i < 3 * lap_steps; ++i) {
    car.step(dt);
    ASSERT_LE(std::fabs(car.last_steer()), 0.41);
    if (i >= lap_steps) worst = std::max(worst, car.cross_track_error());
  }
  EXPECT_LT(worst, 0.2);
}

TEST(Vehicle, HeadingConvention) {
  EXPECT_NEAR(theta_to_heading_deg(0.0), 90.0, 1e-12);
  EXPECT_NEAR(theta_to_heading_deg(M_PI / 2), 0.0, 1e-12);
  EXPECT_NEAR(theta_to_heading_deg(M_PI), 270.0, 1e-12);
  EXPECT_NEAR(heading_deg_to_theta(180.0), -M_PI / 2, 1e-12);
  // Start at the top middle of the CCW oval: driving west.
  PurePursuitVehicle car(canonical_oval(), PurePursuitConfig{}, 5.427, 0.33);
  EXPECT_NEAR(car.pose(0).heading_deg, 270.0, 0.5);
  EXPECT_NEAR(car.pose(0).y, 1.25, 1e-3);
}

namespace {

const ScenarioFrame kFrame{{44.0, 11.0, std::nullopt}, 10.0};

// LDM entry at virtual offset (east, north) from the frame origin.
LdmEntry remote_at(double east, double north, std::optional<double> speed, std::optional<double> heading,
                   std::uint32_t id = 7) {
  LdmEntry e;
  e.station_id = id;
  e.position.latitude = 44.0 + north / 111320.0;
  e.position.longitude = 11.0 + east / (111320.0 * std::cos(44.0 * M_PI / 180.0));
  e.speed_mps = speed;
  e.heading_deg = heading;
  return e;
}

}  // namespace

TEST(Tti, StraightApproach) {
  IntersectionZone zone{{0.0, 0.0}, 7.5};
  const auto r = time_to_intersection(remote_at(-50.0, 0.0, 10.0, 90.0), zone, kFrame);
  ASSERT_EQ(r.kind, TtiKind::approaching);
  EXPECT_NEAR(r.tti_s, 5.0, 1e-6);
  EXPECT_NEAR(r.distance_m, 50.0, 1e-6);
}

TEST(Tti, ZoneCentreIsScaled) {
  IntersectionZone zone{{0.0, -1.25}, 7.5};  // local meters, 12.5 m south in virtual meters
  const auto r = time_to_intersection(remote_at(0.0, 12.5, 10.0, 180.0), zone, kFrame);
  ASSERT_EQ(r.kind, TtiKind::approaching);
  EXPECT_NEAR(r.tti_s, 2.5, 1e-6);
}

TEST(Tti, OffsetRayUsesClosestApproach) {
  IntersectionZone zone{{0.0, 0.0}, 7.5};
  // Passing 6 m north of the centre: closest approach 40 m along the ray.
  auto r = time_to_intersection(remote_at(-40.0, 6.0, 8.0, 90.0), zone, kFrame);
  ASSERT_EQ(r.kind, TtiKind::approaching);
  EXPECT_NEAR(r.tti_s, 5.0, 1e-6);
  r = time_to_intersection(remote_at(-40.0, 8.0, 8.0, 90.0), zone, kFrame);
  EXPECT_EQ(r.kind, TtiKind::receding);
}

TEST(Tti, RecedingAndStationary) {
  IntersectionZone zone{{0.0, 0.0}, 7.5};
  EXPECT_EQ(time_to_intersection(remote_at(-50.0, 0.0, 10.0, 270.0), zone, kFrame).kind, TtiKind::receding);
  EXPECT_EQ(time_to_intersection(remote_at(-50.0, 0.0, 0.05, 90.0), zone, kFrame).kind, TtiKind::receding);
  EXPECT_EQ(time_to_intersection(remote_at(-50.0, 0.0, 0.0, 90.0), zone, kFrame).kind, TtiKind::receding);
  EXPECT_EQ(time_to_intersection(remote_at(-50.0, 0.0, std::nullopt, 90.0), zone, kFrame).kind,
            TtiKind::insufficient_data);
  EXPECT_EQ(time_to_intersection(remote_at(-50.0, 0.0, 10.0, std::nullopt), zone, kFrame).kind,
            TtiKind::insufficient_data);
}

TEST(Icw, EmptyLdmNoEvents) {
  IcwEvaluator ev;
  EXPECT_TRUE(ev.evaluate(LocalPose{}, {}, IntersectionZone{}, kFrame, IcwConfig{}, 0).empty());
}

TEST(Icw, EgoFarAwayNoEvents) {
  IcwEvaluator ev;
  LocalPose ego;
  ego.x = 10.0;  // 100 m virtual from the zone
  std::vector<LdmQueryResult> res{{remote_at(-20.0, 0.0, 10.0, 90.0), 0.0, 0.0}};
  for (TimeMs t = 0; t < 5000; t += 100) {
    EXPECT_TRUE(ev.evaluate(ego, res, IntersectionZone{}, kFrame, IcwConfig{}, t).empty());
  }
}

TEST(Icw, RaiseHoldClearAlternate) {
  IcwEvaluator ev;
  LocalPose ego;
  ego.y = -1.5;  // 15 m virtual from the zone centre
  std::vector<LdmQueryResult> near{{remote_at(-30.0, 0.0, 10.0, 90.0), 0.0, 0.0}};
  std::vector<LdmQueryResult> away{{remote_at(-30.0, 0.0, 10.0, 270.0), 0.0, 0.0}};
  std::vector<WarningEvent> all;
  auto feed = [&](const std::vector<LdmQueryResult>& r, TimeMs t) {
    for (const auto& e : ev.evaluate(ego, r, IntersectionZone{}, kFrame, IcwConfig{}, t)) all.push_back(e);
  };
  feed(near, 0);
  feed(near, 100);  // steady state: nothing new
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].state, WarningState::raised);
  EXPECT_NEAR(all[0].tti_s, 3.0, 1e-6);
  EXPECT_TRUE(ev.active(7));
  feed(away, 200);
  feed(away, 1000);
  EXPECT_EQ(all.size(), 1u);  // still inside hold (last true at 100)
  feed(away, 1100);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[1].state, WarningState::cleared);
  EXPECT_EQ(all[1].time_ms, 1100.0);
  feed(near, 1200);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[2].state, WarningState::raised);
  // Remote disappearing from the LDM also clears after the hold.
  feed({}, 1500);
  feed({}, 2200);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[3].state, WarningState::cleared);
  EXPECT_EQ(ev.active_count(), 0u);
}

TEST(Icw, ThresholdBoundary) {
  LocalPose ego;
  IcwConfig cfg;
  IcwEvaluator a, b;
  EXPECT_EQ(a.evaluate(ego, {{remote_at(-49.0, 0.0, 10.0, 90.0), 0, 0}}, IntersectionZone{}, kFrame, cfg, 0).size(), 1u);
  EXPECT_TRUE(b.evaluate(ego, {{remote_at(-51.0, 0.0, 10.0, 90.0), 0, 0}}, IntersectionZone{}, kFrame, cfg, 0).empty());
}
