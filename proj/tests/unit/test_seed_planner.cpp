#include "stopt/scenario_io.hpp"
#include "stopt/seed_planner.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stopt;

namespace {

double segment_length(const PathSegment& s) {
  double l = 0.0;
  for (std::size_t i = 1; i < s.poses.size(); ++i) l += (s.poses[i].position() - s.poses[i - 1].position()).norm();
  return l;
}

void check_structure(const LabeledPath& p, const Pose2& start, const Pose2& goal) {
  REQUIRE_FALSE(p.segments.empty());
  const Pose2& first = p.segments.front().poses.front();
  const Pose2& last = p.segments.back().poses.back();
  CHECK((first.position() - start.position()).norm() < 1e-9);
  CHECK(std::abs(wrap_angle(first.theta - start.theta)) < 1e-9);
  CHECK((last.position() - goal.position()).norm() < 1e-9);
  CHECK(std::abs(wrap_angle(last.theta - goal.theta)) < 1e-9);
  for (std::size_t s = 0; s + 1 < p.segments.size(); ++s) {
    const Pose2& a = p.segments[s].poses.back();
    const Pose2& b = p.segments[s + 1].poses.front();
    CHECK((a.position() - b.position()).norm() < 1e-9);
    CHECK(p.segments[s].direction != p.segments[s + 1].direction);
  }
}

}  // namespace

TEST_CASE("drive_arc follows straight lines and circles") {
  const Pose2 a = drive_arc({1, 2, 0.5}, 3.0, 0.0);
  CHECK(a.x == doctest::Approx(1 + 3 * std::cos(0.5)));
  CHECK(a.y == doctest::Approx(2 + 3 * std::sin(0.5)));
  CHECK(a.theta == doctest::Approx(0.5));

  const Pose2 b = drive_arc({0, 0, 0}, std::numbers::pi * 5.0, 0.2);
  CHECK(b.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(b.y == doctest::Approx(10.0));
  CHECK(std::abs(wrap_angle(b.theta - std::numbers::pi)) < 1e-9);

  const Pose2 c = drive_arc(drive_arc({0.3, -0.2, 1.0}, 2.0, 0.16), -2.0, 0.16);
  CHECK(c.x == doctest::Approx(0.3));
  CHECK(c.y == doctest::Approx(-0.2));
  CHECK(c.theta == doctest::Approx(1.0));
}

TEST_CASE("pose_is_free checks the full footprint") {
  const VehicleGeometry g;
  const std::vector<BufferedObstacle> obs{make_buffered(ConvexShape::disk({4.3, 0.0}, 0.3), 0.2)};
  CHECK_FALSE(pose_is_free({0, 0, 0}, g, obs));
  CHECK(pose_is_free({0, 0, std::numbers::pi}, g, obs));
  CHECK(pose_is_free({0, 0, 0}, g, {}));
}

TEST_CASE("start equal to goal gives a trivial path") {
  const Pose2 p{1, 1, 0.2};
  const auto path = plan_seed_path(p, p, {}, VehicleGeometry{});
  REQUIRE(path.segments.size() == 1);
  CHECK(segment_length(path.segments[0]) < 1e-9);
  check_structure(path, p, p);
}

TEST_CASE("goal straight ahead gives one forward segment") {
  const Pose2 start{0, 0, 0};
  const Pose2 goal{5, 0, 0};
  const auto path = plan_seed_path(start, goal, {}, VehicleGeometry{});
  REQUIRE(path.segments.size() == 1);
  CHECK(path.segments[0].direction == Direction::Forward);
  CHECK(segment_length(path.segments[0]) == doctest::Approx(5.0).epsilon(1e-3));
  check_structure(path, start, goal);
}

TEST_CASE("goal straight behind gives one backward segment") {
  const Pose2 start{0, 0, 0};
  const Pose2 goal{-4, 0, 0};
  const auto path = plan_seed_path(start, goal, {}, VehicleGeometry{});
  REQUIRE(path.segments.size() == 1);
  CHECK(path.segments[0].direction == Direction::Backward);
  check_structure(path, start, goal);
}

TEST_CASE("planned paths respect the curvature limit and spacing") {
  const Pose2 start{0, 0, 0};
  const Pose2 goal{8, 6, std::numbers::pi / 2};
  SeedPlannerOptions opts;
  const auto path = plan_seed_path(start, goal, {}, VehicleGeometry{}, opts);
  check_structure(path, start, goal);
  for (const auto& seg : path.segments) {
    for (std::size_t i = 1; i < seg.poses.size(); ++i) {
      const double ds = (seg.poses[i].position() - seg.poses[i - 1].position()).norm();
      CHECK(ds <= opts.output_spacing + 1e-6);
      if (ds > 1e-6) CHECK(std::abs(wrap_angle(seg.poses[i].theta - seg.poses[i - 1].theta)) / ds <= opts.kappa_max + 1e-2);
    }
  }
}

TEST_CASE("perpendicular scenario needs a gear shift and stays collision free") {
  const auto sc = load_builtin_scenario("perpendicular");
  const auto obs = sc.buffered_obstacles();
  const auto path = plan_seed_path(sc.start, sc.goal, obs, sc.vehicle);
  CHECK(path.segments.size() >= 2);
  check_structure(path, sc.start, sc.goal);
  for (const auto& seg : path.segments) {
    for (const auto& p : seg.poses) CHECK(pose_is_free(p, sc.vehicle, obs));
  }
}

TEST_CASE("planning is deterministic") {
  const auto sc = load_builtin_scenario("reverse_angled");
  const auto obs = sc.buffered_obstacles();
  CHECK(plan_seed_path(sc.start, sc.goal, obs, sc.vehicle) == plan_seed_path(sc.start, sc.goal, obs, sc.vehicle));
}

TEST_CASE("unreachable goals raise a planner failure") {
  const VehicleGeometry g;
  const std::vector<BufferedObstacle> obs{
      make_buffered(ConvexShape::polygon({{9, -2}, {10, -2}, {10, 2}, {9, 2}}), 0.2),
      make_buffered(ConvexShape::polygon({{20, -2}, {21, -2}, {21, 2}, {20, 2}}), 0.2),
      make_buffered(ConvexShape::polygon({{9, -3}, {21, -3}, {21, -2}, {9, -2}}), 0.2),
      make_buffered(ConvexShape::polygon({{9, 2}, {21, 2}, {21, 3}, {9, 3}}), 0.2)};
  SeedPlannerOptions opts;
  opts.node_budget = 5000;
  CHECK_THROWS_AS(plan_seed_path({0, 0, 0}, {14, 0, 0}, obs, g, opts), PlannerFailure);
  // A goal pose in collision is rejected as well.
  CHECK_THROWS_AS(plan_seed_path({0, 0, 0}, {9.5, 0, 0}, obs, g, opts), PlannerFailure);
}
