#include "generators.hpp"
#include "oracles.hpp"
#include "stopt/corridor.hpp"
#include "stopt/gjk.hpp"
#include "stopt/trajectory.hpp"

#include <doctest.h>

#include <cmath>

using namespace stopt;
using stopt::testing::Rng;

namespace {

Ellipse axis_ellipse(double alpha, double beta, const Vec2& center = Vec2::Zero()) {
  Ellipse e;
  e.semi_major = alpha;
  e.semi_minor = beta;
  e.center = center;
  return e;
}

SegmentedTrajectory single_segment(const std::vector<State>& states) {
  SegmentedTrajectory t;
  Segment s;
  s.states = states;
  s.controls.assign(states.empty() ? 0 : states.size() - 1, Control::Zero());
  t.segments.push_back(s);
  return t;
}

// Expansion factor at which the scaled ellipse touches the half-space boundary.
double touching_scale(const Ellipse& e, const HalfSpace& h) {
  return (h.offset - h.normal.dot(e.center)) / (e.shape_matrix() * h.normal).norm();
}

}  // namespace

TEST_CASE("initial ellipse without obstacles") {
  const VehicleGeometry g;
  const auto e = initial_ellipse(State::Zero(), g, {});
  CHECK((e.center - Vec2(1.4235, 0.0)).norm() < 1e-12);
  CHECK(e.semi_major / e.semi_minor == doctest::Approx(4.933 / 1.87).epsilon(1e-12));
  CHECK((e.rotation - Mat2::Identity()).norm() < 1e-15);
  // The footprint fits inside.
  for (const auto& c : corners(State::Zero(), g)) CHECK(e.contains(c, 1e-12));
}

TEST_CASE("a wall ahead shortens the major axis until it clears") {
  const VehicleGeometry g;
  const std::vector<BufferedObstacle> wall{
      make_buffered(ConvexShape::polygon({{5.0, -5}, {6.0, -5}, {6.0, 5}, {5.0, 5}}), 0.2)};
  const auto free = initial_ellipse(State::Zero(), g, {});
  const auto e = initial_ellipse(State::Zero(), g, wall);
  const double face = 4.8 - e.center.x();
  CHECK(e.semi_major < free.semi_major);
  CHECK(e.semi_major < face);
  CHECK(point_distance(wall[0], e.center + e.semi_major * Vec2::UnitX()).distance > 0.0);
  // Bisection result backed off by the configured factor.
  CHECK(e.semi_major == doctest::Approx(CorridorOptions{}.axis_backoff * face).epsilon(1e-6));
}

TEST_CASE("shrinking puts the obstacle point on the boundary") {
  const Ellipse e = axis_ellipse(2.0, 1.0);
  const std::vector<BufferedObstacle> tri{
      make_buffered(ConvexShape::polygon({{1.0, 0.5}, {1.5, 3.0}, {0.5, 3.0}}), 0.0)};
  const auto s = shrink_ellipse(e, tri);
  CHECK(s.semi_major == 2.0);
  CHECK(s.semi_minor == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-6));
}

TEST_CASE("an obstacle already outside leaves the ellipse unchanged") {
  const Ellipse e = axis_ellipse(2.0, 1.0);
  const std::vector<BufferedObstacle> sq{
      make_buffered(ConvexShape::polygon({{3, -1}, {4, -1}, {4, 1}, {3, 1}}), 0.0)};
  const auto s = shrink_ellipse(e, sq);
  CHECK(s.semi_minor == 1.0);
  CHECK(s.semi_major == 2.0);
}

TEST_CASE("shrinking is monotone and clears every obstacle in inverse space") {
  Rng rng(41);
  int checked = 0;
  while (checked < 100) {
    Ellipse e = axis_ellipse(rng.uniform(1.5, 3.0), 1.0, rng.point(1.0));
    e.rotation = Eigen::Rotation2Dd(rng.uniform(-3, 3)).toRotationMatrix();
    e.semi_minor = e.semi_major * rng.uniform(0.3, 1.0);
    std::vector<BufferedObstacle> obs;
    for (int k = 0; k < 2; ++k) {
      const auto s = testing::random_shape(rng, e.center + rng.unit() * rng.uniform(1.0, 4.0), 0.6, 0.2);
      obs.push_back(s.obstacle());
    }
    Ellipse step = e;
    bool ok = true;
    double previous = e.semi_minor;
    try {
      for (const auto& o : obs) {
        step = shrink_ellipse(step, std::span(&o, 1));
        CHECK(step.semi_minor <= previous);
        previous = step.semi_minor;
      }
    } catch (const CorridorInfeasible&) {
      ok = false;  // obstacle crosses the major axis: not a valid instance
    }
    if (!ok) continue;
    ++checked;
    const auto all = shrink_ellipse(e, obs);
    CHECK(all.semi_minor == doctest::Approx(step.semi_minor).epsilon(1e-12));
    for (const auto& o : obs) {
      const InverseSpaceObstacle inv(o, all.map());
      const auto r = closest_point_to_origin(inv, inv.seed_point());
      CHECK_FALSE(r.contains_origin);
      CHECK(r.distance >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("tangent half-space at an axis point") {
  const auto h = tangent_halfspace(axis_ellipse(2.0, 1.0), {4.0, 0.0});
  CHECK((h.normal - Vec2(1, 0)).norm() < 1e-15);
  CHECK(std::abs(h.offset - 4.0) < 1e-15);
  CHECK(std::abs(touching_scale(axis_ellipse(2.0, 1.0), h) - 2.0) < 1e-15);
}

TEST_CASE("three obstacles around the ellipse give three half-spaces") {
  const Ellipse e = axis_ellipse(2.0, 1.0);
  std::vector<BufferedObstacle> obs{
      make_buffered(ConvexShape::polygon({{2.5, -0.5}, {3.5, -0.5}, {3.5, 0.5}, {2.5, 0.5}}), 0.2),
      make_buffered(ConvexShape::ellipse({0.0, 2.5}, {1.0, 0.5}, 0.0), 0.2),
      make_buffered(ConvexShape::polygon({{-4.0, -1.0}, {-3.0, -2.0}, {-2.5, 0.0}, {-3.0, 1.0}, {-4.0, 1.0}}), 0.2)};
  const auto hs = generate_halfspaces(e, obs);
  CHECK(hs.size() == 3);
  for (const auto& h : hs) {
    CHECK(std::abs(h.normal.norm() - 1.0) < 1e-12);
    CHECK(h.violation(e.center) < 0.0);
  }
}

TEST_CASE("an obstacle behind another is discarded") {
  const Ellipse e = axis_ellipse(1.0, 1.0);
  std::vector<BufferedObstacle> obs{
      make_buffered(ConvexShape::polygon({{2, -3}, {2.5, -3}, {2.5, 3}, {2, 3}}), 0.0),
      make_buffered(ConvexShape::disk({5, 0}, 0.5), 0.0)};
  CHECK(generate_halfspaces(e, obs).size() == 1);
}

TEST_CASE("half-spaces are tangent to the expanded ellipse") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Ellipse e = axis_ellipse(rng.uniform(1.0, 2.0), 1.0, rng.point(1.0));
    e.semi_minor = e.semi_major * rng.uniform(0.3, 1.0);
    e.rotation = Eigen::Rotation2Dd(rng.uniform(-3, 3)).toRotationMatrix();
    std::vector<BufferedObstacle> obs;
    for (int k = 0; k < 4; ++k) {
      obs.push_back(testing::random_shape(rng, e.center + rng.unit() * rng.uniform(3.0, 6.0), 0.8, 0.3).obstacle());
    }
    const auto hs = generate_halfspaces(e, obs);
    CHECK_FALSE(hs.empty());
    for (const auto& h : hs) {
      const double gamma = touching_scale(e, h);
      REQUIRE(gamma > 1.0);
      const Ellipse grown = e.scaled(gamma);
      double top = -1e300;
      for (int i = 0; i < 100; ++i) {
        const double a = 2.0 * 3.141592653589793 * i / 100.0;
        const Vec2 p = grown.center + grown.shape_matrix() * Vec2(std::cos(a), std::sin(a));
        CHECK(h.violation(p) <= 1e-9);
        top = std::max(top, h.violation(p));
      }
      CHECK(top > -1e-2 * gamma);
    }
    // The first plane comes from an unclipped obstacle and touches it.
    double touch = 1e300;
    for (const auto& o : obs) touch = std::min(touch, std::abs(hs[0].normal.dot(support_buffered(o, -hs[0].normal)) - hs[0].offset));
    CHECK(touch < 1e-6);
  }
}

TEST_CASE("no obstacles gives the proximity box") {
  const VehicleGeometry g;
  State x = State::Zero();
  x(idx::kTheta) = 0.7;
  const auto r = generate_polygon(x, g, {});
  const Vec2 c = vehicle_center(x, g);
  const double half = 3.0 + g.half_diagonal();
  CHECK(r.halfspaces.size() == 4);
  REQUIRE(r.vertices.size() == 4);
  for (const auto& v : r.vertices) {
    CHECK(std::abs(std::abs(v.x() - c.x()) - half) < 1e-12);
    CHECK(std::abs(std::abs(v.y() - c.y()) - half) < 1e-12);
  }
}

TEST_CASE("single point and empty field corridors") {
  const VehicleGeometry g;
  const auto one = build_corridor(single_segment({State::Zero()}), g, {});
  CHECK(one.region_count() == 1);
}

TEST_CASE("a center inside an obstacle is reported with its index") {
  const VehicleGeometry g;
  std::vector<State> states(3, State::Zero());
  states[2](idx::kX) = 10.0;
  const std::vector<BufferedObstacle> obs{make_buffered(ConvexShape::disk({11.4, 0.0}, 0.5), 0.2)};
  try {
    build_corridor(single_segment(states), g, obs);
    FAIL("expected CorridorInfeasible");
  } catch (const CorridorInfeasible& err) {
    CHECK(err.segment() == 0);
    CHECK(err.index() == 2);
  }
}

TEST_CASE("random fields give safe, enclosing regions") {
  Rng rng(43);
  const VehicleGeometry g;
  for (int field = 0; field < 10; ++field) {
    const auto ref = testing::random_reference(rng, 30, 0.3);
    const auto samples = testing::random_obstacle_field(rng, ref, g, 8);
    std::vector<BufferedObstacle> obs;
    for (const auto& s : samples) obs.push_back(s.obstacle());
    const auto corridor = build_corridor(single_segment(ref), g, obs);
    REQUIRE(corridor.region_count() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const auto& region = corridor.segments[0][k];
      const Vec2 center = ref[k].head<2>() + g.center_offset() * Vec2(std::cos(ref[k](2)), std::sin(ref[k](2)));
      for (const auto& h : region.halfspaces) CHECK(h.violation(center) < 0.0);
      for (const auto& s : samples) {
        CHECK(testing::oracle_polygon_base_distance(region.vertices, s) >= s.buffer - 1e-9);
        CHECK(signed_polygon_distance(region.vertices, s.obstacle()) >= -1e-9);
      }
    }
  }
}
