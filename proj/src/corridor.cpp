#include "stopt/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stopt {

namespace {

constexpr double kShrinkMargin = 1e-7;
constexpr double kUnitTolerance = 1e-9;
constexpr int kShrinkPasses = 50;

Mat2 rotation_matrix(double theta) {
  Mat2 r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

ClosestPointResult inverse_space_query(const BufferedObstacle& obstacle, const Ellipse& ellipse,
                                       const GjkOptions& options) {
  const AffineMap2 map = ellipse.map();
  if (!map.invertible()) throw CorridorInfeasible("degenerate ellipse");
  const InverseSpaceObstacle inv(obstacle, map);
  return closest_point_to_origin(inv, inv.seed_point(), options);
}

bool segment_clear(const Vec2& a, const Vec2& b, std::span<const BufferedObstacle> obstacles,
                   const GjkOptions& options) {
  const std::array<Vec2, 2> seg{a, b};
  for (const auto& o : obstacles) {
    const auto r = polygon_distance(seg, o, options);
    if (r.contains_origin || r.distance <= 0.0) return false;
  }
  return true;
}

bool overlaps_box(const BufferedObstacle& o, const Vec2& lo, const Vec2& hi) {
  return support_buffered(o, Vec2(1, 0)).x() >= lo.x() &&
         support_buffered(o, Vec2(-1, 0)).x() <= hi.x() &&
         support_buffered(o, Vec2(0, 1)).y() >= lo.y() &&
         support_buffered(o, Vec2(0, -1)).y() <= hi.y();
}

}  // namespace

Mat2 Ellipse::shape_matrix() const {
  return rotation * Eigen::Vector2d(semi_major, semi_minor).asDiagonal() * rotation.transpose();
}

Ellipse Ellipse::scaled(double factor) const {
  Ellipse e = *this;
  e.semi_major *= factor;
  e.semi_minor *= factor;
  return e;
}

bool Ellipse::contains(const Vec2& p, double tolerance) const {
  const Vec2 local = rotation.transpose() * (p - center);
  const double u = local.x() / semi_major;
  const double w = local.y() / semi_minor;
  return std::sqrt(u * u + w * w) <= 1.0 + tolerance;
}

bool ConvexPolygonRegion::contains(const Vec2& p, double tolerance) const {
  return std::all_of(halfspaces.begin(), halfspaces.end(),
                     [&](const HalfSpace& h) { return h.violation(p) <= tolerance; });
}

std::size_t Corridor::region_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.size();
  return n;
}

Ellipse initial_ellipse(const State& ref_state, const VehicleGeometry& vehicle,
                        std::span<const BufferedObstacle> obstacles,
                        const CorridorOptions& options) {
  if (!ref_state.allFinite()) throw CorridorInfeasible("non-finite reference state");
  Ellipse e;
  e.center = vehicle_center(ref_state, vehicle);
  e.rotation = rotation_matrix(ref_state(idx::kTheta));
  for (const auto& o : obstacles) {
    if (point_distance(o, e.center, options.gjk).contains_origin) {
      throw CorridorInfeasible("vehicle center lies inside a buffered obstacle");
    }
  }

  const Vec2 axis = e.rotation.col(0);
  auto clear = [&](double alpha) {
    return segment_clear(e.center - alpha * axis, e.center + alpha * axis, obstacles,
                         options.gjk);
  };
  double alpha = options.major_axis_scale * 0.5 * vehicle.length();
  if (!clear(alpha)) {
    double lo = 0.0;
    double hi = alpha;
    for (int i = 0; i < options.bisection_iterations; ++i) {
      const double mid = 0.5 * (lo + hi);
      (clear(mid) ? lo : hi) = mid;
    }
    alpha = options.axis_backoff * lo;
  }
  if (alpha < 1e-6) throw CorridorInfeasible("no room for the ellipse major axis");
  e.semi_major = alpha;
  e.semi_minor = alpha * vehicle.width / vehicle.length();
  return e;
}

Ellipse shrink_ellipse(const Ellipse& ellipse, std::span<const BufferedObstacle> obstacles,
                       const CorridorOptions& options) {
  Ellipse e = ellipse;
  auto clear_of = [&](const BufferedObstacle& o, const Ellipse& candidate) {
    const auto r = inverse_space_query(o, candidate, options.gjk);
    return !r.contains_origin && r.distance >= 1.0 - kUnitTolerance;
  };

  for (const auto& o : obstacles) {
    bool done = false;
    for (int pass = 0; pass < kShrinkPasses; ++pass) {
      const auto r = inverse_space_query(o, e, options.gjk);
      if (r.contains_origin) throw CorridorInfeasible("obstacle covers the ellipse center");
      if (r.distance >= 1.0 - kUnitTolerance) {
        done = true;
        break;
      }
      // Put the obstacle's closest point on the boundary, keeping the major axis.
      const Vec2 p = apply_map(e.map(), r.point);
      const Vec2 local = e.rotation.transpose() * (p - e.center);
      const double denom = 1.0 - (local.x() * local.x()) / (e.semi_major * e.semi_major);
      if (denom <= 0.0 || std::abs(local.y()) < 1e-12) {
        throw CorridorInfeasible("obstacle reaches the ellipse major axis");
      }
      const double beta = std::abs(local.y()) / std::sqrt(denom) * (1.0 - kShrinkMargin);
      e.semi_minor = std::min(beta, e.semi_minor * (1.0 - kShrinkMargin));
    }
    if (done) continue;

    double lo = e.semi_minor * 1e-6;
    double hi = e.semi_minor;
    Ellipse probe = e;
    probe.semi_minor = lo;
    if (!clear_of(o, probe)) throw CorridorInfeasible("minor axis collapsed");
    for (int i = 0; i < 60; ++i) {
      probe.semi_minor = 0.5 * (lo + hi);
      (clear_of(o, probe) ? lo : hi) = probe.semi_minor;
    }
    e.semi_minor = lo;
  }
  return e;
}

HalfSpace tangent_halfspace(const Ellipse& ellipse, const Vec2& p) {
  const Mat2 cinv = ellipse.shape_matrix().inverse();
  Vec2 a = cinv * cinv.transpose() * (p - ellipse.center);
  const double n = a.norm();
  if (!(n > 0.0)) throw CorridorInfeasible("tangent point coincides with the ellipse center");
  a /= n;
  return {a, a.dot(p)};
}

std::vector<HalfSpace> generate_halfspaces(const Ellipse& ellipse,
                                           std::vector<BufferedObstacle> obstacles,
                                           const CorridorOptions& options) {
  std::vector<HalfSpace> out;
  const AffineMap2 map = ellipse.map();
  while (!obstacles.empty()) {
    std::size_t best = 0;
    ClosestPointResult best_r;
    double gamma = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const auto r = inverse_space_query(obstacles[i], ellipse, options.gjk);
      if (r.contains_origin) throw CorridorInfeasible("obstacle covers the ellipse center");
      if (r.distance < gamma) {
        gamma = r.distance;
        best = i;
        best_r = r;
      }
    }
    const Vec2 p = apply_map(map, best_r.point);
    HalfSpace h = tangent_halfspace(ellipse, p);
    // Pull the plane onto the obstacle's exact support so GJK round-off cannot leave a
    // sliver of the obstacle inside.
    h.offset = std::min(h.offset, h.normal.dot(support_buffered(obstacles[best], -h.normal)));
    out.push_back(h);
    obstacles.erase(obstacles.begin() + static_cast<std::ptrdiff_t>(best));

    std::vector<BufferedObstacle> kept;
    for (auto& o : obstacles) {
      const double lowest = h.normal.dot(support_buffered(o, -h.normal));
      if (lowest >= h.offset) continue;
      if (const auto* poly = std::get_if<Polygon>(&o.base.variant())) {
        auto clipped = clip_polygon(poly->vertices, h.normal, h.offset + o.buffer);
        if (clipped.empty()) continue;
        o.base = ConvexShape::from_points(std::move(clipped));
      }
      kept.push_back(std::move(o));
    }
    obstacles = std::move(kept);
  }
  return out;
}

ConvexPolygonRegion generate_polygon(const State& ref_state, const VehicleGeometry& vehicle,
                                     std::span<const BufferedObstacle> obstacles,
                                     const CorridorOptions& options) {
  ConvexPolygonRegion region;
  region.anchor = vehicle_center(ref_state, vehicle);
  const Vec2 half = options.proximity + Vec2::Constant(vehicle.half_diagonal());
  const Vec2 lo = region.anchor - half;
  const Vec2 hi = region.anchor + half;

  std::vector<BufferedObstacle> nearby;
  for (const auto& o : obstacles) {
    if (overlaps_box(o, lo, hi)) nearby.push_back(o);
  }

  Ellipse e = initial_ellipse(ref_state, vehicle, nearby, options);
  e = shrink_ellipse(e, nearby, options);
  region.ellipse = e;
  region.halfspaces = generate_halfspaces(e, std::move(nearby), options);

  region.vertices = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
  for (const auto& h : region.halfspaces) {
    region.vertices = clip_polygon(region.vertices, h.normal, h.offset);
  }
  region.halfspaces.push_back({Vec2(1, 0), hi.x()});
  region.halfspaces.push_back({Vec2(0, 1), hi.y()});
  region.halfspaces.push_back({Vec2(-1, 0), -lo.x()});
  region.halfspaces.push_back({Vec2(0, -1), -lo.y()});
  if (region.vertices.size() < 3) throw CorridorInfeasible("corridor region is empty");
  for (const auto& h : region.halfspaces) {
    if (h.violation(e.center) >= 0.0) {
      throw CorridorInfeasible("corridor region does not enclose the vehicle center");
    }
  }
  return region;
}

Corridor build_corridor(const SegmentedTrajectory& reference, const VehicleGeometry& vehicle,
                        std::span<const BufferedObstacle> obstacles,
                        const CorridorOptions& options) {
  Corridor corridor;
  corridor.segments.resize(reference.segments.size());
  for (std::size_t s = 0; s < reference.segments.size(); ++s) {
    const auto& states = reference.segments[s].states;
    auto& regions = corridor.segments[s];
    regions.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
      try {
        regions.push_back(generate_polygon(states[k], vehicle, obstacles, options));
      } catch (const CorridorInfeasible& err) {
        throw CorridorInfeasible(err.what(), static_cast<int>(s), static_cast<int>(k));
      } catch (const GjkError& err) {
        throw CorridorInfeasible(err.what(), static_cast<int>(s), static_cast<int>(k));
      }
    }
  }
  return corridor;
}

}  // namespace stopt
