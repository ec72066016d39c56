#pragma once

#include "stopt/geom2d.hpp"
#include "stopt/gjk.hpp"
#include "stopt/trajectory.hpp"
#include "stopt/vehicle.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stopt {

/// {p | ||C^-1 (p - d)|| <= 1} with C = R diag(alpha, beta) R^T.
struct Ellipse {
  Mat2 rotation = Mat2::Identity();
  double semi_major = 1.0;
  double semi_minor = 1.0;
  Vec2 center = Vec2::Zero();

  Mat2 shape_matrix() const;
  AffineMap2 map() const { return {shape_matrix(), center}; }
  /// Same ellipse scaled about its center by `factor`.
  Ellipse scaled(double factor) const;
  bool contains(const Vec2& p, double tolerance = 0.0) const;
};

/// a^T p <= b with |a| = 1.
struct HalfSpace {
  Vec2 normal = Vec2::UnitX();
  double offset = 0.0;

  double violation(const Vec2& p) const { return normal.dot(p) - offset; }
};

struct ConvexPolygonRegion {
  std::vector<HalfSpace> halfspaces;
  std::vector<Vec2> vertices;  // counter-clockwise, for plots and distance checks
  Vec2 anchor = Vec2::Zero();  // reference vehicle center
  Ellipse ellipse;             // seed ellipse after step 1

  bool contains(const Vec2& p, double tolerance = 0.0) const;
};

struct Corridor {
  std::vector<std::vector<ConvexPolygonRegion>> segments;

  std::size_t region_count() const;
};

class CorridorInfeasible : public std::runtime_error {
 public:
  CorridorInfeasible(const std::string& what, int segment = -1, int index = -1)
      : std::runtime_error(what), segment_(segment), index_(index) {}
  int segment() const { return segment_; }
  int index() const { return index_; }

 private:
  int segment_;
  int index_;
};

struct CorridorOptions {
  /// Component-wise proximity bound around the reference rear axle.
  Vec2 proximity = Vec2(3.0, 3.0);
  /// Initial semi-major axis as a multiple of half the vehicle length. sqrt(2) gives the
  /// smallest ellipse of the vehicle's aspect ratio that contains its footprint.
  double major_axis_scale = 1.4142135623730951;
  int bisection_iterations = 32;
  /// Applied to the bisected major axis when an obstacle cut it short. Leaving the
  /// axis endpoint exactly on an obstacle that is not perpendicular to it forces the
  /// minor axis towards zero.
  double axis_backoff = 0.9;
  GjkOptions gjk;
};

Ellipse initial_ellipse(const State& ref_state, const VehicleGeometry& vehicle,
                        std::span<const BufferedObstacle> obstacles,
                        const CorridorOptions& options = {});

/// Step 1: shrink the minor axis (major axis fixed) until no obstacle reaches into the
/// ellipse. Obstacles are processed in input order.
Ellipse shrink_ellipse(const Ellipse& ellipse, std::span<const BufferedObstacle> obstacles,
                       const CorridorOptions& options = {});

/// Tangent half-space at p (a point on the boundary of the ellipse scaled to pass
/// through it), normalized.
HalfSpace tangent_halfspace(const Ellipse& ellipse, const Vec2& p);

/// Step 2: expand the ellipse against the closest remaining obstacle, emit the tangent
/// half-space, discard or clip what lies beyond it, repeat. Only half-spaces from
/// obstacles are returned; bounding is done by the caller.
std::vector<HalfSpace> generate_halfspaces(const Ellipse& ellipse,
                                           std::vector<BufferedObstacle> obstacles,
                                           const CorridorOptions& options = {});

/// Steps 1 and 2 plus the proximity box for a single reference point.
ConvexPolygonRegion generate_polygon(const State& ref_state, const VehicleGeometry& vehicle,
                                     std::span<const BufferedObstacle> obstacles,
                                     const CorridorOptions& options = {});

Corridor build_corridor(const SegmentedTrajectory& reference, const VehicleGeometry& vehicle,
                        std::span<const BufferedObstacle> obstacles,
                        const CorridorOptions& options = {});

}  // namespace stopt
