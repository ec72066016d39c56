#pragma once

#include "stopt/params.hpp"
#include "stopt/trajectory.hpp"

namespace stopt {

/// Rest-to-rest speed plan over a path of given length: constant acceleration, cruise,
/// constant deceleration. Degenerates to a triangle when v_max is out of reach.
struct TrapezoidalProfile {
  double length = 0.0;
  double accel = 1.0;
  double peak_speed = 0.0;
  double accel_time = 0.0;
  double accel_distance = 0.0;
  double cruise_time = 0.0;
  double total_time = 0.0;

  static TrapezoidalProfile plan(double length, double accel, double v_max);

  double speed_at(double t) const;
  double distance_at(double t) const;
};

/// Signed curvature of the circle through three points (0 when collinear or repeated).
double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c);

/// Time-parameterizes each path segment with a trapezoidal profile sampled at the
/// parameter timestep. Moving segments get at least three points; a zero-length segment
/// becomes two coincident resting points. The cruise speed is capped by how fast the
/// curvature changes along the segment; with `continuous_switch_curvature` the jumps at
/// the segment boundaries count as well.
SegmentedTrajectory plan_simple_speed(const LabeledPath& path, const StoParams& params,
                                      bool continuous_switch_curvature = false);

}  // namespace stopt
