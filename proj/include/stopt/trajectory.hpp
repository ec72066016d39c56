#pragma once

#include "stopt/vehicle.hpp"

#include <string_view>
#include <vector>

namespace stopt {

enum class Direction { Forward, Backward };

inline double direction_sign(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }
std::string_view to_string(Direction d);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

/// One maneuver: N states, N-1 controls and one corridor slack per state.
struct Segment {
  std::vector<State> states;
  std::vector<Control> controls;
  std::vector<double> slacks;  // empty when not produced by the optimizer
  Direction direction = Direction::Forward;

  std::size_t size() const { return states.size(); }
};

struct SegmentedTrajectory {
  std::vector<Segment> segments;
  double timestep = 0.1;

  std::size_t point_count() const;
};

/// Sum over segments of the polyline length through the rear-axle positions.
double path_length(const SegmentedTrajectory& trajectory);

/// |kappa_0^(i+1) - kappa_{N-1}^(i)| for each gear shift.
std::vector<double> curvature_jumps(const SegmentedTrajectory& trajectory);

/// Geometric path with uniform travel direction per segment; consecutive segments share
/// their switching pose.
struct PathSegment {
  std::vector<Pose2> poses;
  Direction direction = Direction::Forward;
};

struct LabeledPath {
  std::vector<PathSegment> segments;

  bool operator==(const LabeledPath& other) const;
};

}  // namespace stopt
