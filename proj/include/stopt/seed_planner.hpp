#pragma once

#include "stopt/geom2d.hpp"
#include "stopt/trajectory.hpp"
#include "stopt/vehicle.hpp"

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace stopt {

struct SeedPlannerOptions {
  double xy_resolution = 0.2;
  double heading_resolution = std::numbers::pi / 18.0;
  double step = 0.3;  // primitive arc length
  double kappa_max = 0.16;
  std::size_t node_budget = 200000;
  double switch_penalty = 2.0;
  double reverse_factor = 1.0;
  /// Added per full-range change of curvature between consecutive primitives of the
  /// same direction; keeps segments close to single arcs.
  double steering_change_penalty = 1.0;
  double goal_position_tolerance = 0.2;
  double goal_heading_tolerance = std::numbers::pi / 36.0;
  double output_spacing = 0.1;
  /// Every this many expansions the search tries to reach the goal directly with a
  /// single-direction curve of turns and a straight.
  std::size_t shot_interval = 1;
  /// Shots costlier than this multiple of the heuristic (plus 1 m) are not tried.
  double shot_length_factor = 1.5;
  /// Extra obstacle inflation tried in order during the search; the first margin that
  /// yields a path wins. Start and goal are only checked against the plain obstacles.
  std::vector<double> clearance_margins = {0.15, 0.0};
};

class PlannerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// True when the vehicle footprint at `pose` keeps a positive distance to every obstacle.
bool pose_is_free(const Pose2& pose, const VehicleGeometry& vehicle,
                  std::span<const BufferedObstacle> obstacles);

/// Pose reached by driving `distance` (signed, negative = backward) on a constant
/// curvature arc.
Pose2 drive_arc(const Pose2& from, double distance, double kappa);

/// Hybrid-state grid search over forward/backward arcs at curvature -k, 0, +k. The
/// returned path ends exactly at `goal`; the residual within the goal tolerance is
/// blended into the last segment.
LabeledPath plan_seed_path(const Pose2& start, const Pose2& goal,
                           std::span<const BufferedObstacle> obstacles,
                           const VehicleGeometry& vehicle, const SeedPlannerOptions& options = {});

}  // namespace stopt
