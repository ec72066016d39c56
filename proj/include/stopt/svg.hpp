#pragma once

#include "stopt/corridor.hpp"
#include "stopt/scenario_io.hpp"
#include "stopt/trajectory.hpp"

#include <string>
#include <string_view>

namespace stopt {

/// Top-down view: obstacles (solid) with their buffers (dashed), optional corridor
/// regions, the seed path and the optimized trajectory with periodic footprints.
std::string trajectory_svg(const Scenario& scenario, const SegmentedTrajectory& trajectory,
                           const LabeledPath* seed, const Corridor* corridor,
                           std::string_view title);

/// Curvature and curvature-rate over time with their bounds.
std::string profile_svg(const SegmentedTrajectory& trajectory, const StoParams& params,
                        std::string_view title);

}  // namespace stopt
