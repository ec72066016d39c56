#pragma once

#include "stopt/geom2d.hpp"
#include "stopt/vehicle.hpp"

#include <array>

namespace stopt {

/// Cost weights, bounds and SQP settings.
struct StoParams {
  // w1..w3: x, y, theta tracking; w4: v^2; w5: kappa^2; w6: slack^2; w7: a^2; w8: psi^2.
  std::array<double, 8> weights{0.3, 0.3, 0.1, 1.8, 30.0, 10.0, 5.0, 100.0};
  double kappa_max = 0.16;
  double accel_max = 1.0;
  double curvature_rate_max = 0.03;
  double v_max = 3.0;
  double v_min = -3.0;
  Vec2 position_proximity = Vec2(3.0, 3.0);
  double heading_proximity = 0.175;
  StateVector<double> feasibility_tolerance =
      (StateVector<double>() << 0.01, 0.01, 0.01, 1e-4, 1e-4).finished();
  int max_iterations = 10;
  double timestep = 0.1;

  /// Throws std::invalid_argument on negative weights or non-positive bounds.
  void validate() const;
  bool operator==(const StoParams&) const = default;
};

}  // namespace stopt
