#include "stopt/vehicle.hpp"

#include "stopt/trajectory.hpp"

#include <stdexcept>

namespace stopt {

void VehicleGeometry::validate() const {
  if (!(front > 0.0) || !(rear > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("vehicle dimensions must be strictly positive");
  }
  if (!(front > rear)) {
    throw std::invalid_argument("vehicle front overhang must exceed the rear overhang");
  }
}

std::array<Vec2, 4> corners(const State& x, const VehicleGeometry& g) {
  return {corner(x, g, Corner::FrontLeft), corner(x, g, Corner::FrontRight),
          corner(x, g, Corner::RearLeft), corner(x, g, Corner::RearRight)};
}

std::array<Vec2, 4> footprint(const State& x, const VehicleGeometry& g) {
  return {corner(x, g, Corner::RearRight), corner(x, g, Corner::FrontRight),
          corner(x, g, Corner::FrontLeft), corner(x, g, Corner::RearLeft)};
}

Vec2 vehicle_center(const State& x, const VehicleGeometry& g) {
  const double th = x(idx::kTheta);
  return Vec2(x(idx::kX), x(idx::kY)) + g.center_offset() * Vec2(std::cos(th), std::sin(th));
}

LinearizedStep linearize_step(const State& ref_state, const Control& ref_control, double dt) {
  const double th = ref_state(idx::kTheta);
  const double v = ref_state(idx::kV);
  const double k = ref_state(idx::kKappa);
  const double c = std::cos(th);
  const double s = std::sin(th);

  LinearizedStep step;
  step.A.setIdentity();
  step.A(idx::kX, idx::kTheta) = -v * dt * s;
  step.A(idx::kX, idx::kV) = dt * c;
  step.A(idx::kY, idx::kTheta) = v * dt * c;
  step.A(idx::kY, idx::kV) = dt * s;
  step.A(idx::kTheta, idx::kV) = dt * k;
  step.A(idx::kTheta, idx::kKappa) = dt * v;

  step.B.setZero();
  step.B(idx::kV, idx::kAccel) = dt;
  step.B(idx::kKappa, idx::kCurvRate) = dt;

  step.c = euler_step(ref_state, ref_control, dt) - step.A * ref_state - step.B * ref_control;
  return step;
}

CornerLinearization linearize_corner(const State& ref_state, const VehicleGeometry& g, Corner c) {
  const Vec2 o = corner_offset(g, c);
  const double th = ref_state(idx::kTheta);
  const double ct = std::cos(th);
  const double st = std::sin(th);
  // d/dtheta of R(theta) * o.
  const Vec2 dtheta(-st * o.x() - ct * o.y(), ct * o.x() - st * o.y());

  CornerLinearization lin;
  lin.jacobian.setZero();
  lin.jacobian(0, 0) = 1.0;
  lin.jacobian(1, 1) = 1.0;
  lin.jacobian.col(2) = dtheta;
  lin.offset = corner(ref_state, g, c) - lin.jacobian * Eigen::Vector3d(ref_state(idx::kX),
                                                                        ref_state(idx::kY), th);
  return lin;
}

StateVector<double> eval_feasibility_error(const SegmentedTrajectory& trajectory) {
  StateVector<double> worst = StateVector<double>::Zero();
  const double dt = trajectory.timestep;
  for (const auto& seg : trajectory.segments) {
    if (seg.controls.size() + 1 != seg.states.size() && !seg.states.empty()) {
      throw std::invalid_argument("segment needs one control per transition");
    }
    for (std::size_t k = 0; k + 1 < seg.states.size(); ++k) {
      StateVector<double> diff = rk4_step(seg.states[k], seg.controls[k], dt) - seg.states[k + 1];
      diff(idx::kTheta) = wrap_angle(diff(idx::kTheta));
      worst = worst.cwiseMax(diff.cwiseAbs());
    }
  }
  return worst;
}

}  // namespace stopt
