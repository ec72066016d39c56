#pragma once

#include "stopt/geom2d.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace stopt {

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, 5, 1>;
template <typename Scalar>
using ControlVector = Eigen::Matrix<Scalar, 2, 1>;

/// [x, y, theta, v, kappa] at the rear-axle center.
using State = StateVector<double>;
/// [a, psi]: longitudinal acceleration and curvature rate.
using Control = ControlVector<double>;

namespace idx {
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kTheta = 2;
inline constexpr int kV = 3;
inline constexpr int kKappa = 4;
inline constexpr int kAccel = 0;
inline constexpr int kCurvRate = 1;
}  // namespace idx

struct VehicleGeometry {
  double front = 3.89;   // rear axle to front bumper
  double rear = 1.043;   // rear axle to rear bumper
  double width = 1.87;

  double length() const { return front + rear; }
  /// Distance from the rear axle to the geometric center, along the heading.
  double center_offset() const { return 0.5 * (front - rear); }
  double half_diagonal() const { return 0.5 * std::hypot(length(), width); }
  /// Throws std::invalid_argument on non-positive dimensions or front <= rear.
  void validate() const;
  bool operator==(const VehicleGeometry&) const = default;
};

enum class Corner { FrontLeft = 0, FrontRight = 1, RearLeft = 2, RearRight = 3 };
inline constexpr std::array<Corner, 4> kCorners = {Corner::FrontLeft, Corner::FrontRight,
                                                   Corner::RearLeft, Corner::RearRight};

/// Corner position in the body frame (x along the heading, y to the left).
inline Vec2 corner_offset(const VehicleGeometry& g, Corner c) {
  const double hw = 0.5 * g.width;
  switch (c) {
    case Corner::FrontLeft: return {g.front, hw};
    case Corner::FrontRight: return {g.front, -hw};
    case Corner::RearLeft: return {-g.rear, hw};
    case Corner::RearRight: return {-g.rear, -hw};
  }
  return Vec2::Zero();
}

/// Continuous kinematic bicycle model.
template <typename Scalar>
StateVector<Scalar> dynamics(const StateVector<Scalar>& x, const ControlVector<Scalar>& u) {
  using std::cos;
  using std::sin;
  StateVector<Scalar> dx;
  dx << x(idx::kV) * cos(x(idx::kTheta)), x(idx::kV) * sin(x(idx::kTheta)),
      x(idx::kV) * x(idx::kKappa), u(idx::kAccel), u(idx::kCurvRate);
  return dx;
}

template <typename Scalar>
StateVector<Scalar> euler_step(const StateVector<Scalar>& x, const ControlVector<Scalar>& u,
                               Scalar dt) {
  return x + dt * dynamics(x, u);
}

/// Classical RK4 with the control held constant over the step.
template <typename Scalar>
StateVector<Scalar> rk4_step(const StateVector<Scalar>& x, const ControlVector<Scalar>& u,
                             Scalar dt) {
  const StateVector<Scalar> k1 = dynamics(x, u);
  const StateVector<Scalar> k2 = dynamics(StateVector<Scalar>(x + 0.5 * dt * k1), u);
  const StateVector<Scalar> k3 = dynamics(StateVector<Scalar>(x + 0.5 * dt * k2), u);
  const StateVector<Scalar> k4 = dynamics(StateVector<Scalar>(x + dt * k3), u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> corner(const StateVector<Scalar>& x, const VehicleGeometry& g,
                                   Corner c) {
  using std::cos;
  using std::sin;
  const Vec2 o = corner_offset(g, c);
  const Scalar ct = cos(x(idx::kTheta));
  const Scalar st = sin(x(idx::kTheta));
  return {x(idx::kX) + ct * o.x() - st * o.y(), x(idx::kY) + st * o.x() + ct * o.y()};
}

/// FL, FR, RL, RR.
std::array<Vec2, 4> corners(const State& x, const VehicleGeometry& g);

/// Footprint rectangle in counter-clockwise order (RR, FR, FL, RL).
std::array<Vec2, 4> footprint(const State& x, const VehicleGeometry& g);

Vec2 vehicle_center(const State& x, const VehicleGeometry& g);

/// x_{k+1} ~= A x_k + B u_k + c, exact at the linearization point.
struct LinearizedStep {
  Eigen::Matrix<double, 5, 5> A;
  Eigen::Matrix<double, 5, 2> B;
  StateVector<double> c;
};

LinearizedStep linearize_step(const State& ref_state, const Control& ref_control, double dt);

/// Corner position ~= jacobian * [x, y, theta] + offset, first order in theta.
struct CornerLinearization {
  Eigen::Matrix<double, 2, 3> jacobian;
  Vec2 offset;

  Vec2 evaluate(double x, double y, double theta) const {
    return jacobian * Eigen::Vector3d(x, y, theta) + offset;
  }
};

CornerLinearization linearize_corner(const State& ref_state, const VehicleGeometry& g, Corner c);

struct SegmentedTrajectory;

/// Componentwise max over all transitions of |rk4(x_k, u_k) - x_{k+1}|; heading
/// differences are wrapped to (-pi, pi].
StateVector<double> eval_feasibility_error(const SegmentedTrajectory& trajectory);

}  // namespace stopt
