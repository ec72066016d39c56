#include "generators.hpp"
#include "oracles.hpp"
#include "stopt/trajectory.hpp"
#include "stopt/vehicle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stopt;
using stopt::testing::Rng;

namespace {

State make_state(double x, double y, double th, double v, double k) {
  State s;
  s << x, y, th, v, k;
  return s;
}

Control make_control(double a, double psi) {
  Control u;
  u << a, psi;
  return u;
}

SegmentedTrajectory rollout(const State& x0, const Control& u, int steps, double dt, bool euler) {
  SegmentedTrajectory t;
  t.timestep = dt;
  Segment seg;
  seg.states.push_back(x0);
  for (int k = 0; k < steps; ++k) {
    seg.controls.push_back(u);
    seg.states.push_back(euler ? euler_step(seg.states.back(), u, dt) : rk4_step(seg.states.back(), u, dt));
  }
  t.segments.push_back(seg);
  return t;
}

}  // namespace

TEST_CASE("corners at the origin with the reference geometry") {
  const VehicleGeometry g;
  const auto c = corners(State::Zero(), g);
  CHECK((c[0] - Vec2(3.89, 0.935)).norm() < 1e-15);
  CHECK((c[1] - Vec2(3.89, -0.935)).norm() < 1e-15);
  CHECK((c[2] - Vec2(-1.043, 0.935)).norm() < 1e-15);
  CHECK((c[3] - Vec2(-1.043, -0.935)).norm() < 1e-15);

  const auto r = corners(make_state(0, 0, std::numbers::pi / 2, 0, 0), g);
  CHECK((r[0] - Vec2(-0.935, 3.89)).norm() < 1e-12);
}

TEST_CASE("corners move rigidly for any pose") {
  Rng rng(31);
  const VehicleGeometry g;
  for (int i = 0; i < 500; ++i) {
    const auto c = corners(testing::random_state(rng), g);
    CHECK(std::abs((c[0] - c[1]).norm() - g.width) < 1e-12);
    CHECK(std::abs((c[0] - c[2]).norm() - g.length()) < 1e-12);
    CHECK(std::abs((c[1] - c[3]).norm() - g.length()) < 1e-12);
    CHECK(std::abs((c[0] - c[3]).norm() - std::hypot(g.length(), g.width)) < 1e-12);
  }
}

TEST_CASE("footprint is counter-clockwise and centered") {
  Rng rng(32);
  const VehicleGeometry g;
  for (int i = 0; i < 100; ++i) {
    const State x = testing::random_state(rng);
    const auto f = footprint(x, g);
    for (int k = 0; k < 4; ++k) CHECK(cross(f[(k + 1) % 4] - f[k], f[(k + 2) % 4] - f[(k + 1) % 4]) > 0.0);
    const Vec2 mean = 0.25 * (f[0] + f[1] + f[2] + f[3]);
    CHECK((mean - vehicle_center(x, g)).norm() < 1e-12);
  }
}

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(VehicleGeometry{}.validate());
  CHECK_THROWS_AS((VehicleGeometry{1.0, 2.0, 1.8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VehicleGeometry{3.0, 1.0, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("euler step examples") {
  const Control zero = Control::Zero();
  const State a = euler_step(make_state(0, 0, 0, 1, 0), zero, 0.2);
  CHECK((a - make_state(0.2, 0, 0, 1, 0)).norm() < 1e-15);

  const State b = euler_step(make_state(1, 2, 0.3, 0, 0.05), make_control(0.5, 0.02), 0.2);
  CHECK(b(0) == 1.0);
  CHECK(b(1) == 2.0);
  CHECK(b(2) == 0.3);
  CHECK(std::abs(b(3) - 0.1) < 1e-15);
  CHECK(std::abs(b(4) - 0.054) < 1e-15);

  const State c = euler_step(make_state(0, 0, 0, 1, 0.1), zero, 0.2);
  CHECK(std::abs(c(2) - 0.02) < 1e-15);
}

TEST_CASE("rk4 step on a line and on an arc") {
  const State line = rk4_step(make_state(1, 1, 0, 2, 0), Control(Control::Zero()), 0.3);
  CHECK(std::abs(line(0) - 1.6) < 1e-15);
  CHECK(std::abs(line(1) - 1.0) < 1e-15);

  // Constant speed arc: exact solution on the circle of radius 1/kappa.
  const double v = 1.5;
  const double k = 0.12;
  double previous = 0.0;
  for (double dt : {0.4, 0.2, 0.1}) {
    const State s = rk4_step(make_state(0, 0, 0, v, k), Control(Control::Zero()), dt);
    const double th = v * k * dt;
    const Vec2 exact(std::sin(th) / k, (1 - std::cos(th)) / k);
    const double err = (s.head<2>() - exact).norm();
    CHECK(err < 1e-6 * dt);
    if (previous > 0.0) CHECK(err < previous / 16.0);
    previous = err;
  }
}

TEST_CASE("rk4 and euler agree as the step shrinks") {
  const State x = make_state(0, 0, 0.4, 2.0, 0.1);
  const Control u = make_control(0.5, 0.02);
  double previous = 1.0;
  for (double dt : {0.1, 0.01, 0.001}) {
    const double gap = (rk4_step(x, u, dt) - euler_step(x, u, dt)).norm();
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("linearized step at a simple point") {
  const auto lin = linearize_step(make_state(0, 0, 0, 1, 0), Control::Zero(), 0.2);
  CHECK(std::abs(lin.A(0, 3) - 0.2) < 1e-15);
  CHECK(std::abs(lin.A(0, 2)) < 1e-15);
  CHECK(std::abs(lin.A(1, 2) - 0.2) < 1e-15);
  CHECK(std::abs(lin.A(2, 4) - 0.2) < 1e-15);
}

TEST_CASE("linearized step reproduces the euler step at the linearization point") {
  Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    const State x = testing::random_state(rng);
    const Control u = testing::random_control(rng);
    const double dt = rng.uniform(0.05, 0.3);
    const auto lin = linearize_step(x, u, dt);
    CHECK((lin.A * x + lin.B * u + lin.c - euler_step(x, u, dt)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("step jacobians match central differences") {
  Rng rng(34);
  for (int i = 0; i < 100; ++i) {
    const State x = testing::random_state(rng);
    const Control u = testing::random_control(rng);
    const double dt = 0.1;
    const auto lin = linearize_step(x, u, dt);
    Eigen::VectorXd z(7);
    z << x, u;
    const auto J = testing::central_difference(
        [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
          return euler_step<double>(w.head<5>(), w.tail<2>(), dt);
        },
        z);
    CHECK((J.leftCols(5) - lin.A).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK((J.rightCols(2) - lin.B).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("corner linearization at zero heading") {
  const VehicleGeometry g;
  const auto lin = linearize_corner(State::Zero(), g, Corner::FrontLeft);
  CHECK(std::abs(lin.jacobian(0, 2) + g.width / 2) < 1e-15);
  CHECK(std::abs(lin.jacobian(1, 2) - g.front) < 1e-15);
}

TEST_CASE("corner jacobians match central differences and are exact at the point") {
  Rng rng(35);
  const VehicleGeometry g;
  for (int i = 0; i < 100; ++i) {
    const State x = testing::random_state(rng);
    for (Corner c : kCorners) {
      const auto lin = linearize_corner(x, g, c);
      const auto J = testing::central_difference(
          [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
            State s = x;
            s.head<3>() = p;
            return corner(s, g, c);
          },
          x.head<3>());
      CHECK((J - lin.jacobian).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK((lin.evaluate(x(0), x(1), x(2)) - corner(x, g, c)).norm() < 1e-12);
    }
  }
}

TEST_CASE("corner linearization error stays within the second order bound") {
  Rng rng(36);
  const VehicleGeometry g;
  const double dmax = 0.175;
  const double bound = 0.5 * (g.front + g.width / 2) * dmax * dmax;
  for (int i = 0; i < 200; ++i) {
    const State x = testing::random_state(rng);
    for (Corner c : kCorners) {
      const auto lin = linearize_corner(x, g, c);
      State y = x;
      y(2) += rng.uniform(-dmax, dmax);
      y(0) += rng.uniform(-1, 1);
      y(1) += rng.uniform(-1, 1);
      CHECK((lin.evaluate(y(0), y(1), y(2)) - corner(y, g, c)).norm() <= bound + 1e-12);
    }
  }
}

TEST_CASE("feasibility error of rollouts") {
  const State arc0 = make_state(0, 0, 0, 1, 0.1);
  CHECK(eval_feasibility_error(rollout(arc0, Control::Zero(), 30, 0.2, false)).maxCoeff() < 1e-12);
  CHECK(eval_feasibility_error(rollout(make_state(0, 0, 0.3, 1.5, 0), Control::Zero(), 30, 0.2, true)).maxCoeff() <
        1e-12);

  const double e1 = eval_feasibility_error(rollout(arc0, Control::Zero(), 10, 0.2, true)).head<2>().maxCoeff();
  const double e2 = eval_feasibility_error(rollout(arc0, Control::Zero(), 20, 0.1, true)).head<2>().maxCoeff();
  CHECK(e1 > 0.0);
  // Local Euler error is O(T^2).
  CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.05));
}
