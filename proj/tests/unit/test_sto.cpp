#include "generators.hpp"
#include "stopt/corridor.hpp"
#include "stopt/scenario_io.hpp"
#include "stopt/seed_planner.hpp"
#include "stopt/speed_plan.hpp"
#include "stopt/sto.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace stopt;
using stopt::testing::Rng;

namespace {

LabeledPath straight_path(double length, Direction d = Direction::Forward) {
  LabeledPath path;
  PathSegment s;
  s.direction = d;
  const int n = static_cast<int>(std::round(length / 0.1));
  const double sign = direction_sign(d);
  for (int i = 0; i <= n; ++i) s.poses.push_back({sign * length * i / n, 0.0, 0.0});
  path.segments.push_back(s);
  return path;
}

qp::Vector pack(const SegmentedTrajectory& t, const VariableLayout& L) {
  qp::Vector x = qp::Vector::Zero(L.size());
  for (std::size_t s = 0; s < t.segments.size(); ++s) {
    const auto& seg = t.segments[s];
    for (std::size_t k = 0; k < seg.size(); ++k) {
      for (int c = 0; c < 5; ++c) x(L.state(s, k, c)) = seg.states[k](c);
      if (!seg.slacks.empty()) x(L.slack(s, k)) = seg.slacks[k];
    }
    for (std::size_t k = 0; k < seg.controls.size(); ++k) {
      for (int c = 0; c < 2; ++c) x(L.control(s, k, c)) = seg.controls[k](c);
    }
  }
  return x;
}

// Two segments rolled out with Euler so the dynamics rows are satisfied exactly.
SegmentedTrajectory euler_reference(Rng& rng) {
  SegmentedTrajectory t;
  t.timestep = 0.1;
  State x = State::Zero();
  for (Direction d : {Direction::Forward, Direction::Backward}) {
    Segment seg;
    seg.direction = d;
    x(idx::kV) = 0.0;
    seg.states.push_back(x);
    const int n = rng.integer(3, 8);
    for (int k = 0; k < n; ++k) {
      Control u = testing::random_control(rng);
      u(0) = direction_sign(d) * std::abs(u(0));
      seg.controls.push_back(u);
      seg.states.push_back(euler_step(seg.states.back(), u, t.timestep));
    }
    seg.slacks.assign(seg.states.size(), 0.0);
    for (auto& s : seg.slacks) s = rng.uniform(0, 1);
    x = seg.states.back();
    t.segments.push_back(seg);
  }
  return t;
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(to_string(Mode::Sto) == "sto");
  CHECK(to_string(Mode::Baseline) == "baseline");
  CHECK(parse_mode("sto") == Mode::Sto);
  CHECK(parse_mode("baseline") == Mode::Baseline);
  CHECK_FALSE(parse_mode("both").has_value());
}

TEST_CASE("one segment of two points has fourteen variables") {
  SegmentedTrajectory t;
  Segment s;
  s.states = {State::Zero(), State::Zero()};
  s.controls = {Control::Zero()};
  t.segments.push_back(s);
  const VariableLayout L(t);
  CHECK(L.size() == 14);
  const Corridor c = build_corridor(t, VehicleGeometry{}, {});
  const auto sub = assemble_subproblem(t, c, VehicleGeometry{}, StoParams{}, Mode::Sto, {}, {});
  CHECK(sub.problem.n_vars() == 14);
  CHECK(sub.dynamics_rows == 5);
  CHECK(sub.switching_rows == 0);
}

TEST_CASE("layout indices are unique and cover the vector") {
  Rng rng(61);
  const auto t = euler_reference(rng);
  const VariableLayout L(t);
  std::vector<int> seen(static_cast<std::size_t>(L.size()), 0);
  for (std::size_t s = 0; s < t.segments.size(); ++s) {
    for (std::size_t k = 0; k < L.points(s); ++k) {
      for (int c = 0; c < 5; ++c) ++seen[static_cast<std::size_t>(L.state(s, k, c))];
      ++seen[static_cast<std::size_t>(L.slack(s, k))];
    }
    for (std::size_t k = 0; k + 1 < L.points(s); ++k) {
      for (int c = 0; c < 2; ++c) ++seen[static_cast<std::size_t>(L.control(s, k, c))];
    }
  }
  for (int v : seen) CHECK(v == 1);
}

TEST_CASE("extracting a packed trajectory gives it back") {
  Rng rng(62);
  const auto t = euler_reference(rng);
  const VariableLayout L(t);
  const auto back = extract_trajectory(pack(t, L), L, t);
  REQUIRE(back.segments.size() == t.segments.size());
  for (std::size_t s = 0; s < t.segments.size(); ++s) {
    CHECK(back.segments[s].direction == t.segments[s].direction);
    for (std::size_t k = 0; k < t.segments[s].size(); ++k) {
      CHECK(back.segments[s].states[k] == t.segments[s].states[k]);
      CHECK(back.segments[s].slacks[k] == t.segments[s].slacks[k]);
    }
  }
  CHECK_THROWS_AS(extract_trajectory(qp::Vector::Zero(3), L, t), std::invalid_argument);
}

TEST_CASE("assembled equalities hold on an euler rollout") {
  Rng rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = euler_reference(rng);
    const Corridor c = build_corridor(t, VehicleGeometry{}, {});
    const auto& last = t.segments.back().states.back();
    const Pose2 start{0, 0, 0};
    const Pose2 goal{last(0), last(1), last(2)};
    for (Mode mode : {Mode::Sto, Mode::Baseline}) {
      const auto sub = assemble_subproblem(t, c, VehicleGeometry{}, StoParams{}, mode, start, goal);
      const qp::Vector x = pack(t, sub.layout);
      const qp::Vector r = sub.problem.A_eq * x - sub.problem.b_eq;
      // Dynamics, position/heading continuity and the end poses hold; the v = 0 rows only
      // hold at the segment starts, so check up to the endpoint block.
      CHECK(r.head(sub.dynamics_rows).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK(r.segment(sub.dynamics_rows, 3).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK(sub.switching_rows == (mode == Mode::Sto ? 3 : 4));
    }
  }
}

TEST_CASE("with only the slack weight the objective is the slack penalty") {
  Rng rng(64);
  const auto t = euler_reference(rng);
  const Corridor c = build_corridor(t, VehicleGeometry{}, {});
  StoParams params;
  params.weights = {0, 0, 0, 0, 0, 10.0, 0, 0};
  const auto sub = assemble_subproblem(t, c, VehicleGeometry{}, params, Mode::Sto, {}, {});
  for (int i = 0; i < 10; ++i) {
    qp::Vector x = qp::Vector::NullaryExpr(sub.layout.size(), [&] { return rng.normal(); });
    double expected = 0.0;
    for (std::size_t s = 0; s < t.segments.size(); ++s) {
      for (std::size_t k = 0; k < sub.layout.points(s); ++k) expected += 10.0 * std::pow(x(sub.layout.slack(s, k)), 2);
    }
    CHECK(sub.problem.objective(x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("objective is the weighted tracking error up to a constant") {
  Rng rng(65);
  const auto t = euler_reference(rng);
  const Corridor c = build_corridor(t, VehicleGeometry{}, {});
  const StoParams params;
  const auto sub = assemble_subproblem(t, c, VehicleGeometry{}, params, Mode::Sto, {}, {});
  const auto& w = params.weights;
  auto direct = [&](const qp::Vector& x) {
    double f = 0.0;
    for (std::size_t s = 0; s < t.segments.size(); ++s) {
      for (std::size_t k = 0; k < sub.layout.points(s); ++k) {
        const State& r = t.segments[s].states[k];
        for (int i = 0; i < 3; ++i) f += w[static_cast<std::size_t>(i)] * std::pow(x(sub.layout.state(s, k, i)) - r(i), 2);
        f += w[3] * std::pow(x(sub.layout.state(s, k, 3)), 2);
        f += w[4] * std::pow(x(sub.layout.state(s, k, 4)), 2);
        f += w[5] * std::pow(x(sub.layout.slack(s, k)), 2);
      }
      for (std::size_t k = 0; k + 1 < sub.layout.points(s); ++k) {
        f += w[6] * std::pow(x(sub.layout.control(s, k, 0)), 2);
        f += w[7] * std::pow(x(sub.layout.control(s, k, 1)), 2);
      }
    }
    return f;
  };
  const qp::Vector x0 = qp::Vector::Zero(sub.layout.size());
  const double offset = direct(x0) - sub.problem.objective(x0);
  for (int i = 0; i < 10; ++i) {
    qp::Vector x = qp::Vector::NullaryExpr(sub.layout.size(), [&] { return rng.normal(); });
    CHECK(sub.problem.objective(x) + offset == doctest::Approx(direct(x)).epsilon(1e-10));
  }
}

TEST_CASE("corridor size mismatch is rejected") {
  Rng rng(66);
  const auto t = euler_reference(rng);
  Corridor c = build_corridor(t, VehicleGeometry{}, {});
  c.segments[1].pop_back();
  CHECK_THROWS_AS(assemble_subproblem(t, c, VehicleGeometry{}, StoParams{}, Mode::Sto, {}, {}), std::invalid_argument);
}

TEST_CASE("headings are unwrapped across segments") {
  SegmentedTrajectory t;
  Segment a;
  Segment b;
  for (double th : {3.0, 3.1, -3.1}) {
    State x = State::Zero();
    x(2) = th;
    a.states.push_back(x);
  }
  for (double th : {-3.1, -3.0}) {
    State x = State::Zero();
    x(2) = th;
    b.states.push_back(x);
  }
  t.segments = {a, b};
  unwrap_headings(t);
  const double two_pi = 2 * std::numbers::pi;
  CHECK(t.segments[0].states[2](2) == doctest::Approx(-3.1 + two_pi));
  CHECK(t.segments[1].states[0](2) == doctest::Approx(-3.1 + two_pi));
  CHECK(t.segments[1].states[1](2) == doctest::Approx(-3.0 + two_pi));
}

TEST_CASE("a straight 5 m path without obstacles converges to a straight line") {
  const StoParams params;
  const auto r = optimize(straight_path(5.0), {}, VehicleGeometry{}, params, Mode::Sto);
  REQUIRE(r.status == StoStatus::Converged);
  CHECK(r.iterations <= 2);
  for (const auto& seg : r.trajectory.segments) {
    for (std::size_t k = 0; k < seg.size(); ++k) {
      CHECK(std::abs(seg.states[k](1)) < 1e-5);
      CHECK(std::abs(seg.states[k](2)) < 1e-5);
      CHECK(seg.slacks[k] < 1e-6);
    }
  }
  CHECK(path_length(r.trajectory) == doctest::Approx(5.0).epsilon(1e-4));
  CHECK((eval_feasibility_error(r.trajectory).array() < params.feasibility_tolerance.array()).all());
  CHECK(std::isinf(min_corner_clearance(r.trajectory, VehicleGeometry{}, {})));
}

TEST_CASE("both modes agree on a path without gear shifts") {
  const auto a = optimize(straight_path(4.0, Direction::Backward), {}, VehicleGeometry{}, StoParams{}, Mode::Sto);
  const auto b = optimize(straight_path(4.0, Direction::Backward), {}, VehicleGeometry{}, StoParams{}, Mode::Baseline);
  REQUIRE(a.status == StoStatus::Converged);
  REQUIRE(b.status == StoStatus::Converged);
  CHECK(std::abs(path_length(a.trajectory) - path_length(b.trajectory)) < 1e-6);
  for (const auto& x : a.trajectory.segments[0].states) CHECK(x(3) <= 1e-9);
}

TEST_CASE("a corridor failure stops the loop with its status") {
  const std::vector<BufferedObstacle> block{make_buffered(ConvexShape::disk({3.4, 0.0}, 0.5), 0.2)};
  const auto r = optimize(straight_path(5.0), block, VehicleGeometry{}, StoParams{}, Mode::Sto);
  CHECK(r.status == StoStatus::CorridorInfeasible);
  CHECK(r.failed_iteration == 1);
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("subproblems can be dumped") {
  const auto dir = std::filesystem::temp_directory_path() / "stopt_sto_dump_test";
  std::filesystem::remove_all(dir);
  OptimizeOptions opts;
  opts.dump_qp_dir = dir;
  const auto r = optimize(straight_path(3.0), {}, VehicleGeometry{}, StoParams{}, Mode::Sto, opts);
  CHECK(r.status == StoStatus::Converged);
  CHECK(std::filesystem::exists(dir / "iter_1" / "H.mtx"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("perpendicular scenario converges safely in both modes") {
  const auto sc = load_builtin_scenario("perpendicular");
  const auto obs = sc.buffered_obstacles();
  const auto seed = plan_seed_path(sc.start, sc.goal, obs, sc.vehicle);
  for (Mode mode : {Mode::Sto, Mode::Baseline}) {
    const auto r = optimize(seed, obs, sc.vehicle, sc.params, mode);
    INFO(to_string(mode));
    REQUIRE(r.status == StoStatus::Converged);
    CHECK(r.iterations <= 5);
    CHECK(min_corner_clearance(r.trajectory, sc.vehicle, obs) > 0.0);
    CHECK(r.history.size() == static_cast<std::size_t>(r.iterations));
    CHECK(r.corridors.size() == static_cast<std::size_t>(r.iterations));
  }
}
