#include "stopt/sto.hpp"

#include "stopt/gjk.hpp"
#include "stopt/log.hpp"
#include "stopt/speed_plan.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stopt {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Equality or two-sided rows collected as triplets plus bounds.
struct RowBuilder {
  Triplets triplets;
  std::vector<double> lower;
  std::vector<double> upper;

  int rows() const { return static_cast<int>(lower.size()); }

  int add(double lo, double hi) {
    lower.push_back(lo);
    upper.push_back(hi);
    return rows() - 1;
  }
  void coef(int row, int col, double value) {
    if (value != 0.0) triplets.emplace_back(row, col, value);
  }
  qp::SparseMatrix matrix(int cols) const {
    qp::SparseMatrix m(rows(), cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
  }
};

qp::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const qp::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double nearest_branch(double angle, double target) {
  return angle + 2.0 * std::numbers::pi * std::round((target - angle) / (2.0 * std::numbers::pi));
}

qp::Vector pack(const SegmentedTrajectory& traj, const VariableLayout& layout) {
  qp::Vector x = qp::Vector::Zero(layout.size());
  for (std::size_t s = 0; s < traj.segments.size(); ++s) {
    const auto& seg = traj.segments[s];
    for (std::size_t k = 0; k < seg.states.size(); ++k) {
      for (int c = 0; c < 5; ++c) x(layout.state(s, k, c)) = seg.states[k](c);
    }
    for (std::size_t k = 0; k < seg.controls.size(); ++k) {
      for (int c = 0; c < 2; ++c) x(layout.control(s, k, c)) = seg.controls[k](c);
    }
    for (std::size_t k = 0; k < seg.slacks.size(); ++k) x(layout.slack(s, k)) = seg.slacks[k];
  }
  return x;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::Sto ? "sto" : "baseline"; }

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "sto") return Mode::Sto;
  if (text == "baseline") return Mode::Baseline;
  return std::nullopt;
}

std::string_view to_string(StoStatus s) {
  switch (s) {
    case StoStatus::Converged: return "converged";
    case StoStatus::MaxIterations: return "max_iter";
    case StoStatus::QpInfeasible: return "qp_infeasible";
    case StoStatus::CorridorInfeasible: return "corridor_infeasible";
  }
  return "unknown";
}

void StoParams::validate() const {
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("cost weights must be non-negative");
  }
  if (!(kappa_max > 0.0) || !(accel_max > 0.0) || !(curvature_rate_max > 0.0) ||
      !(v_max > 0.0) || !(v_min < 0.0)) {
    throw std::invalid_argument("bounds must be positive (v_min negative)");
  }
  if (!(position_proximity.array() > 0.0).all() || !(heading_proximity > 0.0)) {
    throw std::invalid_argument("proximity bounds must be positive");
  }
  if (!(feasibility_tolerance.array() > 0.0).all()) {
    throw std::invalid_argument("feasibility tolerance must be positive");
  }
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(timestep > 0.0)) throw std::invalid_argument("timestep must be positive");
}

VariableLayout::VariableLayout(const SegmentedTrajectory& reference) {
  int offset = 0;
  for (const auto& seg : reference.segments) {
    Block b;
    b.points = seg.states.size();
    const int n = static_cast<int>(b.points);
    b.states = offset;
    offset += 5 * n;
    b.controls = offset;
    offset += 2 * std::max(n - 1, 0);
    b.slacks = offset;
    offset += n;
    blocks_.push_back(b);
  }
  total_ = offset;
}

int VariableLayout::state(std::size_t segment, std::size_t k, int component) const {
  return blocks_[segment].states + 5 * static_cast<int>(k) + component;
}

int VariableLayout::control(std::size_t segment, std::size_t k, int component) const {
  return blocks_[segment].controls + 2 * static_cast<int>(k) + component;
}

int VariableLayout::slack(std::size_t segment, std::size_t k) const {
  return blocks_[segment].slacks + static_cast<int>(k);
}

void unwrap_headings(SegmentedTrajectory& trajectory) {
  bool have_prev = false;
  double prev = 0.0;
  for (auto& seg : trajectory.segments) {
    for (auto& x : seg.states) {
      if (have_prev) x(idx::kTheta) = prev + wrap_angle(x(idx::kTheta) - prev);
      prev = x(idx::kTheta);
      have_prev = true;
    }
  }
}

Subproblem assemble_subproblem(const SegmentedTrajectory& reference, const Corridor& corridor,
                               const VehicleGeometry& vehicle, const StoParams& params,
                               Mode mode, const Pose2& start, const Pose2& goal) {
  if (reference.segments.empty()) throw std::invalid_argument("empty reference trajectory");
  if (corridor.segments.size() != reference.segments.size()) {
    throw std::invalid_argument("corridor segment count does not match the reference");
  }
  for (std::size_t s = 0; s < reference.segments.size(); ++s) {
    const auto& seg = reference.segments[s];
    if (corridor.segments[s].size() != seg.states.size()) {
      throw std::invalid_argument("corridor region count does not match the reference");
    }
    if (seg.states.empty() || seg.controls.size() + 1 != seg.states.size()) {
      throw std::invalid_argument("reference segment needs N states and N-1 controls");
    }
  }

  Subproblem sub{{}, VariableLayout(reference)};
  const VariableLayout& L = sub.layout;
  const int n = L.size();
  const double dt = reference.timestep;
  const auto& w = params.weights;
  const std::size_t M = reference.segments.size();

  RowBuilder eq;
  RowBuilder in;

  for (std::size_t s = 0; s < M; ++s) {
    const auto& seg = reference.segments[s];
    for (std::size_t k = 0; k + 1 < seg.states.size(); ++k) {
      const auto lin = linearize_step(seg.states[k], seg.controls[k], dt);
      for (int r = 0; r < 5; ++r) {
        const int row = eq.add(lin.c(r), lin.c(r));
        eq.coef(row, L.state(s, k + 1, r), 1.0);
        for (int c = 0; c < 5; ++c) eq.coef(row, L.state(s, k, c), -lin.A(r, c));
        for (int c = 0; c < 2; ++c) eq.coef(row, L.control(s, k, c), -lin.B(r, c));
      }
    }
  }
  sub.dynamics_rows = eq.rows();

  std::vector<int> shift_components{idx::kX, idx::kY, idx::kTheta};
  if (mode == Mode::Baseline) shift_components.push_back(idx::kKappa);
  for (std::size_t s = 0; s + 1 < M; ++s) {
    const std::size_t last = L.points(s) - 1;
    for (int c : shift_components) {
      const int row = eq.add(0.0, 0.0);
      eq.coef(row, L.state(s + 1, 0, c), 1.0);
      eq.coef(row, L.state(s, last, c), -1.0);
    }
  }
  sub.switching_rows = eq.rows() - sub.dynamics_rows;

  auto fix = [&](int col, double value) {
    const int row = eq.add(value, value);
    eq.coef(row, col, 1.0);
  };
  const auto& first = reference.segments.front().states.front();
  const auto& final_state = reference.segments.back().states.back();
  const std::size_t last_seg = M - 1;
  const std::size_t last_k = L.points(last_seg) - 1;
  fix(L.state(0, 0, idx::kX), start.x);
  fix(L.state(0, 0, idx::kY), start.y);
  fix(L.state(0, 0, idx::kTheta), nearest_branch(start.theta, first(idx::kTheta)));
  fix(L.state(last_seg, last_k, idx::kX), goal.x);
  fix(L.state(last_seg, last_k, idx::kY), goal.y);
  fix(L.state(last_seg, last_k, idx::kTheta), nearest_branch(goal.theta, final_state(idx::kTheta)));
  for (std::size_t s = 0; s < M; ++s) {
    fix(L.state(s, 0, idx::kV), 0.0);
    if (L.points(s) > 1) fix(L.state(s, L.points(s) - 1, idx::kV), 0.0);
  }
  sub.endpoint_rows = eq.rows() - sub.dynamics_rows - sub.switching_rows;

  // One bound row per variable.
  std::vector<double> lo(static_cast<std::size_t>(n), -qp::kInfinity);
  std::vector<double> hi(static_cast<std::size_t>(n), qp::kInfinity);
  auto bound = [&](int col, double l, double u) {
    lo[static_cast<std::size_t>(col)] = l;
    hi[static_cast<std::size_t>(col)] = u;
  };
  qp::Vector hdiag = qp::Vector::Zero(n);
  qp::Vector g = qp::Vector::Zero(n);
  for (std::size_t s = 0; s < M; ++s) {
    const auto& seg = reference.segments[s];
    const bool forward = seg.direction == Direction::Forward;
    for (std::size_t k = 0; k < seg.states.size(); ++k) {
      const State& r = seg.states[k];
      const Vec2& dp = params.position_proximity;
      bound(L.state(s, k, idx::kX), r(idx::kX) - dp.x(), r(idx::kX) + dp.x());
      bound(L.state(s, k, idx::kY), r(idx::kY) - dp.y(), r(idx::kY) + dp.y());
      bound(L.state(s, k, idx::kTheta), r(idx::kTheta) - params.heading_proximity,
            r(idx::kTheta) + params.heading_proximity);
      bound(L.state(s, k, idx::kV), forward ? 0.0 : params.v_min, forward ? params.v_max : 0.0);
      bound(L.state(s, k, idx::kKappa), -params.kappa_max, params.kappa_max);
      bound(L.slack(s, k), 0.0, qp::kInfinity);

      const double tracking[3] = {w[0], w[1], w[2]};
      for (int c = 0; c < 3; ++c) {
        hdiag(L.state(s, k, c)) = 2.0 * tracking[c];
        g(L.state(s, k, c)) = -2.0 * tracking[c] * r(c);
      }
      hdiag(L.state(s, k, idx::kV)) = 2.0 * w[3];
      hdiag(L.state(s, k, idx::kKappa)) = 2.0 * w[4];
      hdiag(L.slack(s, k)) = 2.0 * w[5];
    }
    for (std::size_t k = 0; k < seg.controls.size(); ++k) {
      bound(L.control(s, k, idx::kAccel), -params.accel_max, params.accel_max);
      bound(L.control(s, k, idx::kCurvRate), -params.curvature_rate_max,
            params.curvature_rate_max);
      hdiag(L.control(s, k, idx::kAccel)) = 2.0 * w[6];
      hdiag(L.control(s, k, idx::kCurvRate)) = 2.0 * w[7];
    }
  }
  for (int col = 0; col < n; ++col) {
    const int row = in.add(lo[static_cast<std::size_t>(col)], hi[static_cast<std::size_t>(col)]);
    in.coef(row, col, 1.0);
  }

  // Corners stay inside the region up to the shared slack.
  const int before_corners = in.rows();
  for (std::size_t s = 0; s < M; ++s) {
    const auto& seg = reference.segments[s];
    for (std::size_t k = 0; k < seg.states.size(); ++k) {
      const auto& region = corridor.segments[s][k];
      for (Corner c : kCorners) {
        const auto lin = linearize_corner(seg.states[k], vehicle, c);
        for (const auto& h : region.halfspaces) {
          const Eigen::RowVector3d row_coef = h.normal.transpose() * lin.jacobian;
          const int row = in.add(-qp::kInfinity, h.offset - h.normal.dot(lin.offset));
          in.coef(row, L.state(s, k, idx::kX), row_coef(0));
          in.coef(row, L.state(s, k, idx::kY), row_coef(1));
          in.coef(row, L.state(s, k, idx::kTheta), row_coef(2));
          in.coef(row, L.slack(s, k), -1.0);
        }
      }
    }
  }
  sub.corner_rows = in.rows() - before_corners;

  auto& p = sub.problem;
  p.H = qp::SparseMatrix(n, n);
  p.H.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = 0; i < n; ++i) {
    if (hdiag(i) != 0.0) p.H.insert(i, i) = hdiag(i);
  }
  p.H.makeCompressed();
  p.g = g;
  p.A_eq = eq.matrix(n);
  p.b_eq = to_vector(eq.lower);
  p.A_in = in.matrix(n);
  p.l_in = to_vector(in.lower);
  p.u_in = to_vector(in.upper);
  return sub;
}

SegmentedTrajectory extract_trajectory(const qp::Vector& x, const VariableLayout& layout,
                                       const SegmentedTrajectory& reference) {
  if (x.size() != layout.size()) throw std::invalid_argument("solution size mismatch");
  SegmentedTrajectory out;
  out.timestep = reference.timestep;
  for (std::size_t s = 0; s < layout.segment_count(); ++s) {
    Segment seg;
    seg.direction = reference.segments[s].direction;
    const std::size_t N = layout.points(s);
    for (std::size_t k = 0; k < N; ++k) {
      State st;
      for (int c = 0; c < 5; ++c) st(c) = x(layout.state(s, k, c));
      seg.states.push_back(st);
      seg.slacks.push_back(x(layout.slack(s, k)));
    }
    for (std::size_t k = 0; k + 1 < N; ++k) {
      Control u;
      for (int c = 0; c < 2; ++c) u(c) = x(layout.control(s, k, c));
      seg.controls.push_back(u);
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

double min_corner_clearance(const SegmentedTrajectory& trajectory, const VehicleGeometry& vehicle,
                            std::span<const BufferedObstacle> obstacles) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : trajectory.segments) {
    for (const auto& x : seg.states) {
      for (const auto& c : corners(x, vehicle)) {
        for (const auto& o : obstacles) {
          const auto d = point_distance(o, c);
          best = std::min(best, d.contains_origin ? 0.0 : d.distance);
        }
      }
    }
  }
  return best;
}

StoResult optimize_reference(SegmentedTrajectory reference,
                             std::span<const BufferedObstacle> obstacles,
                             const VehicleGeometry& vehicle, const StoParams& params, Mode mode,
                             const Pose2& start, const Pose2& goal,
                             const OptimizeOptions& options) {
  params.validate();
  vehicle.validate();
  const auto t_start = std::chrono::steady_clock::now();

  StoResult result;
  unwrap_headings(reference);
  for (auto& seg : reference.segments) seg.slacks.assign(seg.states.size(), 0.0);
  result.reference = reference;
  result.trajectory = reference;

  CorridorOptions corridor_options;
  corridor_options.proximity = params.position_proximity;

  SegmentedTrajectory current = reference;
  qp::Vector warm = pack(current, VariableLayout(current));

  for (int it = 1; it <= params.max_iterations; ++it) {
    IterationRecord rec;
    auto t0 = std::chrono::steady_clock::now();
    Corridor corridor;
    try {
      corridor = build_corridor(current, vehicle, obstacles, corridor_options);
    } catch (const CorridorInfeasible& err) {
      result.status = StoStatus::CorridorInfeasible;
      result.failed_iteration = it;
      result.message = std::string(err.what()) + " (segment " + std::to_string(err.segment()) +
                       ", point " + std::to_string(err.index()) + ")";
      result.iterations = it;
      result.total_seconds = seconds_since(t_start);
      log::error("iteration ", it, ": ", result.message);
      return result;
    }
    rec.corridor_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const Subproblem sub =
        assemble_subproblem(current, corridor, vehicle, params, mode, start, goal);
    if (options.dump_qp_dir) {
      qp::write_matrix_market(sub.problem,
                              *options.dump_qp_dir / ("iter_" + std::to_string(it)));
    }
    const qp::QpSolution sol = qp::solve(sub.problem, warm, options.qp);
    rec.qp_seconds = seconds_since(t0);
    rec.qp_status = sol.status;
    rec.qp_iterations = sol.iterations;
    rec.qp_polished = sol.polished;
    rec.qp_objective = sol.objective;
    log::info("iteration ", it, ": corridor ", rec.corridor_seconds, " s, qp ", rec.qp_seconds,
              " s, ", qp::to_string(sol.status), " after ", sol.iterations, " ", qp::to_string(sol.method), " iterations",
              sol.polished ? " (polished)" : "");

    if (options.keep_corridors) result.corridors.push_back(std::move(corridor));
    result.iterations = it;

    if (sol.status == qp::QpStatus::Infeasible) {
      result.history.push_back(rec);
      result.status = StoStatus::QpInfeasible;
      result.failed_iteration = it;
      result.message = "QP subproblem reported infeasible";
      result.total_seconds = seconds_since(t_start);
      log::error("iteration ", it, ": ", result.message);
      return result;
    }
    if (sol.status == qp::QpStatus::MaxIterations) {
      log::warn("iteration ", it, ": QP hit its iteration cap (primal residual ",
                sol.primal_residual, ", dual residual ", sol.dual_residual,
                "); continuing with the best iterate");
    }

    SegmentedTrajectory next = extract_trajectory(sol.primal, sub.layout, current);
    rec.feasibility_error = eval_feasibility_error(next);
    for (const auto& seg : next.segments) {
      for (double sv : seg.slacks) rec.max_slack = std::max(rec.max_slack, sv);
    }
    rec.min_clearance = min_corner_clearance(next, vehicle, obstacles);
    result.history.push_back(rec);
    result.trajectory = next;
    log::info("iteration ", it, ": feasibility error ", rec.feasibility_error.transpose(),
              ", max slack ", rec.max_slack, ", corner clearance ", rec.min_clearance);

    const bool feasible =
        (rec.feasibility_error.array() < params.feasibility_tolerance.array()).all();
    // Slack may let corners leave the corridor; such an iterate is only accepted once
    // every corner is clear of the obstacles.
    const bool safe = rec.min_clearance > 0.0;
    if (feasible && safe && sol.status == qp::QpStatus::Optimal) {
      result.status = StoStatus::Converged;
      result.total_seconds = seconds_since(t_start);
      return result;
    }
    current = std::move(next);
    warm = sol.primal;
  }
  result.status = StoStatus::MaxIterations;
  result.message = "feasibility tolerance not reached within the iteration cap";
  result.total_seconds = seconds_since(t_start);
  log::warn(result.message);
  return result;
}

StoResult optimize(const LabeledPath& path, std::span<const BufferedObstacle> obstacles,
                   const VehicleGeometry& vehicle, const StoParams& params, Mode mode,
                   const OptimizeOptions& options) {
  if (path.segments.empty() || path.segments.front().poses.empty() ||
      path.segments.back().poses.empty()) {
    throw std::invalid_argument("path has no poses");
  }
  params.validate();
  const Pose2 start = path.segments.front().poses.front();
  const Pose2 goal = path.segments.back().poses.back();
  return optimize_reference(plan_simple_speed(path, params, mode == Mode::Baseline), obstacles, vehicle, params, mode,
                            start, goal, options);
}

}  // namespace stopt
