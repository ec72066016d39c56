#include "stopt/speed_plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stopt {

TrapezoidalProfile TrapezoidalProfile::plan(double length, double accel, double v_max) {
  if (!(accel > 0.0) || !(v_max > 0.0)) {
    throw std::invalid_argument("speed profile needs positive acceleration and speed limits");
  }
  TrapezoidalProfile p;
  p.length = std::max(length, 0.0);
  p.accel = accel;
  if (p.length == 0.0) return p;

  const double ramp = v_max * v_max / (2.0 * accel);
  if (2.0 * ramp <= p.length) {
    p.peak_speed = v_max;
    p.accel_distance = ramp;
    p.cruise_time = (p.length - 2.0 * ramp) / v_max;
  } else {
    p.peak_speed = std::sqrt(p.length * accel);
    p.accel_distance = 0.5 * p.length;
  }
  p.accel_time = p.peak_speed / accel;
  p.total_time = 2.0 * p.accel_time + p.cruise_time;
  return p;
}

double TrapezoidalProfile::speed_at(double t) const {
  if (t <= 0.0 || t >= total_time) return 0.0;
  if (t < accel_time) return accel * t;
  if (t <= accel_time + cruise_time) return peak_speed;
  return accel * (total_time - t);
}

double TrapezoidalProfile::distance_at(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= total_time) return length;
  if (t < accel_time) return 0.5 * accel * t * t;
  if (t <= accel_time + cruise_time) return accel_distance + peak_speed * (t - accel_time);
  const double r = total_time - t;
  return length - 0.5 * accel * r * r;
}

double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ca = (a - c).norm();
  const double denom = ab * bc * ca;
  if (denom < 1e-12) return 0.0;
  return 2.0 * cross(b - a, c - b) / denom;
}

namespace {

struct PathSampler {
  const std::vector<Pose2>& poses;
  std::vector<double> arc;
  std::vector<double> kappa;

  PathSampler(const std::vector<Pose2>& p, double sign, double kappa_max) : poses(p) {
    arc.resize(poses.size(), 0.0);
    for (std::size_t i = 1; i < poses.size(); ++i) {
      arc[i] = arc[i - 1] + (poses[i].position() - poses[i - 1].position()).norm();
    }
    kappa.assign(poses.size(), 0.0);
    if (poses.size() >= 3) {
      for (std::size_t i = 1; i + 1 < poses.size(); ++i) {
        kappa[i] = sign * circumcircle_curvature(poses[i - 1].position(), poses[i].position(),
                                                 poses[i + 1].position());
      }
      kappa.front() = kappa[1];
      kappa.back() = kappa[poses.size() - 2];
    }
    for (auto& k : kappa) k = std::clamp(k, -kappa_max, kappa_max);
  }

  double length() const { return arc.back(); }

  // Pose and curvature at arc length s, linear between samples.
  std::pair<Pose2, double> at(double s) const {
    if (poses.size() == 1 || s <= 0.0) return {poses.front(), kappa.front()};
    if (s >= arc.back()) return {poses.back(), kappa.back()};
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const auto i = static_cast<std::size_t>(std::distance(arc.begin(), it)) - 1;
    const double span = arc[i + 1] - arc[i];
    const double t = span > 0.0 ? (s - arc[i]) / span : 0.0;
    const Pose2& a = poses[i];
    const Pose2& b = poses[i + 1];
    Pose2 out{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
              a.theta + t * wrap_angle(b.theta - a.theta)};
    return {out, kappa[i] + t * (kappa[i + 1] - kappa[i])};
  }
};

// Cruise speed at which the largest curvature change within a few metres can still be
// followed at the curvature-rate limit without leaving the heading proximity box. Steering
// through a change dk at speed v lags the reference heading by roughly dk^2 v / (8 psi_max)
// when the change is centered. A curvature jump at a segment boundary counts as a change
// when the optimizer has to steer through it.
double curvature_speed_cap(const PathSampler& path, const StoParams& params, double boundary_jump) {
  constexpr double kWindow = 3.0;
  constexpr double kFloor = 0.25;
  double dk = boundary_jump;
  for (std::size_t i = 0; i < path.kappa.size(); ++i) {
    for (std::size_t j = i + 1; j < path.kappa.size() && path.arc[j] - path.arc[i] <= kWindow;
         ++j) {
      dk = std::max(dk, std::abs(path.kappa[j] - path.kappa[i]));
    }
  }
  if (dk < 1e-9) return std::numeric_limits<double>::infinity();
  const double cap = params.curvature_rate_max * params.heading_proximity / (dk * dk);
  return std::max(cap, kFloor);
}

}  // namespace

SegmentedTrajectory plan_simple_speed(const LabeledPath& path, const StoParams& params,
                                      bool continuous_switch_curvature) {
  const double dt = params.timestep;
  if (!(dt > 0.0)) throw std::invalid_argument("timestep must be positive");
  SegmentedTrajectory traj;
  traj.timestep = dt;

  std::vector<PathSampler> samplers;
  for (const auto& ps : path.segments) {
    if (ps.poses.empty()) throw std::invalid_argument("path segment without poses");
    samplers.emplace_back(ps.poses, direction_sign(ps.direction), params.kappa_max);
  }

  for (std::size_t s = 0; s < path.segments.size(); ++s) {
    const auto& ps = path.segments[s];
    const double sign = direction_sign(ps.direction);
    const PathSampler& sampler = samplers[s];
    double jump = 0.0;
    if (continuous_switch_curvature) {
      if (s > 0) jump = std::abs(sampler.kappa.front() - samplers[s - 1].kappa.back());
      if (s + 1 < samplers.size()) {
        jump = std::max(jump, std::abs(sampler.kappa.back() - samplers[s + 1].kappa.front()));
      }
    }
    const double v_limit = std::min(sign > 0.0 ? params.v_max : -params.v_min,
                                    curvature_speed_cap(sampler, params, jump));
    const auto profile = TrapezoidalProfile::plan(sampler.length(), params.accel_max, v_limit);

    Segment seg;
    seg.direction = ps.direction;
    std::size_t intervals = 1;
    double stretch = 1.0;
    if (profile.length > 0.0) {
      intervals = std::max<std::size_t>(2, static_cast<std::size_t>(
                                               std::ceil(profile.total_time / dt - 1e-9)));
      stretch = profile.total_time / (static_cast<double>(intervals) * dt);
    }
    for (std::size_t k = 0; k <= intervals; ++k) {
      const double t = static_cast<double>(k) * dt * stretch;
      const auto [pose, kappa] = sampler.at(profile.distance_at(t));
      State x;
      x << pose.x, pose.y, pose.theta, sign * stretch * profile.speed_at(t), kappa;
      seg.states.push_back(x);
    }
    seg.states.front()(idx::kV) = 0.0;
    seg.states.back()(idx::kV) = 0.0;
    for (std::size_t k = 0; k + 1 < seg.states.size(); ++k) {
      Control u;
      u << (seg.states[k + 1](idx::kV) - seg.states[k](idx::kV)) / dt,
          (seg.states[k + 1](idx::kKappa) - seg.states[k](idx::kKappa)) / dt;
      seg.controls.push_back(u);
    }
    traj.segments.push_back(std::move(seg));
  }
  return traj;
}

}  // namespace stopt
