#pragma once

#include "generators.hpp"

#include <algorithm>
#include <functional>
#include <span>

namespace stopt::testing {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
bool polygon_contains(std::span<const Vec2> ccw, const Vec2& p);
/// 0 inside, distance to the boundary otherwise.
double point_polygon_distance(std::span<const Vec2> ccw, const Vec2& p);

/// Distance from `p` to the base shape: exact for polygons and disks, dense boundary
/// sampling plus golden-section refinement for ellipses.
double oracle_point_base_distance(const ShapeSample& s, const Vec2& p);
/// Distance from a convex polygon to the base shape, same construction.
double oracle_polygon_base_distance(std::span<const Vec2> ccw, const ShapeSample& s);
/// Distances to the buffered set.
double oracle_point_distance(const ShapeSample& s, const Vec2& p);
double oracle_polygon_distance(std::span<const Vec2> ccw, const ShapeSample& s);

/// Random buffered obstacles scattered around a reference path, each keeping at least
/// `clearance` from every reference footprint (checked with the oracle above).
std::vector<ShapeSample> random_obstacle_field(Rng& rng, std::span<const State> reference,
                                               const VehicleGeometry& vehicle, int count,
                                               double clearance = 0.05);

/// Accelerated projected gradient on l <= x <= u, run until the iterates stop moving.
Eigen::VectorXd projected_gradient_box(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                       int max_iterations = 200000);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;  // includes wrong-sign multipliers
  double max() const { return std::max({stationarity, primal, complementarity}); }
};
KktResiduals kkt_residuals(const qp::QpProblem& p, const qp::QpSolution& s);

/// Central differences of f: R^n -> R^m at x.
Eigen::MatrixXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace stopt::testing
