#pragma once

#include "stopt/geom2d.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>

namespace stopt {

struct Simplex2 {
  std::array<Vec2, 3> points;
  int size = 0;

  std::span<const Vec2> view() const { return {points.data(), static_cast<std::size_t>(size)}; }
  void push(const Vec2& p) { points[static_cast<std::size_t>(size++)] = p; }
};

struct ClosestPointResult {
  Vec2 point = Vec2::Zero();
  double distance = 0.0;
  bool contains_origin = false;
  int iterations = 0;
};

struct GjkOptions {
  double tolerance = 1e-8;
  int max_iterations = 64;
};

class GjkError : public std::runtime_error {
 public:
  GjkError(const std::string& what, ClosestPointResult best)
      : std::runtime_error(what), best_(best) {}
  const ClosestPointResult& best_iterate() const { return best_; }

 private:
  ClosestPointResult best_;
};

/// Closest point of conv(simplex) to the origin, plus the smallest sub-simplex
/// (vertex, edge or triangle) whose hull contains it.
std::pair<Vec2, Simplex2> closest_point_on_simplex(const Simplex2& simplex);

/// GJK distance query: the point of minimum norm in the convex set described by
/// `support_fn`. `seed` must belong to the set.
///
/// Terminates on the duality gap | |p| - <p, w>/|p| | < tolerance, where w is the
/// support point in direction -p; the gap bounds the distance error.
template <class Support>
ClosestPointResult closest_point_to_origin(const Support& support_fn, const Vec2& seed,
                                           const GjkOptions& options = {}) {
  Simplex2 simplex;
  simplex.push(seed);
  ClosestPointResult best{seed, seed.norm(), false, 0};
  Vec2 p = seed;

  for (int it = 1; it <= options.max_iterations; ++it) {
    best.iterations = it;
    const double norm = p.norm();
    if (norm < options.tolerance) {
      return {Vec2::Zero(), 0.0, true, it};
    }
    const Vec2 w = support_fn(Vec2(-p));
    const double gap = norm - p.dot(w) / norm;
    if (std::abs(gap) < options.tolerance) return {p, norm, false, it};

    // A repeated support point means the simplex cannot improve any further.
    for (const auto& q : simplex.view()) {
      if ((q - w).squaredNorm() <= 1e-24) return {p, norm, false, it};
    }
    simplex.push(w);
    auto [next, reduced] = closest_point_on_simplex(simplex);
    simplex = reduced;
    if (simplex.size == 3) return {Vec2::Zero(), 0.0, true, it};
    if (next.norm() >= norm) {
      // Round-off stalls; p is already the best iterate.
      return {p, norm, false, it};
    }
    p = next;
    best = {p, p.norm(), false, it};
  }
  throw GjkError("GJK did not converge within the iteration cap", best);
}

/// Distance between two convex sets via their Minkowski difference A - B.
template <class SupportA, class SupportB>
ClosestPointResult distance_between(const SupportA& a, const Vec2& seed_a, const SupportB& b,
                                    const Vec2& seed_b, const GjkOptions& options = {}) {
  auto diff = [&](const Vec2& v) -> Vec2 { return a(v) - b(Vec2(-v)); };
  return closest_point_to_origin(diff, Vec2(seed_a - seed_b), options);
}

/// Distance from a point to a buffered obstacle (0 with contains_origin when inside).
ClosestPointResult point_distance(const BufferedObstacle& obstacle, const Vec2& p,
                                  const GjkOptions& options = {});

/// Distance between a convex polygon (vertex list) and a buffered obstacle.
ClosestPointResult polygon_distance(std::span<const Vec2> polygon,
                                    const BufferedObstacle& obstacle,
                                    const GjkOptions& options = {});

/// Signed distance between a convex polygon and a buffered obstacle. Positive values
/// come from GJK; when the sets overlap, the result is minus an upper bound on the
/// penetration depth: exact for polygon obstacles (edge normals of both sets), refined
/// from `extra_normals` uniformly spaced directions otherwise.
double signed_polygon_distance(std::span<const Vec2> polygon, const BufferedObstacle& obstacle,
                               int extra_normals = 720, const GjkOptions& options = {});

}  // namespace stopt
