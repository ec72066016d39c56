#include "stopt/gjk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stopt {

namespace {

struct Candidate {
  Vec2 point;
  Simplex2 simplex;
};

Candidate closest_on_segment(const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  Candidate c;
  if (len2 <= 1e-24) {
    c.point = a;
    c.simplex.push(a);
    return c;
  }
  const double t = -a.dot(ab) / len2;
  if (t <= 0.0) {
    c.point = a;
    c.simplex.push(a);
  } else if (t >= 1.0) {
    c.point = b;
    c.simplex.push(b);
  } else {
    c.point = a + t * ab;
    c.simplex.push(a);
    c.simplex.push(b);
  }
  return c;
}

Vec2 polygon_support(std::span<const Vec2> polygon, const Vec2& v) {
  std::size_t best = 0;
  double best_value = polygon[0].dot(v);
  for (std::size_t i = 1; i < polygon.size(); ++i) {
    const double value = polygon[i].dot(v);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return polygon[best];
}

}  // namespace

std::pair<Vec2, Simplex2> closest_point_on_simplex(const Simplex2& simplex) {
  if (simplex.size == 1) return {simplex.points[0], simplex};
  if (simplex.size == 2) {
    auto c = closest_on_segment(simplex.points[0], simplex.points[1]);
    return {c.point, c.simplex};
  }

  const Vec2& a = simplex.points[0];
  const Vec2& b = simplex.points[1];
  const Vec2& c = simplex.points[2];
  const double area = cross(b - a, c - a);
  const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), 1e-300});
  if (std::abs(area) > 1e-14 * scale) {
    // Origin inside when it lies on the same side of all three edges.
    const double s = area > 0.0 ? 1.0 : -1.0;
    const double w0 = s * cross(b - a, -a);
    const double w1 = s * cross(c - b, -b);
    const double w2 = s * cross(a - c, -c);
    if (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) return {Vec2::Zero(), simplex};
  }

  const std::array<Candidate, 3> edges = {closest_on_segment(a, b), closest_on_segment(b, c),
                                          closest_on_segment(c, a)};
  const auto best = std::min_element(edges.begin(), edges.end(), [](const auto& l, const auto& r) {
    return l.point.squaredNorm() < r.point.squaredNorm();
  });
  return {best->point, best->simplex};
}

ClosestPointResult point_distance(const BufferedObstacle& obstacle, const Vec2& p,
                                  const GjkOptions& options) {
  auto shifted = [&](const Vec2& v) -> Vec2 { return support_buffered(obstacle, v) - p; };
  return closest_point_to_origin(shifted, Vec2(obstacle.seed_point() - p), options);
}

ClosestPointResult polygon_distance(std::span<const Vec2> polygon,
                                    const BufferedObstacle& obstacle,
                                    const GjkOptions& options) {
  auto poly = [&](const Vec2& v) -> Vec2 { return polygon_support(polygon, v); };
  auto obs = [&](const Vec2& v) -> Vec2 { return support_buffered(obstacle, v); };
  return distance_between(poly, polygon[0], obs, obstacle.seed_point(), options);
}

double signed_polygon_distance(std::span<const Vec2> polygon, const BufferedObstacle& obstacle,
                               int extra_normals, const GjkOptions& options) {
  const auto result = polygon_distance(polygon, obstacle, options);
  if (!result.contains_origin && result.distance > 0.0) return result.distance;

  auto overlap = [&](const Vec2& n) {
    return polygon_support(polygon, n).dot(n) - support_buffered(obstacle, -n).dot(n);
  };
  // overlap(n) is the support function of polygon - obstacle. For two polygons its minimum
  // sits at an edge normal of one of them; the buffer adds a constant. Curved obstacles
  // get a uniform sweep refined around the best direction.
  double depth = std::numeric_limits<double>::infinity();
  auto edge_normals = [&](std::span<const Vec2> pts, double sign) {
    const std::size_t m = pts.size();
    for (std::size_t i = 0; i < m && m > 1; ++i) {
      const Vec2 e = pts[(i + 1) % m] - pts[i];
      if (e.squaredNorm() <= 1e-24) continue;
      depth = std::min(depth, overlap(sign * Vec2(e.y(), -e.x()).normalized()));
    }
  };
  edge_normals(polygon, 1.0);
  if (const auto* base = std::get_if<Polygon>(&obstacle.base.variant())) {
    edge_normals(base->vertices, -1.0);
  }
  if (extra_normals > 0) {
    auto at = [&](double t) { return overlap(Vec2(std::cos(t), std::sin(t))); };
    const double step = 2.0 * std::numbers::pi / extra_normals;
    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int k = 0; k < extra_normals; ++k) {
      const double v = at(step * k);
      if (v < best_value) {
        best_value = v;
        best = k;
      }
    }
    double a = step * (best - 1);
    double b = step * (best + 1);
    for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
      const double m1 = a + (b - a) / 3.0;
      const double m2 = b - (b - a) / 3.0;
      if (at(m1) < at(m2)) {
        b = m2;
      } else {
        a = m1;
      }
    }
    depth = std::min({depth, best_value, at(0.5 * (a + b))});
  }
  return -std::max(depth, 0.0);
}

}  // namespace stopt
