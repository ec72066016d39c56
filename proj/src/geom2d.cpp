#include "stopt/geom2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stopt {

namespace {

void require_direction(const Vec2& direction) {
  if (!is_finite(direction) || direction.squaredNorm() == 0.0) {
    throw std::invalid_argument("support direction must be finite and non-zero");
  }
}

Vec2 ellipse_support(const AffineMap2& map, const Vec2& direction) {
  const Vec2 w = map.linear.transpose() * direction;
  const double n = w.norm();
  if (n == 0.0) return map.offset;
  return map.linear * (w / n) + map.offset;
}

}  // namespace

AffineMap2 AffineMap2::inverse() const {
  if (!invertible()) throw SingularMapError("affine map has a singular linear part");
  AffineMap2 inv;
  inv.linear = linear.inverse();
  inv.offset = -inv.linear * offset;
  return inv;
}

Vec2 apply_map(const AffineMap2& map, const Vec2& p) { return map.linear * p + map.offset; }

Vec2 invert_map(const AffineMap2& map, const Vec2& p) {
  if (!map.invertible()) throw SingularMapError("affine map has a singular linear part");
  return map.linear.partialPivLu().solve(p - map.offset);
}

bool is_finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

double wrap_angle(double angle) {
  angle = std::remainder(angle, 2.0 * std::numbers::pi);
  if (angle <= -std::numbers::pi) angle += 2.0 * std::numbers::pi;
  return angle;
}

ConvexShape ConvexShape::polygon(std::vector<Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  for (const auto& v : vertices) {
    if (!is_finite(v)) throw std::invalid_argument("polygon vertex is not finite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((vertices[i] - vertices[j]).norm() <= kGeomTolerance) {
        throw std::invalid_argument("polygon has duplicate vertices");
      }
    }
  }
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
    const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    const double c = cross(e0, e1);
    if (c <= kSingularDeterminant * e0.norm() * e1.norm()) {
      throw std::invalid_argument("polygon must be strictly convex and counter-clockwise");
    }
    turning += std::atan2(c, e0.dot(e1));
  }
  // A self-intersecting star also turns left at every vertex; reject by total turning.
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) {
    throw std::invalid_argument("polygon winds more than once");
  }
  return ConvexShape(Polygon{std::move(vertices)});
}

ConvexShape ConvexShape::from_points(std::vector<Vec2> vertices) {
  if (vertices.empty()) throw std::invalid_argument("empty point set");
  return ConvexShape(Polygon{std::move(vertices)});
}

ConvexShape ConvexShape::disk(const Vec2& center, double radius) {
  if (!is_finite(center) || !(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("disk needs a finite center and positive radius");
  }
  return ConvexShape(Disk{center, radius});
}

ConvexShape ConvexShape::ellipse(const AffineMap2& map) {
  if (!map.invertible()) throw std::invalid_argument("ellipse map must be invertible");
  if (!map.linear.allFinite() || !is_finite(map.offset)) {
    throw std::invalid_argument("ellipse map is not finite");
  }
  return ConvexShape(EllipseShape{map});
}

ConvexShape ConvexShape::ellipse(const Vec2& center, const Vec2& semi_axes, double rotation) {
  if (!(semi_axes.x() > 0.0) || !(semi_axes.y() > 0.0)) {
    throw std::invalid_argument("ellipse semi-axes must be positive");
  }
  AffineMap2 map;
  map.linear = Eigen::Rotation2Dd(rotation).toRotationMatrix() * semi_axes.asDiagonal();
  map.offset = center;
  return ellipse(map);
}

ConvexShape ConvexShape::rectangle(const Vec2& center, double length, double width,
                                   double heading) {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("rectangle dimensions must be positive");
  }
  const Mat2 r = Eigen::Rotation2Dd(heading).toRotationMatrix();
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  return polygon({center + r * Vec2(-hl, -hw), center + r * Vec2(hl, -hw),
                  center + r * Vec2(hl, hw), center + r * Vec2(-hl, hw)});
}

Vec2 ConvexShape::seed_point() const {
  return std::visit(
      [](const auto& s) -> Vec2 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          return s.vertices.front();
        } else if constexpr (std::is_same_v<T, Disk>) {
          return s.center;
        } else {
          return s.map.offset;
        }
      },
      shape_);
}

BufferedObstacle make_buffered(ConvexShape base, double buffer) {
  if (!(buffer >= 0.0) || !std::isfinite(buffer)) {
    throw std::invalid_argument("obstacle buffer must be finite and non-negative");
  }
  return BufferedObstacle{std::move(base), buffer};
}

Vec2 support(const ConvexShape& shape, const Vec2& direction) {
  require_direction(direction);
  return std::visit(
      [&](const auto& s) -> Vec2 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          std::size_t best = 0;
          double best_value = s.vertices[0].dot(direction);
          for (std::size_t i = 1; i < s.vertices.size(); ++i) {
            const double value = s.vertices[i].dot(direction);
            if (value > best_value) {
              best_value = value;
              best = i;
            }
          }
          return s.vertices[best];
        } else if constexpr (std::is_same_v<T, Disk>) {
          return s.center + s.radius * direction.normalized();
        } else {
          return ellipse_support(s.map, direction);
        }
      },
      shape.variant());
}

Vec2 support_buffered(const BufferedObstacle& obstacle, const Vec2& direction) {
  const Vec2 p = support(obstacle.base, direction);
  if (obstacle.buffer == 0.0) return p;
  return p + obstacle.buffer * direction.normalized();
}

ConvexShape transform_shape(const AffineMap2& map, const ConvexShape& shape) {
  if (!map.invertible()) throw SingularMapError("cannot transform by a singular map");
  return std::visit(
      [&](const auto& s) -> ConvexShape {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          std::vector<Vec2> mapped;
          mapped.reserve(s.vertices.size());
          for (const auto& v : s.vertices) mapped.push_back(apply_map(map, v));
          // Reflections flip orientation.
          if (map.linear.determinant() < 0.0) std::reverse(mapped.begin(), mapped.end());
          return ConvexShape::from_points(std::move(mapped));
        } else if constexpr (std::is_same_v<T, Disk>) {
          const Mat2 linear = map.linear * s.radius;
          const Mat2 gram = linear.transpose() * linear;
          const double scale2 = 0.5 * gram.trace();
          if ((gram - scale2 * Mat2::Identity()).norm() <= 1e-12 * scale2) {
            return ConvexShape::disk(apply_map(map, s.center), std::sqrt(scale2));
          }
          return ConvexShape::ellipse(AffineMap2{linear, apply_map(map, s.center)});
        } else {
          return ConvexShape::ellipse(
              AffineMap2{map.linear * s.map.linear, apply_map(map, s.map.offset)});
        }
      },
      shape.variant());
}

InverseSpaceObstacle::InverseSpaceObstacle(const BufferedObstacle& obstacle,
                                           const AffineMap2& map)
    : base_(transform_shape(map.inverse(), obstacle.base)),
      buffer_linear_(obstacle.buffer * map.inverse().linear),
      has_buffer_(obstacle.buffer > 0.0) {}

Vec2 InverseSpaceObstacle::operator()(const Vec2& direction) const {
  Vec2 p = support(base_, direction);
  if (has_buffer_) {
    const Vec2 w = buffer_linear_.transpose() * direction;
    p += buffer_linear_ * (w / w.norm());
  }
  return p;
}

std::vector<Vec2> outline(const BufferedObstacle& obstacle, int samples) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * std::numbers::pi * i / samples;
    pts.push_back(support_buffered(obstacle, Vec2(std::cos(a), std::sin(a))));
  }
  return pts;
}

std::vector<Vec2> clip_polygon(const std::vector<Vec2>& vertices, const Vec2& normal,
                               double offset) {
  std::vector<Vec2> out;
  const std::size_t n = vertices.size();
  if (n == 0) return out;
  if (n == 1) {
    if (normal.dot(vertices[0]) <= offset) out.push_back(vertices[0]);
    return out;
  }
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = vertices[i];
    const Vec2& nxt = vertices[(i + 1) % n];
    const double dc = normal.dot(cur) - offset;
    const double dn = normal.dot(nxt) - offset;
    if (dc <= 0.0) out.push_back(cur);
    if ((dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  // Drop near-duplicates introduced at vertices lying on the clip line.
  std::vector<Vec2> dedup;
  dedup.reserve(out.size());
  for (const auto& p : out) {
    if (dedup.empty() || (p - dedup.back()).norm() > 1e-12) dedup.push_back(p);
  }
  while (dedup.size() > 1 && (dedup.front() - dedup.back()).norm() <= 1e-12) dedup.pop_back();
  return dedup;
}

}  // namespace stopt
