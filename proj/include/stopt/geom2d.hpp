#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <variant>
#include <vector>

namespace stopt {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kGeomTolerance = 1e-9;
inline constexpr double kSingularDeterminant = 1e-12;

class SingularMapError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// p -> linear * p + offset.
struct AffineMap2 {
  Mat2 linear = Mat2::Identity();
  Vec2 offset = Vec2::Zero();

  static AffineMap2 identity() { return {}; }

  bool invertible() const { return std::abs(linear.determinant()) > kSingularDeterminant; }

  /// Throws SingularMapError when the linear part is (numerically) singular.
  AffineMap2 inverse() const;
};

Vec2 apply_map(const AffineMap2& map, const Vec2& p);
Vec2 invert_map(const AffineMap2& map, const Vec2& p);

/// Vertices in counter-clockwise order. Shapes built through ConvexShape::polygon are
/// validated; internal clipping may leave fewer vertices, which the support function
/// still handles as the convex hull of the point list.
struct Polygon {
  std::vector<Vec2> vertices;
};

struct Disk {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

/// Image of the closed unit disk under `map`.
struct EllipseShape {
  AffineMap2 map;
};

class ConvexShape {
 public:
  using Variant = std::variant<Polygon, Disk, EllipseShape>;

  /// Throws std::invalid_argument unless the vertices form a strictly convex CCW polygon.
  static ConvexShape polygon(std::vector<Vec2> vertices);
  static ConvexShape disk(const Vec2& center, double radius);
  static ConvexShape ellipse(const AffineMap2& map);
  static ConvexShape ellipse(const Vec2& center, const Vec2& semi_axes, double rotation);
  /// Oriented rectangle; `center` is the geometric center.
  static ConvexShape rectangle(const Vec2& center, double length, double width, double heading);

  /// Skips validation. Used for clipped polygons and mapped images of validated shapes.
  static ConvexShape from_points(std::vector<Vec2> vertices);

  const Variant& variant() const { return shape_; }
  bool is_polygon() const { return std::holds_alternative<Polygon>(shape_); }

  /// A point known to belong to the shape (first vertex, or mapped center).
  Vec2 seed_point() const;

 private:
  explicit ConvexShape(Variant shape) : shape_(std::move(shape)) {}
  Variant shape_;
};

/// Convex set dilated by a disk of radius `buffer`. Only ever queried through its
/// support function.
struct BufferedObstacle {
  ConvexShape base;
  double buffer = 0.0;

  Vec2 seed_point() const { return base.seed_point(); }
};

BufferedObstacle make_buffered(ConvexShape base, double buffer);

/// argmax over the shape of <p, direction>. Polygon ties resolve to the lowest index.
Vec2 support(const ConvexShape& shape, const Vec2& direction);
Vec2 support_buffered(const BufferedObstacle& obstacle, const Vec2& direction);

ConvexShape transform_shape(const AffineMap2& map, const ConvexShape& shape);

/// Support function of F^-1(O_b) where F is `map`: the obstacle seen from the
/// coordinates in which the ellipse defined by `map` is the unit disk.
class InverseSpaceObstacle {
 public:
  InverseSpaceObstacle(const BufferedObstacle& obstacle, const AffineMap2& map);

  Vec2 operator()(const Vec2& direction) const;
  Vec2 seed_point() const { return base_.seed_point(); }

 private:
  ConvexShape base_;
  Mat2 buffer_linear_;  // r * C^-1
  bool has_buffer_;
};

/// Signed area based test used throughout: >0 for a left turn a->b->c.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool is_finite(const Vec2& v);
double wrap_angle(double angle);

/// Boundary samples of a buffered obstacle, counter-clockwise, for plotting.
std::vector<Vec2> outline(const BufferedObstacle& obstacle, int samples = 96);

/// Sutherland-Hodgman clip of a polygon against {p | normal^T p <= offset}.
std::vector<Vec2> clip_polygon(const std::vector<Vec2>& vertices, const Vec2& normal,
                               double offset);

}  // namespace stopt
