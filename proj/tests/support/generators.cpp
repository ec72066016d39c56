#include "generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stopt::testing {

std::vector<Vec2> random_convex_polygon(Rng& rng, const Vec2& center, double radius, int min_vertices,
                                        int max_vertices) {
  while (true) {
    const int n = rng.integer(min_vertices, max_vertices);
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    std::sort(angles.begin(), angles.end());
    const double sx = rng.uniform(0.4, 1.0) * radius;
    const double sy = rng.uniform(0.4, 1.0) * radius;
    const double rot = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Mat2 R = Eigen::Rotation2Dd(rot).toRotationMatrix();
    std::vector<Vec2> v;
    for (double a : angles) v.push_back(center + R * Vec2(sx * std::cos(a), sy * std::sin(a)));
    // Points on an ellipse are in convex position; reject nearly collinear triples.
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const Vec2& a = v[static_cast<std::size_t>(i)];
      const Vec2& b = v[static_cast<std::size_t>((i + 1) % n)];
      const Vec2& c = v[static_cast<std::size_t>((i + 2) % n)];
      if (cross(b - a, c - b) < 1e-3 * radius * radius || (b - a).norm() < 1e-3 * radius) ok = false;
    }
    if (ok) return v;
  }
}

ConvexShape ShapeSample::shape() const {
  switch (kind) {
    case Kind::Polygon: return ConvexShape::polygon(vertices);
    case Kind::Disk: return ConvexShape::disk(center, semi_axes.x());
    case Kind::Ellipse: return ConvexShape::ellipse(center, semi_axes, rotation);
  }
  return ConvexShape::disk(center, 1.0);
}

Vec2 ShapeSample::boundary(double t) const {
  if (kind == Kind::Polygon) {
    const double n = static_cast<double>(vertices.size());
    const double s = t * n;
    const auto i = static_cast<std::size_t>(std::floor(s)) % vertices.size();
    const double f = s - std::floor(s);
    return vertices[i] + f * (vertices[(i + 1) % vertices.size()] - vertices[i]);
  }
  const double a = 2.0 * std::numbers::pi * t;
  const double rx = semi_axes.x();
  const double ry = kind == Kind::Disk ? semi_axes.x() : semi_axes.y();
  const double rot = kind == Kind::Disk ? 0.0 : rotation;
  const Vec2 local(rx * std::cos(a), ry * std::sin(a));
  return center + Eigen::Rotation2Dd(rot).toRotationMatrix() * local;
}

bool ShapeSample::base_contains(const Vec2& p) const {
  if (kind == Kind::Polygon) {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const Vec2& a = vertices[i];
      const Vec2& b = vertices[(i + 1) % vertices.size()];
      if (cross(b - a, p - a) < 0.0) return false;
    }
    return true;
  }
  const double ry = kind == Kind::Disk ? semi_axes.x() : semi_axes.y();
  const double rot = kind == Kind::Disk ? 0.0 : rotation;
  const Vec2 local = Eigen::Rotation2Dd(-rot).toRotationMatrix() * (p - center);
  const double q = std::pow(local.x() / semi_axes.x(), 2) + std::pow(local.y() / ry, 2);
  return q <= 1.0;
}

ShapeSample random_shape(Rng& rng, const Vec2& center, double size, double max_buffer) {
  ShapeSample s;
  const int k = rng.integer(0, 2);
  s.buffer = rng.coin() ? 0.0 : rng.uniform(0.0, max_buffer);
  s.center = center;
  if (k == 0) {
    s.kind = ShapeSample::Kind::Polygon;
    s.vertices = random_convex_polygon(rng, center, size);
  } else if (k == 1) {
    s.kind = ShapeSample::Kind::Disk;
    s.semi_axes = Vec2::Constant(rng.uniform(0.2, 1.0) * size);
  } else {
    s.kind = ShapeSample::Kind::Ellipse;
    s.semi_axes = Vec2(rng.uniform(0.2, 1.0) * size, rng.uniform(0.1, 1.0) * size);
    s.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
  }
  return s;
}

State random_state(Rng& rng) {
  State x;
  x << rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-std::numbers::pi, std::numbers::pi),
      rng.uniform(-3, 3), rng.uniform(-0.16, 0.16);
  return x;
}

Control random_control(Rng& rng) {
  Control u;
  u << rng.uniform(-1, 1), rng.uniform(-0.03, 0.03);
  return u;
}

BoxQp random_box_qp(Rng& rng, int n) {
  BoxQp q;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) M(i, j) = rng.normal();
  }
  q.H = M.transpose() * M / n + rng.uniform(0.1, 1.0) * Eigen::MatrixXd::Identity(n, n);
  q.g.resize(n);
  q.lo.resize(n);
  q.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    q.g(i) = 3.0 * rng.normal();
    q.lo(i) = rng.uniform(-2.0, 0.0);
    q.hi(i) = q.lo(i) + rng.uniform(0.2, 3.0);
    if (rng.integer(0, 9) == 0) q.lo(i) = -qp::kInfinity;
    if (rng.integer(0, 9) == 0) q.hi(i) = qp::kInfinity;
  }

  auto& p = q.problem;
  p.H = q.H.sparseView();
  p.g = q.g;
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  // Each bound row is scaled by a random positive factor so the equilibration has work to do.
  std::vector<Eigen::Triplet<double>> t;
  p.l_in.resize(n);
  p.u_in.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = std::exp(rng.uniform(-2.0, 2.0));
    t.emplace_back(i, i, s);
    p.l_in(i) = q.lo(i) <= -qp::kInfinity ? -qp::kInfinity : s * q.lo(i);
    p.u_in(i) = q.hi(i) >= qp::kInfinity ? qp::kInfinity : s * q.hi(i);
  }
  p.A_in.resize(n, n);
  p.A_in.setFromTriplets(t.begin(), t.end());
  return q;
}

std::vector<State> random_reference(Rng& rng, int points, double spacing) {
  std::vector<State> out;
  State x;
  x << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-std::numbers::pi, std::numbers::pi), 1.0, 0.0;
  double kappa = rng.uniform(-0.16, 0.16);
  for (int i = 0; i < points; ++i) {
    if (i % 15 == 0) kappa = rng.uniform(-0.16, 0.16);
    x(idx::kKappa) = kappa;
    out.push_back(x);
    x(idx::kX) += spacing * std::cos(x(idx::kTheta));
    x(idx::kY) += spacing * std::sin(x(idx::kTheta));
    x(idx::kTheta) += spacing * kappa;
  }
  return out;
}

}  // namespace stopt::testing
