#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace gsnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

struct Segment2 {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
};

struct Aabb2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  [[nodiscard]] bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  void expand(const Vec2& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
};

struct Aabb3 {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  [[nodiscard]] Vec3 extent() const { return max - min; }
  [[nodiscard]] Vec3 center() const { return 0.5 * (min + max); }
  [[nodiscard]] double volume() const {
    const Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  return (p - closest_point_on_segment(p, a, b)).norm();
}

double segment_segment_distance(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1);

bool segments_intersect(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1);

// Signed area; positive for counter-clockwise rings.
double signed_area(std::span<const Vec2> ring);

double perimeter(std::span<const Vec2> ring);

// Even-odd containment test. Boundary points may go either way.
bool point_in_ring(const Vec2& p, std::span<const Vec2> ring);

// Distance from p to the closest ring edge.
double distance_to_ring(const Vec2& p, std::span<const Vec2> ring);

// True when no two non-adjacent edges touch.
bool ring_is_simple(std::span<const Vec2> ring);

// Andrew's monotone chain. Collinear points are dropped, output is CCW.
std::vector<Vec2> convex_hull_2d(std::span<const Vec2> points);

// Total length of a polyline.
double polyline_length(std::span<const Vec2> pts);

// Distance from p to a polyline (a single point is allowed).
double distance_to_polyline(const Vec2& p, std::span<const Vec2> pts);

}  // namespace gsnav
