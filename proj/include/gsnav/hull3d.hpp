#pragma once

#include "gsnav/geometry.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace gsnav {

struct ConvexHull3 {
  std::vector<Vec3> vertices;
  // Triangles, counter-clockwise seen from outside.
  std::vector<std::array<int, 3>> faces;
  // Unit outward normal and plane offset per face: normal.dot(x) == offset on the face.
  std::vector<Vec3> normals;
  std::vector<double> offsets;

  [[nodiscard]] double volume() const;
  [[nodiscard]] Vec3 centroid() const;
  [[nodiscard]] Aabb3 bounds() const;
  [[nodiscard]] std::size_t edge_count() const { return faces.size() * 3 / 2; }
  // Largest signed plane distance; <= 0 inside.
  [[nodiscard]] double plane_distance(const Vec3& p) const;
  [[nodiscard]] bool contains(const Vec3& p, double tol = 1e-9) const { return plane_distance(p) <= tol; }
  // Euclidean distance to the solid (0 inside).
  [[nodiscard]] double distance(const Vec3& p) const;

  // Ray entry parameter, if the ray enters the hull at t > t_min.
  [[nodiscard]] std::optional<std::pair<double, Vec3>> ray_entry(const Vec3& origin, const Vec3& dir,
                                                                 double t_min = 1e-12) const;

  // Convex cross-section of the solid restricted to z in [z_lo, z_hi],
  // projected onto the xy plane. Empty when the slab misses the hull.
  [[nodiscard]] std::vector<Vec2> section(double z_lo, double z_hi) const;

  // Rebuilds normals and offsets from vertices and faces.
  void update_planes();
};

// Quickhull. Throws DegenerateInputError for fewer than four points or
// coplanar input.
ConvexHull3 convex_hull_3d(std::span<const Vec3> points);

// Hull of a 2D convex ring extruded between z_lo and z_hi.
ConvexHull3 extrude_polygon(std::span<const Vec2> ring, double z_lo, double z_hi);

}  // namespace gsnav
