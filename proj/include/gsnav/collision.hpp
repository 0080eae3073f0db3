#pragma once

#include "gsnav/geometry.hpp"
#include "gsnav/hull3d.hpp"
#include "gsnav/scene.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsnav {

// Strictly convex CCW polygon with positive area.
class ConvexPolygon2 {
 public:
  ConvexPolygon2() = default;
  // Throws DegenerateInputError unless vertices form a strictly convex CCW ring.
  explicit ConvexPolygon2(std::vector<Vec2> ccw_vertices);

  // Convex hull of arbitrary points; throws DegenerateInputError when collinear.
  static ConvexPolygon2 hull_of(std::span<const Vec2> points);

  [[nodiscard]] const std::vector<Vec2>& vertices() const { return vertices_; }
  [[nodiscard]] std::size_t size() const { return vertices_.size(); }
  [[nodiscard]] double area() const;
  [[nodiscard]] Vec2 centroid() const;
  [[nodiscard]] Aabb2 bounds() const;
  [[nodiscard]] bool contains(const Vec2& p, double tol = 0.0) const;
  [[nodiscard]] ConvexPolygon2 translated(const Vec2& d) const;

 private:
  std::vector<Vec2> vertices_;
};

struct CollisionBody {
  std::string instance_id;
  std::vector<ConvexHull3> hulls;
  bool is_static = true;
};

struct CollisionParams {
  double link_distance = 0.05;  // single-linkage threshold
  double surface_density = 3600.0;  // synthesized surface samples per m^2
  std::size_t min_surface_points = 64;
  std::size_t max_surface_points = 60000;
};

// Single-linkage connected components with distance threshold tau.
// Returns a component label per point, labels numbered in order of first appearance.
std::vector<int> link_components(std::span<const Vec3> points, double tau);

CollisionBody build_collision_body(const ObjectInstance& obj, std::span<const Vec3> points,
                                   double link_distance = 0.05);

// Number of synthesized surface samples for an object under params.
std::size_t surface_sample_count(const ObjectInstance& obj, const CollisionParams& params);

// One body per scene object, in scene order.
std::vector<CollisionBody> build_scene_bodies(const Scene& scene, const CollisionParams& params = {});

struct Contact {
  bool in_contact = false;
  double penetration_depth = 0.0;
  Vec2 normal = Vec2::UnitX();
};

Contact disc_vs_polygon(const Vec2& center, double radius, const ConvexPolygon2& poly);
Contact disc_vs_segment(const Vec2& center, double radius, const Segment2& seg);

// Signed distance from p to a convex polygon boundary (negative inside).
double signed_distance(const Vec2& p, const ConvexPolygon2& poly);

struct RayHit {
  double t = 0.0;
  std::string instance_id;
  std::size_t body_index = 0;
  Vec3 normal = Vec3::Zero();
};

// Nearest hull entry at t > 0. Hulls containing the origin are ignored.
std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, std::span<const CollisionBody> bodies);

// Same query with per-hull bounding boxes precomputed, for many rays.
class RayCaster {
 public:
  explicit RayCaster(std::span<const CollisionBody> bodies);
  [[nodiscard]] std::optional<RayHit> cast(const Vec3& origin, const Vec3& dir) const;

 private:
  struct Entry {
    const ConvexHull3* hull;
    std::size_t body;
    Aabb3 box;
  };
  std::span<const CollisionBody> bodies_;
  std::vector<Entry> entries_;
};

void write_collision_bodies(std::span<const CollisionBody> bodies, const std::filesystem::path& file);
std::vector<CollisionBody> read_collision_bodies(const std::filesystem::path& file);

}  // namespace gsnav
