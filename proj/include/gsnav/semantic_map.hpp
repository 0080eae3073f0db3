#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/polygon_set.hpp"
#include "gsnav/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

struct ObjectFootprint {
  std::string instance_id;
  std::string category;
  std::vector<ConvexPolygon2> masks;  // one per collision hull
  Region region;                      // fused masks
};

struct SemanticTopDownMap {
  std::map<std::string, ObjectFootprint> footprints;
  std::map<std::string, DoorState> door_marks;
  std::vector<Segment2> wall_segments;
  std::vector<Room> rooms;
  Aabb2 bounds;
};

// Top-down projection hull of surface points. Collinear input becomes a
// rectangle of width 1e-3 m along the segment.
ConvexPolygon2 project_footprint(std::span<const Vec3> points);

Region fuse_masks(std::span<const ConvexPolygon2> masks);

SemanticTopDownMap build_semantic_map(const Scene& scene, std::span<const CollisionBody> bodies);

struct OccupancyParams {
  double slice_height = 1.2;  // above floor_z
  // When set, obstacles are taken over the band [band_min, slice_height]
  // instead of the single slice.
  std::optional<double> band_min;
  double agent_radius = 0.25;
  double resolution = 0.05;
  bool inflate = true;
};

struct NamedPolygon {
  std::string instance_id;
  ConvexPolygon2 polygon;
};

struct NamedSegment {
  std::string id;
  Segment2 segment;
};

// The 2D world the agent collides with: hull sections at the slice height,
// closed-door footprints and wall segments.
struct ObstacleSet {
  std::vector<NamedPolygon> polygons;
  std::vector<NamedSegment> walls;
};

ObstacleSet build_obstacles(const Scene& scene, std::span<const CollisionBody> bodies,
                            const SemanticTopDownMap& map, const OccupancyParams& params);

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct OccupancyGrid {
  double resolution = 0.05;
  Vec2 origin = Vec2::Zero();  // lower-left corner of cell (0, 0)
  int width = 0;
  int height = 0;
  double slice_height = 1.2;
  std::vector<std::uint8_t> cells;  // row-major, 1 = blocked

  [[nodiscard]] bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  [[nodiscard]] bool blocked(int x, int y) const { return cells[index(x, y)] != 0; }
  [[nodiscard]] bool free(int x, int y) const { return in_bounds(x, y) && !blocked(x, y); }
  [[nodiscard]] std::optional<Cell> cell_of(const Vec2& p) const;
  [[nodiscard]] Vec2 center(Cell c) const {
    return origin + Vec2((c.x + 0.5) * resolution, (c.y + 0.5) * resolution);
  }
  [[nodiscard]] Aabb2 cell_box(Cell c) const {
    const Vec2 lo = origin + Vec2(c.x * resolution, c.y * resolution);
    return {lo, lo + Vec2(resolution, resolution)};
  }
  [[nodiscard]] std::size_t free_count() const;
};

// Distance between an axis-aligned box and a convex polygon or segment (0 on overlap).
double box_polygon_distance(const Aabb2& box, const ConvexPolygon2& poly);
double box_segment_distance(const Aabb2& box, const Segment2& seg);

// Rasterizes obstacles over the given bounds. A cell is blocked when it lies
// within agent_radius (0 when inflate is off) of any obstacle.
OccupancyGrid rasterize_obstacles(const ObstacleSet& obstacles, const Aabb2& bounds, const OccupancyParams& params);

OccupancyGrid build_occupancy(const Scene& scene, std::span<const CollisionBody> bodies,
                              const OccupancyParams& params = {});

// Cells whose centers lie in a room with the given label or name.
std::vector<std::uint8_t> room_mask(const OccupancyGrid& grid, const Scene& scene, std::string_view label);

// PGM (P5, 0 = blocked, 255 = free, top row = highest y) plus a JSON sidecar
// {resolution, origin, slice_height}.
void write_occupancy(const OccupancyGrid& grid, const std::filesystem::path& pgm, const std::filesystem::path& sidecar);
OccupancyGrid read_occupancy(const std::filesystem::path& pgm, const std::filesystem::path& sidecar);

// GeoJSON-like FeatureCollection of footprints, doors, walls and rooms.
std::string semantic_map_json(const SemanticTopDownMap& map);

}  // namespace gsnav
