#include "gsnav/semantic_map.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace gsnav {

using nlohmann::json;

namespace {
constexpr double kThinFootprint = 1e-3;
}

ConvexPolygon2 project_footprint(std::span<const Vec3> points) {
  if (points.empty()) throw DegenerateInputError("project_footprint: no points");
  std::vector<Vec2> flat;
  flat.reserve(points.size());
  for (const auto& p : points) flat.emplace_back(p.x(), p.y());
  auto ring = convex_hull_2d(flat);
  if (ring.size() >= 3) return ConvexPolygon2(std::move(ring));

  Vec2 a = ring.front();
  Vec2 b = ring.size() > 1 ? ring.back() : a;
  Vec2 dir = b - a;
  if (dir.norm() == 0.0) {
    // Single location: a square of side epsilon.
    dir = Vec2::UnitX();
    a -= dir * 0.5 * kThinFootprint;
    b += dir * 0.5 * kThinFootprint;
  }
  dir.normalize();
  const Vec2 side(-dir.y() * 0.5 * kThinFootprint, dir.x() * 0.5 * kThinFootprint);
  return ConvexPolygon2({a - side, b - side, b + side, a + side});
}

Region fuse_masks(std::span<const ConvexPolygon2> masks) {
  std::vector<std::vector<Vec2>> rings;
  rings.reserve(masks.size());
  for (const auto& m : masks) rings.push_back(m.vertices());
  return union_rings(rings);
}

SemanticTopDownMap build_semantic_map(const Scene& scene, std::span<const CollisionBody> bodies) {
  SemanticTopDownMap map;
  map.wall_segments = scene.walls;
  map.rooms = scene.rooms;
  Aabb2 bounds{Vec2::Constant(std::numeric_limits<double>::infinity()),
               Vec2::Constant(-std::numeric_limits<double>::infinity())};

  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const CollisionBody& body = bodies[i];
    const ObjectInstance* obj = scene.find_object(body.instance_id);
    if (obj == nullptr) throw ValidationError(fmt::format("collision body '{}' has no scene object", body.instance_id));
    ObjectFootprint fp;
    fp.instance_id = obj->instance_id;
    fp.category = obj->category;
    for (const auto& hull : body.hulls) {
      fp.masks.push_back(project_footprint(hull.vertices));
      for (const auto& v : fp.masks.back().vertices()) bounds.expand(v);
    }
    fp.region = fuse_masks(fp.masks);
    if (obj->door_state) map.door_marks[obj->instance_id] = *obj->door_state;
    map.footprints.emplace(fp.instance_id, std::move(fp));
  }
  for (const auto& w : scene.walls) {
    bounds.expand(w.a);
    bounds.expand(w.b);
  }
  for (const auto& r : scene.rooms)
    for (const auto& p : r.polygon) bounds.expand(p);
  if (!(bounds.min.x() <= bounds.max.x())) bounds = {Vec2::Zero(), Vec2::Zero()};
  map.bounds = bounds;
  return map;
}

ObstacleSet build_obstacles(const Scene& scene, std::span<const CollisionBody> bodies,
                            const SemanticTopDownMap& map, const OccupancyParams& params) {
  ObstacleSet out;
  const double z_hi = scene.floor_z + params.slice_height;
  const double z_lo = params.band_min ? scene.floor_z + *params.band_min : z_hi;
  for (const auto& body : bodies) {
    const ObjectInstance* obj = scene.find_object(body.instance_id);
    if (obj != nullptr && obj->door_state) {
      // Doors contribute through their state, not their geometry.
      if (*obj->door_state != DoorState::closed) continue;
      const auto it = map.footprints.find(body.instance_id);
      if (it == map.footprints.end()) continue;
      for (const auto& m : it->second.masks) out.polygons.push_back({body.instance_id, m});
      continue;
    }
    for (const auto& hull : body.hulls) {
      auto ring = hull.section(z_lo, z_hi);
      if (ring.size() < 3) continue;
      try {
        out.polygons.push_back({body.instance_id, ConvexPolygon2(std::move(ring))});
      } catch (const DegenerateInputError&) {
        // Grazing contact with the slice plane, no area.
      }
    }
  }
  for (std::size_t i = 0; i < scene.walls.size(); ++i) out.walls.push_back({fmt::format("wall_{}", i), scene.walls[i]});
  return out;
}

std::optional<Cell> OccupancyGrid::cell_of(const Vec2& p) const {
  const auto x = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
  const auto y = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
  if (!in_bounds(x, y)) return std::nullopt;
  return Cell{x, y};
}

std::size_t OccupancyGrid::free_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{0}));
}

namespace {

std::array<Vec2, 4> box_corners(const Aabb2& b) {
  return {b.min, Vec2(b.max.x(), b.min.y()), b.max, Vec2(b.min.x(), b.max.y())};
}

double box_edges_to_segment(const Aabb2& box, const Vec2& a, const Vec2& b) {
  const auto c = box_corners(box);
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) d = std::min(d, segment_segment_distance(c[i], c[(i + 1) % 4], a, b));
  return d;
}

}  // namespace

double box_segment_distance(const Aabb2& box, const Segment2& seg) {
  if (box.contains(seg.a) || box.contains(seg.b)) return 0.0;
  return box_edges_to_segment(box, seg.a, seg.b);
}

double box_polygon_distance(const Aabb2& box, const ConvexPolygon2& poly) {
  const auto& v = poly.vertices();
  for (const auto& p : v)
    if (box.contains(p)) return 0.0;
  for (const auto& c : box_corners(box))
    if (poly.contains(c)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) d = std::min(d, box_edges_to_segment(box, v[i], v[(i + 1) % v.size()]));
  return d;
}

OccupancyGrid rasterize_obstacles(const ObstacleSet& obstacles, const Aabb2& bounds, const OccupancyParams& params) {
  if (!(params.resolution > 0.0)) throw ValidationError("occupancy resolution must be > 0");
  OccupancyGrid grid;
  grid.resolution = params.resolution;
  grid.slice_height = params.slice_height;
  const double res = params.resolution;
  grid.origin = Vec2(std::floor(bounds.min.x() / res) - 1.0, std::floor(bounds.min.y() / res) - 1.0) * res;
  grid.width = static_cast<int>(std::ceil((bounds.max.x() - grid.origin.x()) / res)) + 1;
  grid.height = static_cast<int>(std::ceil((bounds.max.y() - grid.origin.y()) / res)) + 1;
  grid.cells.assign(static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height), 0);

  const double r = params.inflate ? params.agent_radius : 0.0;
  // Touching at exactly the inflation radius does not block.
  const double limit = std::max(r - 1e-9, 1e-12);

  auto stamp = [&](const Aabb2& reach, auto&& dist) {
    const int x0 = std::max(0, static_cast<int>(std::floor((reach.min.x() - r - grid.origin.x()) / res)));
    const int y0 = std::max(0, static_cast<int>(std::floor((reach.min.y() - r - grid.origin.y()) / res)));
    const int x1 = std::min(grid.width - 1, static_cast<int>(std::floor((reach.max.x() + r - grid.origin.x()) / res)));
    const int y1 = std::min(grid.height - 1, static_cast<int>(std::floor((reach.max.y() + r - grid.origin.y()) / res)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        auto& cell = grid.cells[grid.index(x, y)];
        if (cell == 0 && dist(grid.cell_box({x, y})) < limit) cell = 1;
      }
  };

  for (const auto& p : obstacles.polygons)
    stamp(p.polygon.bounds(), [&](const Aabb2& box) { return box_polygon_distance(box, p.polygon); });
  for (const auto& w : obstacles.walls) {
    Aabb2 reach{w.segment.a.cwiseMin(w.segment.b), w.segment.a.cwiseMax(w.segment.b)};
    stamp(reach, [&](const Aabb2& box) { return box_segment_distance(box, w.segment); });
  }
  return grid;
}

OccupancyGrid build_occupancy(const Scene& scene, std::span<const CollisionBody> bodies, const OccupancyParams& params) {
  const auto map = build_semantic_map(scene, bodies);
  const auto obstacles = build_obstacles(scene, bodies, map, params);
  return rasterize_obstacles(obstacles, map.bounds, params);
}

std::vector<std::uint8_t> room_mask(const OccupancyGrid& grid, const Scene& scene, std::string_view label) {
  std::vector<std::uint8_t> mask(grid.cells.size(), 0);
  for (const auto& room : scene.rooms) {
    if (room.label != label && room.name != label) continue;
    for (int y = 0; y < grid.height; ++y)
      for (int x = 0; x < grid.width; ++x)
        if (point_in_ring(grid.center({x, y}), room.polygon)) mask[grid.index(x, y)] = 1;
  }
  return mask;
}

void write_occupancy(const OccupancyGrid& grid, const std::filesystem::path& pgm, const std::filesystem::path& sidecar) {
  std::ofstream os(pgm, std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", pgm.string()));
  os << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  std::string row(static_cast<std::size_t>(grid.width), '\0');
  for (int y = grid.height - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width; ++x) row[static_cast<std::size_t>(x)] = grid.blocked(x, y) ? '\0' : '\xff';
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  json meta = {{"resolution", grid.resolution},
               {"origin", {grid.origin.x(), grid.origin.y()}},
               {"slice_height", grid.slice_height}};
  std::ofstream js(sidecar);
  js << meta.dump(2) << "\n";
}

OccupancyGrid read_occupancy(const std::filesystem::path& pgm, const std::filesystem::path& sidecar) {
  std::ifstream js(sidecar);
  if (!js) throw ParseError(fmt::format("cannot open {}", sidecar.string()));
  json meta;
  try {
    js >> meta;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", sidecar.string(), e.what()));
  }
  OccupancyGrid grid;
  grid.resolution = meta.at("resolution").get<double>();
  grid.origin = Vec2(meta.at("origin")[0].get<double>(), meta.at("origin")[1].get<double>());
  grid.slice_height = meta.at("slice_height").get<double>();

  std::ifstream in(pgm, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", pgm.string()));
  std::string magic;
  int maxval = 0;
  in >> magic >> grid.width >> grid.height >> maxval;
  in.get();
  if (magic != "P5" || maxval != 255 || grid.width <= 0 || grid.height <= 0) throw ParseError("occupancy: bad PGM header");
  grid.cells.assign(static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height), 0);
  std::string row(static_cast<std::size_t>(grid.width), '\0');
  for (int y = grid.height - 1; y >= 0; --y) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row.size()))) throw ParseError("occupancy: truncated PGM");
    for (int x = 0; x < grid.width; ++x) grid.cells[grid.index(x, y)] = row[static_cast<std::size_t>(x)] == '\0' ? 1 : 0;
  }
  return grid;
}

namespace {

json ring_json(const std::vector<Vec2>& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x(), p.y()});
  if (!ring.empty()) out.push_back({ring.front().x(), ring.front().y()});
  return out;
}

}  // namespace

std::string semantic_map_json(const SemanticTopDownMap& map) {
  json features = json::array();
  for (const auto& [id, fp] : map.footprints) {
    json coords = json::array();
    for (const auto& poly : fp.region) {
      json rings = json::array({ring_json(poly.outer)});
      for (const auto& h : poly.holes) rings.push_back(ring_json(h));
      coords.push_back(rings);
    }
    json props = {{"kind", "object"}, {"instance_id", id}, {"category", fp.category}};
    if (const auto it = map.door_marks.find(id); it != map.door_marks.end()) props["door_state"] = to_string(it->second);
    features.push_back({{"type", "Feature"},
                        {"properties", props},
                        {"geometry", {{"type", "MultiPolygon"}, {"coordinates", coords}}}});
  }
  for (const auto& room : map.rooms) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"kind", "room"}, {"name", room.name}, {"label", room.label}}},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring_json(room.polygon)})}}}});
  }
  for (std::size_t i = 0; i < map.wall_segments.size(); ++i) {
    const auto& w = map.wall_segments[i];
    features.push_back({{"type", "Feature"},
                        {"properties", {{"kind", "wall"}, {"id", fmt::format("wall_{}", i)}, {"traversable", false}}},
                        {"geometry",
                         {{"type", "LineString"},
                          {"coordinates", json::array({{w.a.x(), w.a.y()}, {w.b.x(), w.b.y()}})}}}});
  }
  json doc = {{"type", "FeatureCollection"},
              {"bounds", {map.bounds.min.x(), map.bounds.min.y(), map.bounds.max.x(), map.bounds.max.y()}},
              {"features", features}};
  return doc.dump(2) + "\n";
}

}  // namespace gsnav
