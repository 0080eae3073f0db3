#include "gsnav/synthetic.hpp"

#include "gsnav/error.hpp"
#include "gsnav/rng.hpp"

#include <fmt/format.h>

#include <set>

namespace gsnav {

namespace {

ObjectInstance box(std::string id, std::string category, Vec3 lo, Vec3 hi,
                   std::map<std::string, std::string> attributes = {}) {
  ObjectInstance o;
  o.instance_id = std::move(id);
  o.category = std::move(category);
  o.aabb = {lo, hi};
  o.attributes = std::move(attributes);
  if (is_door_category(o.category)) o.door_state = DoorState::open;
  return o;
}

std::vector<Vec2> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

void add_outline(Scene& s, const std::vector<Vec2>& ring) {
  for (std::size_t i = 0; i < ring.size(); ++i) s.walls.push_back({ring[i], ring[(i + 1) % ring.size()]});
}

Eigen::Vector3f category_color(std::string_view category) {
  const std::uint64_t h = stable_hash(category);
  return {0.25f + 0.7f * static_cast<float>(h & 0xff) / 255.0f, 0.25f + 0.7f * static_cast<float>((h >> 8) & 0xff) / 255.0f,
          0.25f + 0.7f * static_cast<float>((h >> 16) & 0xff) / 255.0f};
}

Gaussian splat(const Vec3& p, float size, const Eigen::Vector3f& color, Rng& rng) {
  Gaussian g;
  g.mean = p.cast<float>();
  g.scale = Eigen::Vector3f::Constant(size);
  g.opacity = 0.8f;
  const float shade = static_cast<float>(rng.uniform(0.9, 1.0));
  g.color = (color * shade).cwiseMin(1.0f);
  return g;
}

// Spreads n gaussians over object surfaces, the floor and the walls.
void populate_gaussians(Scene& s, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t on_walls = n / 5;
  const std::size_t on_floor = n / 5;
  const std::size_t on_objects = n - on_walls - on_floor;

  std::vector<double> areas;
  for (const auto& o : s.objects) {
    const Vec3 e = o.aabb.extent();
    areas.push_back(2.0 * (e.x() * e.y() + e.y() * e.z() + e.x() * e.z()));
  }
  const auto per_object = apportion(areas, on_objects);
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto color = category_color(s.objects[i].category);
    for (const auto& p : object_surface_points(s.objects[i], per_object[i])) s.gaussians.push_back(splat(p, 0.03f, color, rng));
  }

  std::vector<double> room_areas;
  for (const auto& r : s.rooms) room_areas.push_back(std::abs(signed_area(r.polygon)));
  const auto per_room = apportion(room_areas, on_floor);
  for (std::size_t r = 0; r < s.rooms.size(); ++r) {
    Aabb2 b{s.rooms[r].polygon.front(), s.rooms[r].polygon.front()};
    for (const auto& v : s.rooms[r].polygon) b.expand(v);
    for (std::size_t k = 0; k < per_room[r];) {
      const Vec2 p(rng.uniform(b.min.x(), b.max.x()), rng.uniform(b.min.y(), b.max.y()));
      if (!point_in_ring(p, s.rooms[r].polygon)) continue;
      s.gaussians.push_back(splat({p.x(), p.y(), s.floor_z}, 0.06f, {0.55f, 0.45f, 0.35f}, rng));
      ++k;
    }
  }

  std::vector<double> lengths;
  for (const auto& w : s.walls) lengths.push_back((w.b - w.a).norm());
  const auto per_wall = apportion(lengths, on_walls);
  for (std::size_t w = 0; w < s.walls.size(); ++w)
    for (std::size_t k = 0; k < per_wall[w]; ++k) {
      const Vec2 p = s.walls[w].a + rng.uniform() * (s.walls[w].b - s.walls[w].a);
      s.gaussians.push_back(splat({p.x(), p.y(), rng.uniform(s.floor_z, s.ceiling_z)}, 0.06f, {0.85f, 0.85f, 0.8f}, rng));
    }
}

void fill_taxonomy(Scene& s) {
  std::set<std::string> cats;
  for (const auto& o : s.objects) cats.insert(o.category);
  s.taxonomy.assign(cats.begin(), cats.end());
}

}  // namespace

Scene make_apartment_small() {
  Scene s;
  s.scene_id = "apartment_small";
  s.floor_z = 0.0;
  s.ceiling_z = 2.5;
  s.rooms = {{"living", "living_room", rect(0, 0, 6, 4)}, {"kitchen", "kitchen", rect(6, 0, 10, 4)}};
  add_outline(s, rect(0, 0, 10, 4));
  s.walls.push_back({{6, 0}, {6, 1.5}});
  s.walls.push_back({{6, 2.5}, {6, 4}});

  s.objects = {
      box("sofa_1", "sofa", {0.3, 0.2, 0}, {2.3, 1.1, 0.9}, {{"color", "gray"}}),
      box("coffee_table_1", "coffee_table", {0.8, 1.8, 0}, {1.8, 2.4, 0.45}, {{"material", "wood"}}),
      box("tv_stand_1", "tv_stand", {0.5, 3.5, 0}, {2.5, 3.95, 0.6}, {{"color", "black"}}),
      box("armchair_1", "armchair", {3.5, 0.2, 0}, {4.4, 1.0, 0.9}, {{"color", "blue"}}),
      box("bookshelf_1", "bookshelf", {5.0, 3.55, 0}, {5.9, 3.95, 2.1}, {{"material", "wood"}}),
      box("floor_lamp_1", "floor_lamp", {5.5, 0.2, 0}, {5.8, 0.5, 1.7}),
      box("plant_1", "plant", {3.0, 3.5, 0}, {3.4, 3.9, 1.3}, {{"color", "green"}}),
      box("door_1", "door", {6.02, 2.55, 0}, {6.08, 3.45, 2.0}),
      box("fridge_1", "fridge", {9.2, 3.2, 0}, {9.95, 3.95, 1.9}, {{"color", "white"}}),
      box("counter_1", "counter", {7.0, 3.4, 0}, {9.0, 3.95, 0.9}, {{"material", "marble"}}),
      box("dining_table_1", "dining_table", {7.5, 1.0, 0}, {8.7, 2.0, 0.75}, {{"material", "wood"}}),
      box("chair_1", "chair", {7.7, 0.3, 0}, {8.2, 0.8, 0.9}, {{"color", "red"}}),
  };
  fill_taxonomy(s);
  populate_gaussians(s, 5000, stable_hash(s.scene_id));
  return s;
}

Scene make_two_room() {
  Scene s;
  s.scene_id = "two_room";
  s.rooms = {{"west", "bedroom", rect(0, 0, 5, 4)}, {"east", "office", rect(5, 0, 10, 4)}};
  add_outline(s, rect(0, 0, 10, 4));
  s.walls.push_back({{5, 0}, {5, 1.4}});
  s.walls.push_back({{5, 2.6}, {5, 4}});
  s.objects = {
      box("table_1", "table", {1.5, 2.8, 0}, {2.5, 3.6, 0.75}),
      box("table_2", "table", {7.5, 0.4, 0}, {8.5, 1.2, 0.75}),
  };
  fill_taxonomy(s);
  populate_gaussians(s, 1000, stable_hash(s.scene_id));
  return s;
}

Scene make_sealed_box(double size) {
  Scene s;
  s.scene_id = "sealed_box";
  s.rooms = {{"box", "room", rect(0, 0, size, size)}};
  add_outline(s, rect(0, 0, size, size));
  const double c = 0.5 * size;
  s.objects = {box("crate_1", "crate", {c - 0.3, c - 0.3, 0}, {c + 0.3, c + 0.3, 0.8})};
  fill_taxonomy(s);
  populate_gaussians(s, 500, stable_hash(s.scene_id));
  return s;
}

std::vector<std::string> synthetic_scene_names() { return {"apartment_small", "two_room", "sealed_box"}; }

Scene make_synthetic_scene(std::string_view name) {
  if (name == "apartment_small") return make_apartment_small();
  if (name == "two_room") return make_two_room();
  if (name == "sealed_box") return make_sealed_box();
  throw UnknownNameError(fmt::format("unknown synthetic scene '{}'", name));
}

}  // namespace gsnav
