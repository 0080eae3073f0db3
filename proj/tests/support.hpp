#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/synthetic.hpp"
#include "gsnav/rng.hpp"
#include "gsnav/world.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>

namespace testing {

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gsnav_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline gsnav::ObjectInstance make_box(std::string id, std::string category, gsnav::Vec3 lo, gsnav::Vec3 hi) {
  gsnav::ObjectInstance o;
  o.instance_id = std::move(id);
  o.category = std::move(category);
  o.aabb = {lo, hi};
  if (gsnav::is_door_category(o.category)) o.door_state = gsnav::DoorState::closed;
  return o;
}

inline std::vector<gsnav::Vec2> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

// Single room with outline walls and no objects.
inline gsnav::Scene empty_room(double w, double h, std::string id = "room") {
  gsnav::Scene s;
  s.scene_id = std::move(id);
  s.rooms = {{"main", "room", rect(0, 0, w, h)}};
  const auto r = rect(0, 0, w, h);
  for (std::size_t i = 0; i < 4; ++i) s.walls.push_back({r[i], r[(i + 1) % 4]});
  return s;
}

inline void add_object(gsnav::Scene& s, gsnav::ObjectInstance o) {
  if (std::find(s.taxonomy.begin(), s.taxonomy.end(), o.category) == s.taxonomy.end()) s.taxonomy.push_back(o.category);
  s.objects.push_back(std::move(o));
}

inline gsnav::World world_of(gsnav::Scene scene, gsnav::OccupancyParams params = {}) {
  auto bodies = gsnav::build_scene_bodies(scene);
  return gsnav::make_world(std::move(scene), std::move(bodies), params);
}

// Shared apartment world; building it takes a few hundred ms.
inline const gsnav::World& apartment() {
  static const gsnav::World w = world_of(gsnav::make_apartment_small());
  return w;
}

}  // namespace testing
