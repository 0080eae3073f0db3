#pragma once

#include "gsnav/geometry.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gsnav {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr std::uint32_t kGaussianFormatVersion = 1;

enum class DoorState { open, closed, half_open };
enum class Mobility { static_body, movable, articulated };

std::string_view to_string(DoorState s);
std::string_view to_string(Mobility m);
DoorState door_state_from_string(std::string_view s);
Mobility mobility_from_string(std::string_view s);

// Door classes are recognised by name: any category containing "door".
bool is_door_category(std::string_view category);

struct ObjectInstance {
  std::string instance_id;
  std::string category;
  Aabb3 aabb;
  std::map<std::string, std::string> attributes;
  std::optional<DoorState> door_state;
  Mobility mobility = Mobility::static_body;
  std::optional<std::vector<Vec3>> surface_points;
};

struct Gaussian {
  Eigen::Vector3f mean = Eigen::Vector3f::Zero();
  Eigen::Vector3f scale = Eigen::Vector3f::Constant(0.01f);
  Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();  // stored w, x, y, z on disk
  float opacity = 1.0f;
  Eigen::Vector3f color = Eigen::Vector3f::Ones();
};

using GaussianCloud = std::vector<Gaussian>;

struct Room {
  std::string name;
  std::string label;
  std::vector<Vec2> polygon;
};

struct Scene {
  std::string scene_id;
  int version = kSceneFormatVersion;
  double floor_z = 0.0;
  double ceiling_z = 2.5;
  std::vector<std::string> taxonomy;
  std::vector<Room> rooms;
  std::vector<Segment2> walls;
  std::vector<ObjectInstance> objects;
  GaussianCloud gaussians;

  [[nodiscard]] const ObjectInstance* find_object(std::string_view id) const;
  // Index of the room containing p, or -1.
  [[nodiscard]] int room_at(const Vec2& p) const;
};

// Throws ValidationError naming the offending field.
void validate_scene(const Scene& scene);

Scene load_scene(const std::filesystem::path& dir);
void save_scene(const Scene& scene, const std::filesystem::path& dir);

// Canonical scene.json text (sorted keys, two-space indent).
std::string scene_json_text(const Scene& scene);
Scene parse_scene_json(std::string_view text, std::string scene_id = {});

GaussianCloud read_gaussians(const std::filesystem::path& file);
void write_gaussians(const GaussianCloud& cloud, const std::filesystem::path& file);

// Surface samples for an object. Returns obj.surface_points when present,
// otherwise n points on the box: the 8 corners (when n >= 8), then the rest
// stratified over the faces with per-face counts proportional to face area,
// jittered from a seed derived from instance_id.
std::vector<Vec3> object_surface_points(const ObjectInstance& obj, std::size_t n);

// Per-face allocation used by object_surface_points, in face order
// -x, +x, -y, +y, -z, +z.
std::vector<std::size_t> face_point_counts(const Aabb3& box, std::size_t n);

// Largest-remainder apportionment of n over non-negative weights.
std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t n);

}  // namespace gsnav
