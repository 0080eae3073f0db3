#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/scene.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gsnav {

struct CameraPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;    // rad
  double pitch = 0.0;  // rad, positive up
  std::string policy;  // "perimeter" or "volume"
  std::string tier;    // "lower"/"middle"/"upper" or template name
  int room = -1;
};

struct RejectedPose {
  CameraPose pose;
  std::string reason;
};

struct CameraPlan {
  std::vector<CameraPose> poses;
  std::vector<RejectedPose> rejected;
  std::vector<std::string> warnings;
};

// Inward offsets of a ring, one entry per distance that leaves something.
// A distance that splits the ring keeps every piece.
std::vector<std::vector<Vec2>> inward_offset(std::span<const Vec2> ring, std::span<const double> distances);

// Largest-remainder allocation of n over weights (sum is always n).
std::vector<std::size_t> allocate_budget(std::span<const double> weights, std::size_t n);

struct Tier {
  std::string name;
  double height = 0.0;  // absolute z
  double pitch = 0.0;   // rad
};

struct SweepConfig {
  std::vector<double> offsets{0.3, 0.9};
  double lower_above_floor = 0.15;
  double upper_below_ceiling = 0.5;
  double outer_pitch = 30.0 * kPi / 180.0;
  double inner_pitch = 15.0 * kPi / 180.0;
  double baseline = 0.25;  // tangential spacing of left/center/right
};

// Vertical tiers for offset ring `ring` (0 = outermost) of `rings`.
std::vector<Tier> sweep_tiers(double floor_z, double ceiling_z, std::size_t ring, std::size_t rings,
                              const SweepConfig& config = {});

// Throws ValidationError when n is smaller than the number of offset rings,
// DegenerateInputError when a room yields no offset ring.
CameraPlan perimeter_sweep(std::span<const Room> rooms, double floor_z, double ceiling_z, std::size_t n,
                           const SweepConfig& config = {});

struct ViewTemplate {
  std::string name;
  double yaw = 0.0;
  double pitch = 0.0;
};

struct VolumeConfig {
  double min_dist = 0.5;
  std::uint64_t seed = 0;
  std::size_t attempts = 30;
  double max_perturbation = 5.0 * kPi / 180.0;
  double lower_above_floor = 0.15;
  double upper_below_ceiling = 0.5;
};

std::vector<ViewTemplate> default_view_templates();

CameraPlan volume_uniform(std::span<const Room> rooms, double floor_z, double ceiling_z, std::size_t n,
                          const VolumeConfig& config = {});

// Moves poses closer than d_min to any hull or wall into `rejected`.
CameraPlan reject_near_surface(const CameraPlan& plan, std::span<const CollisionBody> bodies,
                               std::span<const Segment2> walls, double d_min);

// Distinct camera positions of a plan, in first-seen order.
std::vector<Vec3> plan_positions(const CameraPlan& plan);

void write_plan_jsonl(const CameraPlan& plan, const std::filesystem::path& file);
std::string plan_svg(const CameraPlan& plan, std::span<const Room> rooms);

}  // namespace gsnav
