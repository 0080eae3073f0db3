#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace gsnav {

// Pinhole camera. Camera axes: x right, y down, z forward. World z is up.
struct Camera {
  Vec3 position = Vec3::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // columns: right, down, forward in world
  int width = 224;
  int height = 224;
  double fov_y = kPi / 2.0;  // vertical, rad
  double near = 0.05;
  double far = 100.0;

  // yaw about world z from +x, pitch positive looking up.
  static Camera look(const Vec3& position, double yaw, double pitch, int width = 224, int height = 224,
                     double fov_y = kPi / 2.0);

  [[nodiscard]] double focal() const;  // pixels, same for x and y
  [[nodiscard]] Vec3 forward() const { return rotation.col(2); }
  // Throws ValidationError on bad intrinsics or clip planes.
  void validate() const;
};

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;              // row-major, 3 per pixel
  std::vector<float> depth;            // m, +inf on miss
  std::vector<std::uint16_t> semantic;  // 0 = background, body index + 1 otherwise

  [[nodiscard]] Eigen::Vector3f pixel(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

struct RenderStats {
  std::size_t projected = 0;  // primitives that survived culling
  double max_coverage = 0.0;  // largest per-pixel accumulated alpha
};

std::vector<float> render_rgb(const Camera& camera, std::span<const Gaussian> gaussians, RenderStats* stats = nullptr);

void render_depth_semantic(const Camera& camera, const RayCaster& caster, std::vector<float>& depth,
                           std::vector<std::uint16_t>& semantic);

struct RenderChannels {
  bool rgb = true;
  bool depth = true;
  bool semantic = true;
};

Frame render_frame(const Camera& camera, std::span<const Gaussian> gaussians, const RayCaster& caster,
                   const RenderChannels& channels = {});

}  // namespace gsnav
