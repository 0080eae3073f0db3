#include "gsnav/renderer.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gsnav {

namespace {

constexpr int kTile = 16;

struct Splat {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  Eigen::Matrix2d conic;  // inverse screen covariance
  Eigen::Vector3d color;
  double alpha = 0.0;
  std::size_t index = 0;
};

}  // namespace

Camera Camera::look(const Vec3& position, double yaw, double pitch, int width, int height, double fov_y) {
  Camera c;
  c.position = position;
  const Vec3 f(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch));
  const Vec3 r(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 d = f.cross(r);
  c.rotation.col(0) = r;
  c.rotation.col(1) = d;
  c.rotation.col(2) = f;
  c.width = width;
  c.height = height;
  c.fov_y = fov_y;
  return c;
}

double Camera::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError(fmt::format("camera size {}x{} must be positive", width, height));
  if (!(fov_y > 0.0 && fov_y < kPi)) throw ValidationError("camera fov_y must lie in (0, pi)");
  if (!(near > 0.0 && near < far)) throw ValidationError("camera clip planes need 0 < near < far");
}

std::vector<float> render_rgb(const Camera& camera, std::span<const Gaussian> gaussians, RenderStats* stats) {
  camera.validate();
  const int W = camera.width, H = camera.height;
  const double f = camera.focal();
  const double cx = 0.5 * W, cy = 0.5 * H;
  const Eigen::Matrix3d Rt = camera.rotation.transpose();

  std::vector<Splat> splats;
  splats.reserve(gaussians.size());
  const int tiles_x = (W + kTile - 1) / kTile, tiles_y = (H + kTile - 1) / kTile;
  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(tiles_x * tiles_y));

  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const Gaussian& g = gaussians[i];
    const Vec3 pc = Rt * (g.mean.cast<double>() - camera.position);
    const double z = pc.z();
    if (z <= camera.near || z > camera.far) continue;
    const Eigen::Matrix3d rot = g.rotation.normalized().toRotationMatrix().cast<double>();
    const Eigen::Vector3d s2 = g.scale.cast<double>().cwiseProduct(g.scale.cast<double>());
    const Eigen::Matrix3d cov_world = rot * s2.asDiagonal() * rot.transpose();
    const Eigen::Matrix3d cov_cam = Rt * cov_world * camera.rotation;
    Eigen::Matrix<double, 2, 3> J;
    J << f / z, 0.0, -f * pc.x() / (z * z), 0.0, f / z, -f * pc.y() / (z * z);
    const Eigen::Matrix2d cov2 = J * cov_cam * J.transpose();
    const double det = cov2.determinant();
    if (!(det > 0.0)) continue;

    Splat s;
    s.u = f * pc.x() / z + cx;
    s.v = f * pc.y() / z + cy;
    s.depth = z;
    s.conic = cov2.inverse();
    s.color = g.color.cast<double>();
    s.alpha = std::clamp(static_cast<double>(g.opacity), 0.0, 1.0);
    s.index = i;
    const double mid = 0.5 * (cov2(0, 0) + cov2(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = 2.0 * std::sqrt(lambda_max);
    // Pixels whose centres fall inside the bounding square of the 2-sigma ellipse.
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.u - radius - 0.5)));
    const int x1 = std::min(W - 1, static_cast<int>(std::floor(s.u + radius - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(s.v - radius - 0.5)));
    const int y1 = std::min(H - 1, static_cast<int>(std::floor(s.v + radius - 0.5)));
    if (x0 > x1 || y0 > y1) continue;
    const std::size_t id = splats.size();
    splats.push_back(s);
    for (int ty = y0 / kTile; ty <= y1 / kTile; ++ty)
      for (int tx = x0 / kTile; tx <= x1 / kTile; ++tx) bins[static_cast<std::size_t>(ty * tiles_x + tx)].push_back(id);
  }

  std::vector<float> rgb(static_cast<std::size_t>(W) * static_cast<std::size_t>(H) * 3, 0.0f);
  double max_cov = 0.0;
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      auto& bin = bins[static_cast<std::size_t>(ty * tiles_x + tx)];
      std::sort(bin.begin(), bin.end(), [&](std::size_t a, std::size_t b) {
        if (splats[a].depth != splats[b].depth) return splats[a].depth < splats[b].depth;
        return splats[a].index < splats[b].index;
      });
      for (int py = ty * kTile; py < std::min(H, (ty + 1) * kTile); ++py)
        for (int px = tx * kTile; px < std::min(W, (tx + 1) * kTile); ++px) {
          double T = 1.0;
          Eigen::Vector3d c = Eigen::Vector3d::Zero();
          for (std::size_t id : bin) {
            const Splat& s = splats[id];
            const Eigen::Vector2d d(px + 0.5 - s.u, py + 0.5 - s.v);
            const double m = d.dot(s.conic * d);
            if (m > 4.0) continue;
            const double a = s.alpha * std::exp(-0.5 * m);
            c += s.color * (a * T);
            T *= 1.0 - a;
          }
          const std::size_t o = 3 * (static_cast<std::size_t>(py) * static_cast<std::size_t>(W) + static_cast<std::size_t>(px));
          for (int k = 0; k < 3; ++k) rgb[o + static_cast<std::size_t>(k)] = static_cast<float>(c[k]);
          max_cov = std::max(max_cov, 1.0 - T);
        }
    }
  if (stats) {
    stats->projected = splats.size();
    stats->max_coverage = max_cov;
  }
  return rgb;
}

void render_depth_semantic(const Camera& camera, const RayCaster& caster, std::vector<float>& depth,
                           std::vector<std::uint16_t>& semantic) {
  camera.validate();
  const int W = camera.width, H = camera.height;
  const double f = camera.focal();
  const double cx = 0.5 * W, cy = 0.5 * H;
  depth.assign(static_cast<std::size_t>(W) * static_cast<std::size_t>(H), std::numeric_limits<float>::infinity());
  semantic.assign(depth.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const Vec3 dc((x + 0.5 - cx) / f, (y + 0.5 - cy) / f, 1.0);
      const double n = dc.norm();
      const Vec3 dir = camera.rotation * (dc / n);
      const auto hit = caster.cast(camera.position, dir);
      if (!hit) continue;
      const double z = hit->t / n;
      if (z > camera.far) continue;
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(W) + static_cast<std::size_t>(x);
      depth[i] = static_cast<float>(z);
      semantic[i] = static_cast<std::uint16_t>(hit->body_index + 1);
    }
}

Frame render_frame(const Camera& camera, std::span<const Gaussian> gaussians, const RayCaster& caster,
                   const RenderChannels& channels) {
  Frame fr;
  fr.width = camera.width;
  fr.height = camera.height;
  if (channels.rgb) fr.rgb = render_rgb(camera, gaussians);
  if (channels.depth || channels.semantic) {
    render_depth_semantic(camera, caster, fr.depth, fr.semantic);
    if (!channels.depth) fr.depth.clear();
    if (!channels.semantic) fr.semantic.clear();
  }
  return fr;
}

}  // namespace gsnav
