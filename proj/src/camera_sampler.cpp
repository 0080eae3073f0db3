#include "gsnav/camera_sampler.hpp"

#include "gsnav/error.hpp"
#include "gsnav/polygon_set.hpp"
#include "gsnav/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <limits>
#include <sstream>

namespace gsnav {

namespace {

double deg(double rad) { return rad * 180.0 / kPi; }

// Point and unit tangent at arc length s along a closed ring.
std::pair<Vec2, Vec2> point_at(std::span<const Vec2> ring, double s) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % n];
    const double len = (b - a).norm();
    if (len <= 0.0) continue;
    if (s <= len || i + 1 == n) {
      const Vec2 t = (b - a) / len;
      return {a + t * std::min(s, len), t};
    }
    s -= len;
  }
  return {ring.front(), Vec2::UnitX()};
}

bool strictly_inside(const Vec2& p, std::span<const Vec2> ring) {
  return point_in_ring(p, ring) && distance_to_ring(p, ring) > 1e-9;
}

}  // namespace

std::vector<std::vector<Vec2>> inward_offset(std::span<const Vec2> ring, std::span<const double> distances) {
  std::vector<std::vector<Vec2>> out;
  for (double d : distances)
    for (auto& piece : inward_offset_ring(ring, d)) out.push_back(std::move(piece));
  return out;
}

std::vector<std::size_t> allocate_budget(std::span<const double> weights, std::size_t n) { return apportion(weights, n); }

std::vector<Tier> sweep_tiers(double floor_z, double ceiling_z, std::size_t ring, std::size_t rings,
                              const SweepConfig& config) {
  const double low = floor_z + config.lower_above_floor;
  const double high = ceiling_z - config.upper_below_ceiling;
  const double mid = 0.5 * (floor_z + ceiling_z);
  if (ring == 0) return {{"lower", low, config.outer_pitch}, {"middle", mid, 0.0}, {"upper", high, -config.outer_pitch}};
  // Interior rings pull the outer tiers toward mid-height.
  const double f = rings > 0 ? static_cast<double>(ring) / static_cast<double>(rings) : 0.0;
  return {{"lower", low + (mid - low) * f, config.inner_pitch},
          {"middle", mid, 0.0},
          {"upper", high + (mid - high) * f, -config.inner_pitch}};
}

CameraPlan perimeter_sweep(std::span<const Room> rooms, double floor_z, double ceiling_z, std::size_t n,
                           const SweepConfig& config) {
  struct Ring {
    std::vector<Vec2> pts;
    std::size_t room;
    std::size_t level;
    std::size_t levels;
  };
  std::vector<Ring> rings;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    std::vector<Ring> mine;
    for (std::size_t k = 0; k < config.offsets.size(); ++k)
      for (auto& piece : inward_offset_ring(rooms[r].polygon, config.offsets[k]))
        mine.push_back({std::move(piece), r, k, config.offsets.size()});
    if (mine.empty())
      throw DegenerateInputError(fmt::format("room '{}' collapses under the offset schedule", rooms[r].name));
    for (auto& m : mine) rings.push_back(std::move(m));
  }
  if (n < rings.size())
    throw ValidationError(fmt::format("budget {} is smaller than the {} offset polygons", n, rings.size()));

  std::vector<double> perims;
  for (const auto& ring : rings) perims.push_back(perimeter(ring.pts));
  const auto alloc = allocate_budget(perims, n);

  CameraPlan plan;
  const char* baselines[] = {"left", "center", "right"};
  for (std::size_t i = 0; i < rings.size(); ++i) {
    const auto& ring = rings[i];
    const auto tiers = sweep_tiers(floor_z, ceiling_z, ring.level, ring.levels, config);
    const double P = perims[i];
    for (std::size_t k = 0; k < alloc[i]; ++k) {
      const double s = (static_cast<double>(k) + 0.5) * P / static_cast<double>(alloc[i]);
      const auto [p, t] = point_at(ring.pts, s);
      const Vec2 inward(-t.y(), t.x());  // left of a CCW edge
      const double yaw = std::atan2(inward.y(), inward.x());
      for (int b = -1; b <= 1; ++b) {
        const Vec2 q = p + static_cast<double>(b) * config.baseline * t;
        for (const auto& tier : tiers) {
          CameraPose pose{Vec3(q.x(), q.y(), tier.height), yaw, tier.pitch, "perimeter",
                          fmt::format("{}/{}", tier.name, baselines[b + 1]), static_cast<int>(ring.room)};
          if (strictly_inside(q, rooms[ring.room].polygon))
            plan.poses.push_back(std::move(pose));
          else
            plan.rejected.push_back({std::move(pose), "outside_room"});
        }
      }
    }
  }
  return plan;
}

std::vector<ViewTemplate> default_view_templates() {
  return {{"yaw0", 0.0, 0.0},
          {"yaw90", kPi / 2.0, 0.0},
          {"yaw180", kPi, 0.0},
          {"yaw270", -kPi / 2.0, 0.0},
          {"up45", 0.0, kPi / 4.0},
          {"down45", kPi, -kPi / 4.0}};
}

CameraPlan volume_uniform(std::span<const Room> rooms, double floor_z, double ceiling_z, std::size_t n,
                          const VolumeConfig& config) {
  if (!(config.min_dist > 0.0)) throw ValidationError("min_dist must be positive");
  const double z_lo = floor_z + config.lower_above_floor;
  const double z_hi = ceiling_z - config.upper_below_ceiling;
  std::vector<double> volumes;
  for (const auto& r : rooms) volumes.push_back(std::abs(signed_area(r.polygon)) * (ceiling_z - floor_z));
  const auto alloc = allocate_budget(volumes, n);

  Rng rng(config.seed);
  CameraPlan plan;
  std::vector<Vec3> placed;
  const auto templates = default_view_templates();
  const double r2 = config.min_dist * config.min_dist;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    Aabb2 box{rooms[r].polygon.front(), rooms[r].polygon.front()};
    for (const auto& p : rooms[r].polygon) box.expand(p);
    std::size_t got = 0;
    while (got < alloc[r]) {
      std::optional<Vec3> found;
      for (std::size_t a = 0; a < config.attempts && !found; ++a) {
        const Vec3 c(rng.uniform(box.min.x(), box.max.x()), rng.uniform(box.min.y(), box.max.y()), rng.uniform(z_lo, z_hi));
        if (!strictly_inside(c.head<2>(), rooms[r].polygon)) continue;
        bool ok = true;
        for (const auto& q : placed)
          if ((q - c).squaredNorm() < r2) {
            ok = false;
            break;
          }
        if (ok) found = c;
      }
      if (!found) {
        plan.warnings.push_back(fmt::format("room '{}' saturated at {} of {} positions for min_dist {}", rooms[r].name,
                                            got, alloc[r], config.min_dist));
        spdlog::warn("{}", plan.warnings.back());
        break;
      }
      placed.push_back(*found);
      ++got;
      const double dyaw = rng.uniform(-config.max_perturbation, config.max_perturbation);
      const double dpitch = rng.uniform(-config.max_perturbation, config.max_perturbation);
      for (const auto& tpl : templates)
        plan.poses.push_back({*found, wrap_angle(tpl.yaw + dyaw), tpl.pitch + dpitch, "volume", tpl.name,
                              static_cast<int>(r)});
    }
  }
  return plan;
}

CameraPlan reject_near_surface(const CameraPlan& plan, std::span<const CollisionBody> bodies,
                               std::span<const Segment2> walls, double d_min) {
  if (!(d_min > 0.0)) throw ValidationError("d_min must be positive");
  CameraPlan out;
  out.rejected = plan.rejected;
  out.warnings = plan.warnings;
  for (const auto& pose : plan.poses) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& body : bodies)
      for (const auto& hull : body.hulls) d = std::min(d, hull.distance(pose.position));
    const Vec2 p2 = pose.position.head<2>();
    for (const auto& w : walls) d = std::min(d, point_segment_distance(p2, w.a, w.b));
    if (d < d_min)
      out.rejected.push_back({pose, fmt::format("near_surface ({:.3f} m)", d)});
    else
      out.poses.push_back(pose);
  }
  return out;
}

std::vector<Vec3> plan_positions(const CameraPlan& plan) {
  std::vector<Vec3> out;
  for (const auto& p : plan.poses)
    if (out.empty() || out.back() != p.position) out.push_back(p.position);
  return out;
}

void write_plan_jsonl(const CameraPlan& plan, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  auto row = [](const CameraPose& p, bool accepted) {
    return nlohmann::json{{"position", {p.position.x(), p.position.y(), p.position.z()}},
                          {"yaw_deg", deg(p.yaw)},
                          {"pitch_deg", deg(p.pitch)},
                          {"policy", p.policy},
                          {"tier", p.tier},
                          {"room", p.room},
                          {"accepted", accepted}};
  };
  for (const auto& p : plan.poses) os << row(p, true).dump() << "\n";
  for (const auto& r : plan.rejected) {
    auto j = row(r.pose, false);
    j["reason"] = r.reason;
    os << j.dump() << "\n";
  }
}

std::string plan_svg(const CameraPlan& plan, std::span<const Room> rooms) {
  Aabb2 box{Vec2::Constant(std::numeric_limits<double>::infinity()),
            Vec2::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& r : rooms)
    for (const auto& p : r.polygon) box.expand(p);
  if (rooms.empty()) box = {Vec2::Zero(), Vec2::Ones()};
  const double scale = 100.0, pad = 0.5;
  const Vec2 size = box.max - box.min + Vec2::Constant(2 * pad);
  auto X = [&](double x) { return (x - box.min.x() + pad) * scale; };
  auto Y = [&](double y) { return (box.max.y() + pad - y) * scale; };
  std::ostringstream s;
  s << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\">\n", size.x() * scale,
                   size.y() * scale);
  for (const auto& r : rooms) {
    s << "<polygon fill=\"none\" stroke=\"black\" points=\"";
    for (const auto& p : r.polygon) s << fmt::format("{:.1f},{:.1f} ", X(p.x()), Y(p.y()));
    s << "\"/>\n";
  }
  for (const auto& p : plan.poses)
    s << fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"green\"/>\n", X(p.position.x()), Y(p.position.y()));
  for (const auto& r : plan.rejected)
    s << fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"red\"/>\n", X(r.pose.position.x()),
                     Y(r.pose.position.y()));
  s << "</svg>\n";
  return s.str();
}

}  // namespace gsnav
