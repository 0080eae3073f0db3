#include "gsnav/collision.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace gsnav {

ConvexPolygon2::ConvexPolygon2(std::vector<Vec2> ccw_vertices) : vertices_(std::move(ccw_vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw DegenerateInputError("ConvexPolygon2: fewer than 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % n];
    const Vec2& c = vertices_[(i + 2) % n];
    if (!(cross2(b - a, c - b) > 0.0)) throw DegenerateInputError("ConvexPolygon2: not strictly convex CCW");
  }
  if (!(area() > 0.0)) throw DegenerateInputError("ConvexPolygon2: zero area");
}

ConvexPolygon2 ConvexPolygon2::hull_of(std::span<const Vec2> points) {
  auto hull = convex_hull_2d(points);
  if (hull.size() < 3) throw DegenerateInputError("ConvexPolygon2::hull_of: collinear input");
  return ConvexPolygon2(std::move(hull));
}

double ConvexPolygon2::area() const { return signed_area(vertices_); }

Vec2 ConvexPolygon2::centroid() const {
  Vec2 c = Vec2::Zero();
  double a = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices_[i];
    const Vec2& q = vertices_[(i + 1) % n];
    const double w = cross2(p, q);
    a += w;
    c += (p + q) * w;
  }
  return c / (3.0 * a);
}

Aabb2 ConvexPolygon2::bounds() const {
  Aabb2 b{vertices_.front(), vertices_.front()};
  for (const auto& v : vertices_) b.expand(v);
  return b;
}

bool ConvexPolygon2::contains(const Vec2& p, double tol) const { return signed_distance(p, *this) <= tol; }

ConvexPolygon2 ConvexPolygon2::translated(const Vec2& d) const {
  ConvexPolygon2 out = *this;
  for (auto& v : out.vertices_) v += d;
  return out;
}

double signed_distance(const Vec2& p, const ConvexPolygon2& poly) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  bool inside = true;
  double edge_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    if (cross2(b - a, p - a) < 0.0) inside = false;
    edge_dist = std::min(edge_dist, point_segment_distance(p, a, b));
  }
  return inside ? -edge_dist : edge_dist;
}

Contact disc_vs_polygon(const Vec2& center, double radius, const ConvexPolygon2& poly) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  Vec2 closest = v[0];
  std::size_t best_edge = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    if (cross2(b - a, center - a) < 0.0) inside = false;
    const Vec2 q = closest_point_on_segment(center, a, b);
    const double d = (center - q).norm();
    if (d < best) {
      best = d;
      closest = q;
      best_edge = i;
    }
  }
  Contact c;
  if (inside) {
    const Vec2 e = v[(best_edge + 1) % n] - v[best_edge];
    c.normal = Vec2(e.y(), -e.x()).normalized();  // outward for CCW
    c.in_contact = true;
    c.penetration_depth = radius + best;
    return c;
  }
  c.in_contact = best < radius;
  c.penetration_depth = std::max(0.0, radius - best);
  // Vertex regions resolve to the vertex-to-center direction.
  c.normal = best > 0.0 ? Vec2((center - closest) / best) : Vec2::UnitX();
  return c;
}

Contact disc_vs_segment(const Vec2& center, double radius, const Segment2& seg) {
  const Vec2 q = closest_point_on_segment(center, seg.a, seg.b);
  const double d = (center - q).norm();
  Contact c;
  c.in_contact = d < radius;
  c.penetration_depth = std::max(0.0, radius - d);
  if (d > 0.0) {
    c.normal = (center - q) / d;
  } else {
    const Vec2 e = seg.b - seg.a;
    c.normal = e.squaredNorm() > 0.0 ? Vec2(Vec2(-e.y(), e.x()).normalized()) : Vec2::UnitX();
  }
  return c;
}

std::vector<int> link_components(std::span<const Vec3> points, double tau) {
  const std::size_t n = points.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<long long, 3>, std::vector<int>, KeyHash> grid;
  auto key_of = [&](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor(p.x() / tau)),
                                    static_cast<long long>(std::floor(p.y() / tau)),
                                    static_cast<long long>(std::floor(p.z() / tau))};
  };
  for (std::size_t i = 0; i < n; ++i) grid[key_of(points[i])].push_back(static_cast<int>(i));

  const double tau2 = tau * tau;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = key_of(points[i]);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (static_cast<std::size_t>(j) > i && (points[i] - points[j]).squaredNorm() <= tau2)
              unite(static_cast<int>(i), j);
        }
  }

  std::vector<int> label(n);
  std::unordered_map<int, int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [it, _] = ids.emplace(find(static_cast<int>(i)), static_cast<int>(ids.size()));
    label[i] = it->second;
  }
  return label;
}

namespace {

constexpr double kThin = 1e-3;

// Footprint of a point set that has no 3D volume, extruded over its z range.
ConvexHull3 degenerate_component_hull(std::span<const Vec3> pts) {
  std::vector<Vec2> flat;
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -z_lo;
  for (const auto& p : pts) {
    flat.emplace_back(p.x(), p.y());
    z_lo = std::min(z_lo, p.z());
    z_hi = std::max(z_hi, p.z());
  }
  if (z_hi - z_lo < kThin) z_hi = z_lo + kThin;
  auto ring = convex_hull_2d(flat);
  if (ring.size() < 3) {
    // Collinear or a single point: thin rectangle around the segment.
    Vec2 a = ring.empty() ? flat.front() : ring.front();
    Vec2 b = ring.size() > 1 ? ring.back() : a;
    Vec2 dir = b - a;
    if (dir.norm() < kThin) dir = Vec2(kThin, 0.0);
    dir.normalize();
    const Vec2 side(-dir.y() * 0.5 * kThin, dir.x() * 0.5 * kThin);
    a -= dir * 0.5 * kThin;
    b += dir * 0.5 * kThin;
    ring = {a - side, b - side, b + side, a + side};
  }
  return extrude_polygon(ring, z_lo, z_hi);
}

}  // namespace

CollisionBody build_collision_body(const ObjectInstance& obj, std::span<const Vec3> points, double link_distance) {
  if (points.empty()) throw DegenerateInputError(fmt::format("{}: no surface points", obj.instance_id));
  CollisionBody body;
  body.instance_id = obj.instance_id;
  body.is_static = obj.mobility == Mobility::static_body;

  const auto labels = link_components(points, link_distance);
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<Vec3>> clusters(count);
  for (std::size_t i = 0; i < points.size(); ++i) clusters[labels[i]].push_back(points[i]);
  for (const auto& cluster : clusters) {
    try {
      body.hulls.push_back(convex_hull_3d(cluster));
    } catch (const DegenerateInputError&) {
      body.hulls.push_back(degenerate_component_hull(cluster));
    }
  }
  return body;
}

std::size_t surface_sample_count(const ObjectInstance& obj, const CollisionParams& params) {
  const Vec3 e = obj.aabb.extent();
  const double area = 2.0 * (e.x() * e.y() + e.y() * e.z() + e.x() * e.z());
  const auto n = static_cast<std::size_t>(std::ceil(area * params.surface_density));
  return std::clamp(n, params.min_surface_points, params.max_surface_points);
}

std::vector<CollisionBody> build_scene_bodies(const Scene& scene, const CollisionParams& params) {
  std::vector<CollisionBody> bodies;
  bodies.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    const auto pts = object_surface_points(obj, surface_sample_count(obj, params));
    bodies.push_back(build_collision_body(obj, pts, params.link_distance));
  }
  return bodies;
}

namespace {

bool ray_hits_box(const Vec3& o, const Vec3& inv, const Aabb3& b, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    double ta = (b.min[k] - o[k]) * inv[k];
    double tb = (b.max[k] - o[k]) * inv[k];
    if (std::isnan(ta) || std::isnan(tb)) {
      if (o[k] < b.min[k] || o[k] > b.max[k]) return false;
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

RayCaster::RayCaster(std::span<const CollisionBody> bodies) : bodies_(bodies) {
  for (std::size_t b = 0; b < bodies.size(); ++b)
    for (const auto& h : bodies[b].hulls) {
      Aabb3 box = h.bounds();
      box.min.array() -= 1e-9;
      box.max.array() += 1e-9;
      entries_.push_back({&h, b, box});
    }
}

std::optional<RayHit> RayCaster::cast(const Vec3& origin, const Vec3& dir) const {
  const Vec3 inv = dir.cwiseInverse();
  std::optional<RayHit> best;
  double t_best = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) {
    if (!ray_hits_box(origin, inv, e.box, t_best)) continue;
    const auto hit = e.hull->ray_entry(origin, dir);
    if (hit && hit->first < t_best) {
      t_best = hit->first;
      best = RayHit{hit->first, bodies_[e.body].instance_id, e.body, hit->second};
    }
  }
  return best;
}

std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, std::span<const CollisionBody> bodies) {
  return RayCaster(bodies).cast(origin, dir);
}

namespace {

constexpr std::uint32_t kCollisionFormatVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("collision.bin: truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_collision_bodies(std::span<const CollisionBody> bodies, const std::filesystem::path& file) {
  std::string out = "SGCB";
  put<std::uint32_t>(out, kCollisionFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bodies.size()));
  for (const auto& b : bodies) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.instance_id.size()));
    out += b.instance_id;
    put<std::uint8_t>(out, b.is_static ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.hulls.size()));
    for (const auto& h : b.hulls) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(h.vertices.size()));
      for (const auto& v : h.vertices)
        for (int k = 0; k < 3; ++k) put<double>(out, v[k]);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(h.faces.size()));
      for (const auto& f : h.faces)
        for (int k = 0; k < 3; ++k) put<std::uint32_t>(out, static_cast<std::uint32_t>(f[k]));
    }
  }
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<CollisionBody> read_collision_bodies(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  if (data.size() < 12 || data.compare(0, 4, "SGCB") != 0) throw ParseError("collision.bin: bad magic");
  std::size_t pos = 4;
  if (take<std::uint32_t>(data, pos) != kCollisionFormatVersion) throw VersionError("collision.bin: unsupported version");
  const auto count = take<std::uint32_t>(data, pos);
  std::vector<CollisionBody> bodies;
  for (std::uint32_t i = 0; i < count; ++i) {
    CollisionBody b;
    const auto len = take<std::uint32_t>(data, pos);
    if (pos + len > data.size()) throw ParseError("collision.bin: truncated id");
    b.instance_id = data.substr(pos, len);
    pos += len;
    b.is_static = take<std::uint8_t>(data, pos) != 0;
    const auto hulls = take<std::uint32_t>(data, pos);
    for (std::uint32_t h = 0; h < hulls; ++h) {
      ConvexHull3 hull;
      const auto nv = take<std::uint32_t>(data, pos);
      for (std::uint32_t v = 0; v < nv; ++v) {
        Vec3 p;
        for (int k = 0; k < 3; ++k) p[k] = take<double>(data, pos);
        hull.vertices.push_back(p);
      }
      const auto nf = take<std::uint32_t>(data, pos);
      for (std::uint32_t f = 0; f < nf; ++f) {
        std::array<int, 3> tri{};
        for (int k = 0; k < 3; ++k) {
          const auto idx = take<std::uint32_t>(data, pos);
          if (idx >= nv) throw ParseError("collision.bin: face index out of range");
          tri[k] = static_cast<int>(idx);
        }
        hull.faces.push_back(tri);
      }
      if (nf < 4) throw ParseError("collision.bin: hull with fewer than 4 faces");
      hull.update_planes();
      b.hulls.push_back(std::move(hull));
    }
    if (b.hulls.empty()) throw ParseError("collision.bin: body without hulls");
    bodies.push_back(std::move(b));
  }
  if (pos != data.size()) throw ParseError("collision.bin: trailing bytes");
  return bodies;
}

}  // namespace gsnav
