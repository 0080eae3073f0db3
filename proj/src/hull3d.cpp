#include "gsnav/hull3d.hpp"

#include "gsnav/error.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace gsnav {

double ConvexHull3::volume() const {
  if (vertices.empty()) return 0.0;
  const Vec3 c = centroid();
  double v = 0.0;
  for (const auto& f : faces) v += (vertices[f[0]] - c).dot((vertices[f[1]] - c).cross(vertices[f[2]] - c));
  return v / 6.0;
}

Vec3 ConvexHull3::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return vertices.empty() ? c : Vec3(c / static_cast<double>(vertices.size()));
}

Aabb3 ConvexHull3::bounds() const {
  Aabb3 b{Vec3::Constant(std::numeric_limits<double>::infinity()),
          Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : vertices) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

double ConvexHull3::plane_distance(const Vec3& p) const {
  double d = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < normals.size(); ++i) d = std::max(d, normals[i].dot(p) - offsets[i]);
  return d;
}

namespace {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

double ConvexHull3::distance(const Vec3& p) const {
  if (plane_distance(p) <= 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : faces)
    best = std::min(best, (p - closest_point_on_triangle(p, vertices[f[0]], vertices[f[1]], vertices[f[2]])).norm());
  return best;
}

std::optional<std::pair<double, Vec3>> ConvexHull3::ray_entry(const Vec3& origin, const Vec3& dir,
                                                              double t_min) const {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  Vec3 n_enter = Vec3::Zero();
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double denom = normals[i].dot(dir);
    const double dist = offsets[i] - normals[i].dot(origin);  // > 0 when origin is inside this half-space
    if (denom == 0.0) {
      if (dist < 0.0) return std::nullopt;
      continue;
    }
    const double t = dist / denom;
    if (denom < 0.0) {
      if (t > t_enter) {
        t_enter = t;
        n_enter = normals[i];
      }
    } else {
      t_exit = std::min(t_exit, t);
    }
    if (t_enter > t_exit) return std::nullopt;
  }
  if (t_enter <= t_min || t_enter > t_exit) return std::nullopt;
  return std::make_pair(t_enter, n_enter);
}

std::vector<Vec2> ConvexHull3::section(double z_lo, double z_hi) const {
  std::vector<Vec2> pts;
  for (const auto& v : vertices)
    if (v.z() >= z_lo && v.z() <= z_hi) pts.emplace_back(v.x(), v.y());
  auto cut = [&](const Vec3& a, const Vec3& b, double z) {
    if ((a.z() < z && b.z() > z) || (a.z() > z && b.z() < z)) {
      const double t = (z - a.z()) / (b.z() - a.z());
      const Vec3 p = a + t * (b - a);
      pts.emplace_back(p.x(), p.y());
    }
  };
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const Vec3& a = vertices[f[k]];
      const Vec3& b = vertices[f[(k + 1) % 3]];
      cut(a, b, z_lo);
      if (z_hi != z_lo) cut(a, b, z_hi);
    }
  }
  return convex_hull_2d(pts);
}

void ConvexHull3::update_planes() {
  normals.clear();
  offsets.clear();
  for (const auto& f : faces) {
    const Vec3& a = vertices[f[0]];
    Vec3 n = (vertices[f[1]] - a).cross(vertices[f[2]] - a);
    n.normalize();
    normals.push_back(n);
    offsets.push_back(n.dot(a));
  }
}

namespace {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;
  double offset = 0.0;
  std::vector<int> outside;
  bool alive = true;
};

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

class QuickHull {
 public:
  QuickHull(std::span<const Vec3> pts) : pts_(pts) {}

  ConvexHull3 run() {
    if (pts_.size() < 4) throw DegenerateInputError("convex_hull_3d: need at least 4 points");
    Aabb3 box{pts_[0], pts_[0]};
    for (const auto& p : pts_) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
    const double scale = std::max(1.0, box.extent().maxCoeff());
    eps_ = 1e-10 * scale;
    build_simplex();
    std::vector<int> all;
    for (int i = 0; i < static_cast<int>(pts_.size()); ++i) all.push_back(i);
    assign(all, std::vector<int>{0, 1, 2, 3});
    expand();
    return extract();
  }

 private:
  double dist(const Face& f, int p) const { return f.normal.dot(pts_[p]) - f.offset; }

  int add_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    f.normal = len > 0.0 ? Vec3(n / len) : n;
    f.offset = f.normal.dot(pts_[a]);
    faces_.push_back(std::move(f));
    const int id = static_cast<int>(faces_.size()) - 1;
    edges_[edge_key(a, b)] = id;
    edges_[edge_key(b, c)] = id;
    edges_[edge_key(c, a)] = id;
    return id;
  }

  void build_simplex() {
    const int n = static_cast<int>(pts_.size());
    // Extreme points along each axis.
    std::array<int, 6> ext{};
    for (int axis = 0; axis < 3; ++axis) {
      for (int i = 0; i < n; ++i) {
        if (pts_[i][axis] < pts_[ext[2 * axis]][axis]) ext[2 * axis] = i;
        if (pts_[i][axis] > pts_[ext[2 * axis + 1]][axis]) ext[2 * axis + 1] = i;
      }
    }
    int i0 = ext[0], i1 = ext[1];
    double best = -1.0;
    for (int a : ext)
      for (int b : ext) {
        const double d = (pts_[a] - pts_[b]).squaredNorm();
        if (d > best) {
          best = d;
          i0 = a;
          i1 = b;
        }
      }
    if (best <= eps_ * eps_) throw DegenerateInputError("convex_hull_3d: all points coincide");

    const Vec3 line = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      const Vec3 d = pts_[i] - pts_[i0];
      const double off = (d - d.dot(line) * line).norm();
      if (off > best) {
        best = off;
        i2 = i;
      }
    }
    if (i2 < 0) throw DegenerateInputError("convex_hull_3d: points are collinear");

    const Vec3 pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      const double off = std::abs(pn.dot(pts_[i] - pts_[i0]));
      if (off > best) {
        best = off;
        i3 = i;
      }
    }
    if (i3 < 0) throw DegenerateInputError("convex_hull_3d: points are coplanar");

    if (pn.dot(pts_[i3] - pts_[i0]) > 0.0) std::swap(i1, i2);
    // Now i3 lies below plane (i0, i1, i2) so that face faces outward.
    add_face(i0, i1, i2);
    add_face(i0, i3, i1);
    add_face(i1, i3, i2);
    add_face(i2, i3, i0);
  }

  void assign(const std::vector<int>& candidates, const std::vector<int>& new_faces) {
    for (int p : candidates) {
      int best_face = -1;
      double best = eps_;
      for (int f : new_faces) {
        const double d = dist(faces_[f], p);
        if (d > best) {
          best = d;
          best_face = f;
          break;
        }
      }
      if (best_face >= 0) faces_[best_face].outside.push_back(p);
    }
  }

  void expand() {
    for (std::size_t fi = 0; fi < faces_.size(); ++fi) {
      if (!faces_[fi].alive || faces_[fi].outside.empty()) continue;
      // Farthest outside point is the next hull vertex.
      int eye = -1;
      double far = -1.0;
      for (int p : faces_[fi].outside) {
        const double d = dist(faces_[fi], p);
        if (d > far) {
          far = d;
          eye = p;
        }
      }

      std::vector<int> visible;
      std::vector<int> stack{static_cast<int>(fi)};
      std::vector<char> seen(faces_.size(), 0);
      seen[fi] = 1;
      while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        visible.push_back(f);
        for (int k = 0; k < 3; ++k) {
          const int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
          const auto it = edges_.find(edge_key(b, a));
          if (it == edges_.end()) continue;
          const int g = it->second;
          if (seen[g] || !faces_[g].alive) continue;
          if (dist(faces_[g], eye) > eps_) {
            seen[g] = 1;
            stack.push_back(g);
          }
        }
      }

      std::vector<std::pair<int, int>> horizon;
      for (int f : visible) {
        for (int k = 0; k < 3; ++k) {
          const int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
          const auto it = edges_.find(edge_key(b, a));
          if (it == edges_.end() || !seen[it->second]) horizon.emplace_back(a, b);
        }
      }

      std::vector<int> orphans;
      for (int f : visible) {
        Face& face = faces_[f];
        face.alive = false;
        for (int p : face.outside)
          if (p != eye) orphans.push_back(p);
        face.outside.clear();
        for (int k = 0; k < 3; ++k) {
          const auto it = edges_.find(edge_key(face.v[k], face.v[(k + 1) % 3]));
          if (it != edges_.end() && it->second == f) edges_.erase(it);
        }
      }

      std::vector<int> created;
      for (const auto& [a, b] : horizon) created.push_back(add_face(a, b, eye));
      assign(orphans, created);
    }
  }

  ConvexHull3 extract() const {
    ConvexHull3 hull;
    std::unordered_map<int, int> remap;
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = remap.emplace(f.v[k], static_cast<int>(hull.vertices.size()));
        if (inserted) hull.vertices.push_back(pts_[f.v[k]]);
        tri[k] = it->second;
      }
      hull.faces.push_back(tri);
    }
    hull.update_planes();
    return hull;
  }

  std::span<const Vec3> pts_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  double eps_ = 1e-10;
};

}  // namespace

ConvexHull3 convex_hull_3d(std::span<const Vec3> points) { return QuickHull(points).run(); }

ConvexHull3 extrude_polygon(std::span<const Vec2> ring, double z_lo, double z_hi) {
  std::vector<Vec3> pts;
  for (const auto& p : ring) {
    pts.emplace_back(p.x(), p.y(), z_lo);
    pts.emplace_back(p.x(), p.y(), z_hi);
  }
  return convex_hull_3d(pts);
}

}  // namespace gsnav
