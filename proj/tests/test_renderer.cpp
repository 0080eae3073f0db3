#include "gsnav/error.hpp"
#include "gsnav/renderer.hpp"
#include "gsnav/rng.hpp"
#include "support.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>

using namespace gsnav;

namespace {

// Odd sizes put a pixel center exactly on the optical axis.
constexpr int kW = 65;
constexpr int kH = 49;

Camera axis_camera() { return Camera::look({0, 0, 1}, 0.0, 0.0, kW, kH); }

Gaussian blob(Vec3 at, float sigma, float alpha, Eigen::Vector3f color) {
  Gaussian g;
  g.mean = at.cast<float>();
  g.scale = Eigen::Vector3f::Constant(sigma);
  g.opacity = alpha;
  g.color = color;
  return g;
}

CollisionBody box_body(std::string id, Vec3 lo, Vec3 hi) {
  CollisionBody b;
  b.instance_id = std::move(id);
  const auto ring = testing::rect(lo.x(), lo.y(), hi.x(), hi.y());
  b.hulls.push_back(extrude_polygon(ring, lo.z(), hi.z()));
  return b;
}

// Ray against an axis-aligned box, entry t > 0 or nullopt.
std::optional<double> slab(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return std::nullopt;
      continue;
    }
    double a = (lo[k] - o[k]) / d[k], b = (hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t0 <= 0.0) return std::nullopt;
  return t0;
}

std::size_t center_index() { return static_cast<std::size_t>(kH / 2) * kW + kW / 2; }

}  // namespace

TEST_CASE("zero gaussians render black") {
  RenderStats st;
  const auto rgb = render_rgb(axis_camera(), {}, &st);
  CHECK(rgb.size() == static_cast<std::size_t>(kW * kH * 3));
  for (float v : rgb) REQUIRE(v == 0.0f);
  CHECK(st.projected == 0);
  CHECK(st.max_coverage == 0.0);
}

TEST_CASE("on-axis isotropic gaussian gives alpha at the center pixel") {
  for (float alpha : {1.0f, 0.7f, 0.25f}) {
    const std::vector<Gaussian> g = {blob({3, 0, 1}, 0.1f, alpha, Eigen::Vector3f::Ones())};
    const auto rgb = render_rgb(axis_camera(), g);
    const std::size_t c = 3 * center_index();
    for (int k = 0; k < 3; ++k) CHECK(rgb[c + static_cast<std::size_t>(k)] == doctest::Approx(alpha).epsilon(1e-6));
    // Radial decay along the row.
    CHECK(rgb[c + 3] < rgb[c]);
    CHECK(rgb[c + 6] < rgb[c + 3]);
    CHECK(rgb[c - 3] == doctest::Approx(rgb[c + 3]).epsilon(1e-6));
  }
}

TEST_CASE("pixel value follows the screen-space gaussian") {
  // sigma 0.25 at depth 3 projects to f*0.25/3 pixels; nothing past 2 sigma.
  const Camera cam = axis_camera();
  const std::vector<Gaussian> g = {blob({3, 0, 1}, 0.25f, 0.8f, Eigen::Vector3f::Ones())};
  const auto rgb = render_rgb(cam, g);
  const double s = cam.focal() * 0.25 / 3.0;
  for (int dx = 1; dx <= 6; ++dx) {
    const double m = dx * dx / (s * s);
    const double expect = m > 4.0 ? 0.0 : 0.8 * std::exp(-0.5 * m);
    const std::size_t i = 3 * (center_index() + static_cast<std::size_t>(dx));
    CHECK(rgb[i] == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("front white half-alpha over opaque black gives half gray") {
  const std::vector<Gaussian> g = {blob({4, 0, 1}, 0.2f, 1.0f, Eigen::Vector3f::Zero()),
                                   blob({2, 0, 1}, 0.1f, 0.5f, Eigen::Vector3f::Ones())};
  const auto rgb = render_rgb(axis_camera(), g);
  const std::size_t c = 3 * center_index();
  for (int k = 0; k < 3; ++k) CHECK(std::abs(rgb[c + static_cast<std::size_t>(k)] - 0.5f) <= 1e-6);

  SUBCASE("front-to-back order decides color") {
    const std::vector<Gaussian> h = {blob({2, 0, 1}, 0.1f, 0.5f, {1, 0, 0}), blob({4, 0, 1}, 0.2f, 1.0f, {0, 1, 0})};
    const auto out = render_rgb(axis_camera(), h);
    CHECK(out[c] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out[c + 1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out[c + 2] == 0.0f);
  }
}

TEST_CASE("compositing never exceeds full coverage") {
  Rng rng(5);
  std::vector<Gaussian> g;
  for (int i = 0; i < 300; ++i) {
    Gaussian x = blob({rng.uniform(1, 6), rng.uniform(-1.5, 1.5), rng.uniform(0.2, 1.8)},
                      static_cast<float>(rng.uniform(0.02, 0.4)), static_cast<float>(rng.uniform(0, 1)),
                      Eigen::Vector3f::Ones());
    x.scale = Eigen::Vector3f(static_cast<float>(rng.uniform(0.01, 0.5)), static_cast<float>(rng.uniform(0.01, 0.5)),
                              static_cast<float>(rng.uniform(0.01, 0.5)));
    x.rotation = Eigen::Quaternionf(static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
                                    static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)))
                     .normalized();
    g.push_back(x);
  }
  RenderStats st;
  const auto rgb = render_rgb(axis_camera(), g, &st);
  CHECK(st.projected > 0);
  CHECK(st.max_coverage <= 1.0);
  CHECK(st.max_coverage > 0.5);
  for (float v : rgb) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f + 1e-6f);
  }
}

TEST_CASE("tie order does not matter for disjoint footprints") {
  const Gaussian a = blob({3, 0.8, 1}, 0.05f, 0.9f, {1, 0, 0});
  const Gaussian b = blob({3, -0.8, 1}, 0.05f, 0.6f, {0, 0, 1});
  const std::vector<Gaussian> ab = {a, b}, ba = {b, a};
  CHECK(render_rgb(axis_camera(), ab) == render_rgb(axis_camera(), ba));
}

TEST_CASE("input order does not matter at distinct depths") {
  Rng rng(9);
  std::vector<Gaussian> g;
  for (int i = 0; i < 60; ++i)
    g.push_back(blob({1.0 + 0.07 * i, rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.4)}, 0.15f,
                     static_cast<float>(rng.uniform(0.2, 0.9)),
                     Eigen::Vector3f(static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                                     static_cast<float>(rng.uniform()))));
  const auto ref = render_rgb(axis_camera(), g);
  for (int rep = 0; rep < 5; ++rep) {
    for (std::size_t i = g.size() - 1; i > 0; --i) std::swap(g[i], g[rng.below(i + 1)]);
    CHECK(render_rgb(axis_camera(), g) == ref);
  }
}

TEST_CASE("gaussians behind the camera are culled") {
  RenderStats st;
  const std::vector<Gaussian> g = {blob({-2, 0, 1}, 0.1f, 1.0f, Eigen::Vector3f::Ones())};
  const auto rgb = render_rgb(axis_camera(), g, &st);
  CHECK(st.projected == 0);
  for (float v : rgb) REQUIRE(v == 0.0f);
}

TEST_CASE("depth to a wall plane") {
  const std::vector<CollisionBody> bodies = {box_body("wall", {2.0, -50, -50}, {2.2, 50, 50})};
  const RayCaster caster(bodies);
  std::vector<float> depth;
  std::vector<std::uint16_t> sem;
  render_depth_semantic(axis_camera(), caster, depth, sem);
  REQUIRE(depth.size() == static_cast<std::size_t>(kW * kH));
  CHECK(depth[center_index()] == doctest::Approx(2.0).epsilon(1e-6));
  // Depth is along the optical axis, so a fronto-parallel plane is flat.
  for (std::size_t i = 0; i < depth.size(); ++i) {
    REQUIRE(std::abs(depth[i] - 2.0f) < 1e-5f);
    REQUIRE(sem[i] == 1);
  }
}

TEST_CASE("rays that miss give infinity and background") {
  const std::vector<CollisionBody> bodies = {box_body("behind", {-3, -1, 0}, {-2, 1, 2})};
  const RayCaster caster(bodies);
  std::vector<float> depth;
  std::vector<std::uint16_t> sem;
  render_depth_semantic(axis_camera(), caster, depth, sem);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    REQUIRE(std::isinf(depth[i]));
    REQUIRE(sem[i] == 0);
  }
}

TEST_CASE("two-box depth and semantics match a brute-force oracle") {
  const Vec3 alo(3, -1, 0), ahi(4, 0.45, 2), blo(5, -0.55, 0.35), bhi(6, 1.5, 2.5);
  const std::vector<CollisionBody> bodies = {box_body("near", alo, ahi), box_body("far", blo, bhi)};
  const RayCaster caster(bodies);
  const Camera cam = axis_camera();
  std::vector<float> depth;
  std::vector<std::uint16_t> sem;
  render_depth_semantic(cam, caster, depth, sem);

  const double f = cam.focal();
  std::size_t near_px = 0, far_px = 0, occluded = 0;
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) {
      const Vec3 dc((x + 0.5 - 0.5 * kW) / f, (y + 0.5 - 0.5 * kH) / f, 1.0);
      const Vec3 dir = cam.rotation * dc;  // unnormalized: t is then the z depth
      const auto ta = slab(cam.position, dir, alo, ahi);
      const auto tb = slab(cam.position, dir, blo, bhi);
      const std::size_t i = static_cast<std::size_t>(y) * kW + static_cast<std::size_t>(x);
      std::uint16_t want = 0;
      double want_d = std::numeric_limits<double>::infinity();
      if (ta && (!tb || *ta <= *tb)) {
        want = 1;
        want_d = *ta;
      } else if (tb) {
        want = 2;
        want_d = *tb;
      }
      if (ta && tb) ++occluded;
      REQUIRE(sem[i] == want);
      if (want == 0)
        REQUIRE(std::isinf(depth[i]));
      else
        REQUIRE(depth[i] == doctest::Approx(want_d).epsilon(1e-6));
      near_px += want == 1;
      far_px += want == 2;
    }
  CHECK(near_px > 0);
  CHECK(far_px > 0);
  CHECK(occluded > 0);
}

TEST_CASE("render_frame channels share dimensions") {
  const World& w = testing::apartment();
  const RayCaster caster(w.bodies);
  const Camera cam = Camera::look({2.0, 2.0, 1.2}, 0.5, 0.0, 64, 48);
  const Frame fr = render_frame(cam, w.scene.gaussians, caster);
  CHECK(fr.width == 64);
  CHECK(fr.height == 48);
  CHECK(fr.rgb.size() == 64u * 48u * 3u);
  CHECK(fr.depth.size() == 64u * 48u);
  CHECK(fr.semantic.size() == 64u * 48u);
  for (float v : fr.rgb) REQUIRE((v >= 0.0f && v <= 1.0f + 1e-6f));
  // Semantic labels index bodies and agree with finite depth.
  for (std::size_t i = 0; i < fr.depth.size(); ++i) {
    REQUIRE(fr.semantic[i] <= w.bodies.size());
    REQUIRE((fr.semantic[i] == 0) == std::isinf(fr.depth[i]));
  }

  const Frame only_rgb = render_frame(cam, w.scene.gaussians, caster, {true, false, false});
  CHECK(only_rgb.rgb == fr.rgb);
  CHECK(only_rgb.depth.empty());
  CHECK(only_rgb.semantic.empty());
}

TEST_CASE("camera validation") {
  Camera c = axis_camera();
  CHECK_NOTHROW(c.validate());
  c.fov_y = kPi;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = axis_camera();
  c.near = 2.0;
  c.far = 1.0;
  CHECK_THROWS_AS(render_rgb(c, {}), ValidationError);
  c = axis_camera();
  c.width = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  // look() builds an orthonormal right-handed frame.
  const Camera l = Camera::look({0, 0, 0}, 0.7, -0.3);
  CHECK((l.rotation.transpose() * l.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(l.rotation.determinant() == doctest::Approx(1.0));
  CHECK(l.forward().z() == doctest::Approx(std::sin(-0.3)));
}
