#include "gsnav/error.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace gsnav;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double boundary_distance(const Aabb3& b, const Vec3& p) {
  double best = 1e300;
  for (int k = 0; k < 3; ++k) best = std::min({best, std::abs(p[k] - b.min[k]), std::abs(p[k] - b.max[k])});
  return best;
}

bool inside_closed(const Aabb3& b, const Vec3& p, double tol) {
  for (int k = 0; k < 3; ++k)
    if (p[k] < b.min[k] - tol || p[k] > b.max[k] + tol) return false;
  return true;
}

}  // namespace

TEST_CASE("minimal scene directory loads") {
  TempDir dir;
  Scene s = testing::empty_room(3, 3, "ignored");
  testing::add_object(s, testing::make_box("table_1", "table", {1, 1, 0}, {2, 2, 0.7}));
  save_scene(s, dir / "tiny");
  const Scene loaded = load_scene(dir / "tiny");
  CHECK(loaded.scene_id == "tiny");
  CHECK(loaded.objects.size() == 1);
  CHECK(loaded.gaussians.empty());
  CHECK(loaded.objects[0].aabb.max.z() == doctest::Approx(0.7));
}

TEST_CASE("inverted aabb is rejected naming the instance") {
  Scene s = testing::empty_room(3, 3);
  testing::add_object(s, testing::make_box("shelf_3", "shelf", {2, 0, 0}, {1, 1, 1}));
  try {
    validate_scene(s);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("shelf_3") != std::string::npos);
  }
  TempDir dir;
  std::filesystem::create_directories(dir / "bad");
  std::ofstream(dir / "bad" / "scene.json") << R"({"version":1,"floor_z":0,"ceiling_z":2.5,"taxonomy":["box"],
    "rooms":[],"walls":[],"objects":[{"instance_id":"box_9","category":"box",
    "aabb":{"min":[1,0,0],"max":[0,1,1]},"attributes":{},"mobility":"static"}]})";
  CHECK_THROWS_AS(load_scene(dir / "bad"), ValidationError);
}

TEST_CASE("other invariants") {
  Scene s = testing::empty_room(3, 3);
  testing::add_object(s, testing::make_box("a_1", "box", {0, 0, 0}, {1, 1, 1}));
  SUBCASE("duplicate ids") {
    testing::add_object(s, testing::make_box("a_1", "box", {1, 1, 0}, {2, 2, 1}));
    CHECK_THROWS_AS(validate_scene(s), ValidationError);
  }
  SUBCASE("door without state") {
    auto door = testing::make_box("door_1", "door", {0, 0, 0}, {1, 0.05, 2});
    door.door_state.reset();
    testing::add_object(s, door);
    CHECK_THROWS_AS(validate_scene(s), ValidationError);
  }
  SUBCASE("state on a non-door") {
    s.objects[0].door_state = DoorState::open;
    CHECK_THROWS_AS(validate_scene(s), ValidationError);
  }
  SUBCASE("category outside taxonomy") {
    s.taxonomy.clear();
    CHECK_THROWS_AS(validate_scene(s), ValidationError);
  }
}

TEST_CASE("bundled apartment fixture") {
  const Scene s = make_apartment_small();
  CHECK(s.objects.size() == 12);
  CHECK(s.gaussians.size() == 5000);
  TempDir dir;
  save_scene(s, dir / "apartment_small");
  const Scene loaded = load_scene(dir / "apartment_small");
  CHECK(loaded.objects.size() == 12);
  CHECK(loaded.gaussians.size() == 5000);
  CHECK(loaded.scene_id == "apartment_small");
}

TEST_CASE("scene.json round trip is byte-identical") {
  TempDir dir;
  for (const auto& name : synthetic_scene_names()) {
    save_scene(make_synthetic_scene(name), dir / name);
    const std::string first = slurp(dir / name / "scene.json");
    save_scene(load_scene(dir / name), dir / (name + "_again"));
    CHECK(slurp(dir / (name + "_again") / "scene.json") == first);
    CHECK(slurp(dir / (name + "_again") / "gaussians.bin") == slurp(dir / name / "gaussians.bin"));
  }
}

TEST_CASE("loaded fixtures satisfy the object invariants") {
  TempDir dir;
  for (const auto& name : synthetic_scene_names()) {
    save_scene(make_synthetic_scene(name), dir / name);
    const Scene s = load_scene(dir / name);
    std::set<std::string> ids;
    for (const auto& o : s.objects) {
      CHECK(ids.insert(o.instance_id).second);
      for (int k = 0; k < 3; ++k) CHECK(o.aabb.min[k] <= o.aabb.max[k]);
      CHECK(o.door_state.has_value() == is_door_category(o.category));
      CHECK(std::find(s.taxonomy.begin(), s.taxonomy.end(), o.category) != s.taxonomy.end());
    }
  }
}

TEST_CASE("gaussians.bin format") {
  TempDir dir;
  GaussianCloud cloud(3);
  cloud[1].mean = {1.5f, -2.0f, 0.25f};
  cloud[1].rotation = Eigen::Quaternionf(0.5f, 0.5f, 0.5f, 0.5f);
  cloud[2].opacity = 0.125f;
  write_gaussians(cloud, dir / "g.bin");
  const std::string bytes = slurp(dir / "g.bin");
  REQUIRE(bytes.size() == 4 + 4 + 8 + 3 * 14 * 4);
  CHECK(bytes.substr(0, 4) == "SGSB");
  std::uint64_t count = 0;
  std::memcpy(&count, bytes.data() + 8, 8);
  CHECK(count == 3);
  float w = 0;  // quaternion w sits after mean and scale
  std::memcpy(&w, bytes.data() + 16 + 14 * 4 + 6 * 4, 4);
  CHECK(w == 0.5f);

  const auto back = read_gaussians(dir / "g.bin");
  REQUIRE(back.size() == 3);
  CHECK(back[1].mean == cloud[1].mean);
  CHECK(back[2].opacity == 0.125f);
  CHECK(back[1].rotation.x() == 0.5f);

  std::ofstream(dir / "bad.bin", std::ios::binary) << "XXXX0000000000000000";
  CHECK_THROWS_AS(read_gaussians(dir / "bad.bin"), ParseError);
  std::string v2 = bytes;
  v2[4] = 2;
  std::ofstream(dir / "v2.bin", std::ios::binary) << v2;
  CHECK_THROWS_AS(read_gaussians(dir / "v2.bin"), VersionError);
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(read_gaussians(dir / "short.bin"), ParseError);
}

TEST_CASE("surface points on the unit cube") {
  const auto cube = testing::make_box("cube_1", "box", {0, 0, 0}, {1, 1, 1});
  const auto pts = object_surface_points(cube, 8);
  CHECK(pts.size() == 8);
  for (const auto& p : pts) {
    CHECK(inside_closed(cube.aabb, p, 1e-12));
    CHECK(boundary_distance(cube.aabb, p) <= 1e-9);
  }
  CHECK(object_surface_points(cube, 8) == pts);
  // The box extremes are always present, so hulls span the whole box.
  const auto many = object_surface_points(cube, 100);
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    CHECK(std::find(many.begin(), many.end(), corner) != many.end());
  }
}

TEST_CASE("per-face counts follow face areas") {
  const Aabb3 box{{0, 0, 0}, {2, 1, 1}};
  const auto counts = face_point_counts(box, 1000);
  REQUIRE(counts.size() == 6);
  // Face areas in -x,+x,-y,+y,-z,+z order, computed from the extents directly.
  const double ex = 2, ey = 1, ez = 1;
  const double areas[6] = {ey * ez, ey * ez, ex * ez, ex * ez, ex * ey, ex * ey};
  const double total = std::accumulate(std::begin(areas), std::end(areas), 0.0);
  std::size_t sum = 0;
  for (int f = 0; f < 6; ++f) {
    CHECK(std::abs(static_cast<double>(counts[f]) - 1000 * areas[f] / total) <= 1.0);
    sum += counts[f];
  }
  CHECK(sum == 1000);

  auto obj = testing::make_box("slab_1", "box", box.min, box.max);
  const auto pts = object_surface_points(obj, 1000);
  CHECK(pts.size() == 1000);
  for (const auto& p : pts) CHECK(boundary_distance(box, p) <= 1e-9);
}

TEST_CASE("surface points property over random boxes") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Vec3 lo(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 1));
    Vec3 hi = lo + Vec3(rng.uniform(0.01, 3), rng.uniform(0.01, 3), rng.uniform(0.01, 2));
    const auto obj = testing::make_box("obj_" + std::to_string(i), "box", lo, hi);
    const std::size_t n = 1 + rng.below(300);
    const auto pts = object_surface_points(obj, n);
    REQUIRE(pts.size() == n);
    for (const auto& p : pts) {
      CHECK(inside_closed(obj.aabb, p, 1e-9));
      CHECK(boundary_distance(obj.aabb, p) <= 1e-9);
    }
  }
}

TEST_CASE("explicit surface points win") {
  auto obj = testing::make_box("x_1", "box", {0, 0, 0}, {1, 1, 1});
  obj.surface_points = std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}};
  CHECK(object_surface_points(obj, 50).size() == 2);
}

TEST_CASE("apportion") {
  const std::vector<double> w = {10, 30};
  CHECK(apportion(w, 40) == std::vector<std::size_t>{10, 30});
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> ws(1 + rng.below(8));
    for (auto& x : ws) x = rng.uniform(0, 5);
    const std::size_t n = rng.below(500);
    const auto out = apportion(ws, n);
    CHECK(std::accumulate(out.begin(), out.end(), std::size_t{0}) == n);
    const double total = std::accumulate(ws.begin(), ws.end(), 0.0);
    for (std::size_t k = 0; k < ws.size(); ++k) CHECK(std::abs(out[k] - n * ws[k] / total) < 1.0);
  }
}
