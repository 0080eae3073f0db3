#include "gsnav/scene.hpp"

#include "gsnav/error.hpp"
#include "gsnav/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace gsnav {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string_view to_string(DoorState s) {
  switch (s) {
    case DoorState::open: return "open";
    case DoorState::closed: return "closed";
    case DoorState::half_open: return "half_open";
  }
  return "open";
}

std::string_view to_string(Mobility m) {
  switch (m) {
    case Mobility::static_body: return "static";
    case Mobility::movable: return "movable";
    case Mobility::articulated: return "articulated";
  }
  return "static";
}

DoorState door_state_from_string(std::string_view s) {
  if (s == "open") return DoorState::open;
  if (s == "closed") return DoorState::closed;
  if (s == "half_open") return DoorState::half_open;
  throw ValidationError(fmt::format("unknown door_state '{}'", s));
}

Mobility mobility_from_string(std::string_view s) {
  if (s == "static") return Mobility::static_body;
  if (s == "movable") return Mobility::movable;
  if (s == "articulated") return Mobility::articulated;
  throw ValidationError(fmt::format("unknown mobility '{}'", s));
}

bool is_door_category(std::string_view category) { return category.find("door") != std::string_view::npos; }

const ObjectInstance* Scene::find_object(std::string_view id) const {
  for (const auto& o : objects)
    if (o.instance_id == id) return &o;
  return nullptr;
}

int Scene::room_at(const Vec2& p) const {
  for (std::size_t i = 0; i < rooms.size(); ++i)
    if (point_in_ring(p, rooms[i].polygon)) return static_cast<int>(i);
  return -1;
}

void validate_scene(const Scene& scene) {
  if (!(scene.floor_z < scene.ceiling_z))
    throw ValidationError(fmt::format("floor_z ({}) must be below ceiling_z ({})", scene.floor_z, scene.ceiling_z));

  const std::set<std::string> taxonomy(scene.taxonomy.begin(), scene.taxonomy.end());
  std::set<std::string> ids;
  for (const auto& o : scene.objects) {
    if (o.instance_id.empty()) throw ValidationError("objects[].instance_id: empty id");
    if (!ids.insert(o.instance_id).second)
      throw ValidationError(fmt::format("objects[].instance_id: duplicate '{}'", o.instance_id));
    if (!taxonomy.contains(o.category))
      throw ValidationError(fmt::format("{}: category '{}' not in taxonomy", o.instance_id, o.category));
    for (int k = 0; k < 3; ++k) {
      if (!(o.aabb.min[k] <= o.aabb.max[k]))
        throw ValidationError(fmt::format("{}: aabb.min.{} > aabb.max.{}", o.instance_id, "xyz"[k], "xyz"[k]));
    }
    if (is_door_category(o.category) != o.door_state.has_value())
      throw ValidationError(fmt::format("{}: door_state must be present iff category is a door class", o.instance_id));
  }
  for (const auto& r : scene.rooms) {
    if (!ring_is_simple(r.polygon))
      throw ValidationError(fmt::format("rooms[{}].polygon: not a simple polygon", r.name));
  }
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    const Gaussian& g = scene.gaussians[i];
    if (!(g.opacity >= 0.0f && g.opacity <= 1.0f))
      throw ValidationError(fmt::format("gaussians[{}].opacity: {} outside [0,1]", i, g.opacity));
    if (!(g.scale.minCoeff() > 0.0f))
      throw ValidationError(fmt::format("gaussians[{}].scale: not strictly positive", i));
    if (std::abs(static_cast<double>(g.rotation.norm()) - 1.0) > 1e-6)
      throw ValidationError(fmt::format("gaussians[{}].rotation: not unit norm", i));
  }
}

namespace {

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec2 vec2_from(const json& j, std::string_view field) {
  if (!j.is_array() || j.size() != 2) throw ParseError(fmt::format("{}: expected [x, y]", field));
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const json& j, std::string_view field) {
  if (!j.is_array() || j.size() != 3) throw ParseError(fmt::format("{}: expected [x, y, z]", field));
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json scene_to_json(const Scene& scene) {
  json j;
  j["version"] = scene.version;
  j["floor_z"] = scene.floor_z;
  j["ceiling_z"] = scene.ceiling_z;
  j["taxonomy"] = scene.taxonomy;
  j["rooms"] = json::array();
  for (const auto& r : scene.rooms) {
    json poly = json::array();
    for (const auto& p : r.polygon) poly.push_back(vec_json(p));
    j["rooms"].push_back({{"name", r.name}, {"label", r.label}, {"polygon", poly}});
  }
  j["walls"] = json::array();
  for (const auto& w : scene.walls) j["walls"].push_back(json::array({vec_json(w.a), vec_json(w.b)}));
  j["objects"] = json::array();
  for (const auto& o : scene.objects) {
    json jo;
    jo["instance_id"] = o.instance_id;
    jo["category"] = o.category;
    jo["aabb"] = {{"min", vec_json(o.aabb.min)}, {"max", vec_json(o.aabb.max)}};
    jo["attributes"] = o.attributes;
    if (o.door_state) jo["door_state"] = to_string(*o.door_state);
    jo["mobility"] = to_string(o.mobility);
    if (o.surface_points) {
      json pts = json::array();
      for (const auto& p : *o.surface_points) pts.push_back(vec_json(p));
      jo["surface_points"] = pts;
    }
    j["objects"].push_back(jo);
  }
  return j;
}

Scene scene_from_json(const json& j) {
  Scene s;
  if (!j.is_object()) throw ParseError("scene.json: top level must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer()) throw ParseError("scene.json: missing integer 'version'");
  s.version = j["version"].get<int>();
  if (s.version != kSceneFormatVersion)
    throw VersionError(fmt::format("scene.json: unsupported version {} (expected {})", s.version, kSceneFormatVersion));
  s.floor_z = j.at("floor_z").get<double>();
  s.ceiling_z = j.at("ceiling_z").get<double>();
  s.taxonomy = j.at("taxonomy").get<std::vector<std::string>>();
  for (const auto& jr : j.value("rooms", json::array())) {
    Room r;
    r.name = jr.at("name").get<std::string>();
    r.label = jr.at("label").get<std::string>();
    for (const auto& p : jr.at("polygon")) r.polygon.push_back(vec2_from(p, "rooms[].polygon"));
    s.rooms.push_back(std::move(r));
  }
  for (const auto& jw : j.value("walls", json::array())) {
    if (!jw.is_array() || jw.size() != 2) throw ParseError("walls[]: expected [[x1,y1],[x2,y2]]");
    s.walls.push_back({vec2_from(jw[0], "walls[]"), vec2_from(jw[1], "walls[]")});
  }
  for (const auto& jo : j.at("objects")) {
    ObjectInstance o;
    o.instance_id = jo.at("instance_id").get<std::string>();
    o.category = jo.at("category").get<std::string>();
    o.aabb.min = vec3_from(jo.at("aabb").at("min"), o.instance_id + ".aabb.min");
    o.aabb.max = vec3_from(jo.at("aabb").at("max"), o.instance_id + ".aabb.max");
    o.attributes = jo.value("attributes", std::map<std::string, std::string>{});
    if (jo.contains("door_state")) o.door_state = door_state_from_string(jo["door_state"].get<std::string>());
    o.mobility = mobility_from_string(jo.at("mobility").get<std::string>());
    if (jo.contains("surface_points")) {
      std::vector<Vec3> pts;
      for (const auto& p : jo["surface_points"]) pts.push_back(vec3_from(p, o.instance_id + ".surface_points"));
      o.surface_points = std::move(pts);
    }
    s.objects.push_back(std::move(o));
  }
  return s;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("gaussians.bin: truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string scene_json_text(const Scene& scene) { return scene_to_json(scene).dump(2) + "\n"; }

Scene parse_scene_json(std::string_view text, std::string scene_id) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("scene.json: {}", e.what()));
  }
  Scene s;
  try {
    s = scene_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("scene.json: {}", e.what()));
  }
  s.scene_id = std::move(scene_id);
  return s;
}

GaussianCloud read_gaussians(const std::filesystem::path& file) {
  const std::string data = read_file(file);
  if (data.size() < 16 || data.compare(0, 4, "SGSB") != 0) throw ParseError("gaussians.bin: bad magic");
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(data, pos);
  if (version != kGaussianFormatVersion)
    throw VersionError(fmt::format("gaussians.bin: unsupported version {}", version));
  const auto count = take<std::uint64_t>(data, pos);
  if (data.size() != pos + count * 14 * sizeof(float))
    throw ParseError(fmt::format("gaussians.bin: size mismatch for {} primitives", count));
  GaussianCloud cloud(count);
  for (auto& g : cloud) {
    float f[14];
    for (float& x : f) x = take<float>(data, pos);
    g.mean = {f[0], f[1], f[2]};
    g.scale = {f[3], f[4], f[5]};
    g.rotation = Eigen::Quaternionf(f[6], f[7], f[8], f[9]);
    g.opacity = f[10];
    g.color = {f[11], f[12], f[13]};
  }
  return cloud;
}

void write_gaussians(const GaussianCloud& cloud, const std::filesystem::path& file) {
  std::string out = "SGSB";
  put<std::uint32_t>(out, kGaussianFormatVersion);
  put<std::uint64_t>(out, cloud.size());
  for (const auto& g : cloud) {
    const float f[14] = {g.mean.x(),       g.mean.y(),       g.mean.z(),       g.scale.x(),  g.scale.y(),
                         g.scale.z(),      g.rotation.w(),   g.rotation.x(),   g.rotation.y(), g.rotation.z(),
                         g.opacity,        g.color.x(),      g.color.y(),      g.color.z()};
    for (float x : f) put(out, x);
  }
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Scene load_scene(const std::filesystem::path& dir) {
  const auto scene_file = dir / "scene.json";
  const auto gauss_file = dir / "gaussians.bin";
  if (!std::filesystem::exists(scene_file)) throw ParseError(fmt::format("{} not found", scene_file.string()));
  Scene s = parse_scene_json(read_file(scene_file), dir.filename().string());
  if (s.scene_id.empty()) s.scene_id = dir.parent_path().filename().string();
  if (std::filesystem::exists(gauss_file)) s.gaussians = read_gaussians(gauss_file);
  validate_scene(s);
  return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "scene.json", std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", (dir / "scene.json").string()));
  os << scene_json_text(scene);
  os.close();
  write_gaussians(scene.gaussians, dir / "gaussians.bin");
}

std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t n) {
  std::vector<std::size_t> out(weights.size(), 0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || total <= 0.0) return out;
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(n) * weights[i] / total;
    out[i] = static_cast<std::size_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[order[k % order.size()]];
  return out;
}

std::vector<std::size_t> face_point_counts(const Aabb3& box, std::size_t n) {
  const Vec3 e = box.extent();
  const double yz = e.y() * e.z();
  const double xz = e.x() * e.z();
  const double xy = e.x() * e.y();
  const double areas[6] = {yz, yz, xz, xz, xy, xy};
  return apportion(areas, n);
}

std::vector<Vec3> object_surface_points(const ObjectInstance& obj, std::size_t n) {
  if (obj.surface_points) return *obj.surface_points;

  const Aabb3& box = obj.aabb;
  std::vector<Vec3> pts;
  pts.reserve(n);
  // Corners first so hulls and footprints span the whole box.
  if (n >= 8) {
    for (int i = 0; i < 8; ++i)
      pts.emplace_back(i & 1 ? box.max.x() : box.min.x(), i & 2 ? box.max.y() : box.min.y(),
                       i & 4 ? box.max.z() : box.min.z());
  }
  const auto counts = face_point_counts(box, n - pts.size());
  if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 0) {
    pts.resize(n, box.min);
    return pts;
  }

  Rng rng(stable_hash(obj.instance_id));
  for (int face = 0; face < 6; ++face) {
    const std::size_t k = counts[face];
    if (k == 0) continue;
    const int axis = face / 2;
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const double fixed = (face % 2 == 0) ? box.min[axis] : box.max[axis];
    const double wu = box.max[u] - box.min[u];
    const double wv = box.max[v] - box.min[v];
    // Grid of at least k cells with roughly square cells.
    auto nu = static_cast<std::size_t>(std::max(1.0, std::round(std::sqrt(static_cast<double>(k) * wu / wv))));
    nu = std::min(nu, k);
    const std::size_t nv = (k + nu - 1) / nu;
    // Choose k of the nu*nv cells: partial Fisher-Yates.
    std::vector<std::size_t> cells(nu * nv);
    std::iota(cells.begin(), cells.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(cells[i], cells[i + rng.below(cells.size() - i)]);
    std::sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i) {
      const double cu = static_cast<double>(cells[i] % nu);
      const double cv = static_cast<double>(cells[i] / nu);
      Vec3 p;
      p[axis] = fixed;
      p[u] = std::min(box.max[u], box.min[u] + wu * (cu + rng.uniform()) / static_cast<double>(nu));
      p[v] = std::min(box.max[v], box.min[v] + wv * (cv + rng.uniform()) / static_cast<double>(nv));
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace gsnav
