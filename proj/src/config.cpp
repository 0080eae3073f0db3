#include "gsnav/config.hpp"

#include "gsnav/error.hpp"
#include "gsnav/image_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace gsnav {

using nlohmann::json;

AgentSpec parse_agent_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError(fmt::format("agent '{}' needs a kind prefix", text));
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  if (value.empty()) throw ValidationError(fmt::format("agent '{}' has an empty value", text));
  AgentSpec spec;
  spec.value = value;
  if (kind == "builtin") {
    spec.kind = AgentKind::builtin;
  } else if (kind == "subprocess") {
    spec.kind = AgentKind::subprocess;
  } else if (kind == "socket") {
    spec.kind = AgentKind::socket;
    try {
      std::size_t used = 0;
      spec.port = std::stoi(value, &used);
      if (used != value.size() || spec.port < 0 || spec.port > 65535) throw std::invalid_argument("range");
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("bad socket port '{}'", value));
    }
  } else {
    throw ValidationError(fmt::format("unknown agent kind '{}'", kind));
  }
  return spec;
}

namespace {

// Reads known keys from an object, complaining about anything else.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(fmt::format("{} must be an object", where_));
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}.{}: {}", where_, key, e.what()));
    }
  }
  [[nodiscard]] const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ValidationError(fmt::format("{}: unknown key '{}'", where_, k));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() || base.empty()) ? path : base / path;
}

}  // namespace

json occupancy_params_json(const OccupancyParams& p) {
  json j = {{"slice_height", p.slice_height},
            {"agent_radius", p.agent_radius},
            {"resolution", p.resolution},
            {"inflate", p.inflate}};
  j["band_min"] = p.band_min ? json(*p.band_min) : json(nullptr);
  return j;
}

json collision_params_json(const CollisionParams& p) {
  return {{"link_distance", p.link_distance},
          {"surface_density", p.surface_density},
          {"min_surface_points", p.min_surface_points},
          {"max_surface_points", p.max_surface_points}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Reader r(j, "config");
  std::vector<std::string> scenes;
  std::string episodes, output;
  r.get("scenes", scenes);
  r.get("episodes", episodes);
  r.get("output_dir", output);
  r.get("agent", c.agent);
  r.get("seed", c.seed);
  r.get("jobs", c.jobs);
  r.get("action_timeout_s", c.action_timeout_s);
  r.get("write_logs", c.write_logs);
  for (const auto& s : scenes) c.scenes.push_back(resolve(base_dir, s));
  if (!episodes.empty()) c.episodes = resolve(base_dir, episodes);
  if (!output.empty()) c.output_dir = resolve(base_dir, output);

  if (const json* s = r.child("sim")) {
    Reader sr(*s, "config.sim");
    auto& p = c.sim;
    sr.get("agent_radius", p.agent_radius);
    sr.get("agent_height", p.agent_height);
    sr.get("dt", p.dt);
    sr.get("v_max", p.v_max);
    sr.get("omega_max", p.omega_max);
    sr.get("step_length", p.step_length);
    double turn_deg = p.turn_angle * 180.0 / kPi;
    sr.get("turn_deg", turn_deg);
    p.turn_angle = turn_deg * kPi / 180.0;
    sr.get("forward_speed", p.forward_speed);
    sr.get("turn_rate", p.turn_rate);
    sr.get("nogoal_time_cap", p.nogoal_time_cap);
    sr.get("max_steps", p.max_steps);
    sr.get("stuck_window", p.stuck_window);
    sr.get("stuck_displacement", p.stuck_displacement);
    sr.get("recovery_backoff", p.recovery_backoff);
    sr.get("recovery", p.recovery);
    sr.finish();
  }
  if (const json* m = r.child("metrics")) {
    Reader mr(*m, "config.metrics");
    auto& p = c.metrics;
    mr.get("r_tol", p.r_tol);
    double sr_radius = -1.0;
    mr.get("success_radius", sr_radius);
    if (sr_radius > 0.0) p.success_radius = sr_radius;
    mr.get("require_stop", p.require_stop);
    std::string mode = p.icp_mode == IcpMode::binary ? "binary" : "depth";
    mr.get("icp_mode", mode);
    if (mode != "binary" && mode != "depth") throw ValidationError("config.metrics.icp_mode must be binary or depth");
    p.icp_mode = mode == "binary" ? IcpMode::binary : IcpMode::depth;
    mr.get("explore_cell", p.explore_cell);
    mr.get("nogoal_time_cap", p.nogoal_time_cap);
    mr.finish();
  }
  if (const json* o = r.child("occupancy")) {
    Reader orr(*o, "config.occupancy");
    auto& p = c.occupancy;
    orr.get("slice_height", p.slice_height);
    orr.get("agent_radius", p.agent_radius);
    orr.get("resolution", p.resolution);
    orr.get("inflate", p.inflate);
    if (const json* b = orr.child("band_min"); b && !b->is_null()) p.band_min = b->get<double>();
    orr.finish();
  }
  if (const json* o = r.child("collision")) {
    Reader cr(*o, "config.collision");
    auto& p = c.collision;
    cr.get("link_distance", p.link_distance);
    cr.get("surface_density", p.surface_density);
    cr.get("min_surface_points", p.min_surface_points);
    cr.get("max_surface_points", p.max_surface_points);
    cr.finish();
  }
  if (const json* o = r.child("render")) {
    Reader rr(*o, "config.render");
    auto& p = c.render;
    rr.get("enabled", p.enabled);
    rr.get("width", p.width);
    rr.get("height", p.height);
    rr.get("fov_deg", p.fov_deg);
    rr.get("rgb", p.channels.rgb);
    rr.get("depth", p.channels.depth);
    rr.get("semantic", p.channels.semantic);
    rr.finish();
  }
  r.finish();
  if (c.jobs == 0) c.jobs = 1;
  return c;
}

json run_config_to_json(const RunConfig& c) {
  std::vector<std::string> scenes;
  for (const auto& s : c.scenes) scenes.push_back(s.generic_string());
  const auto& s = c.sim;
  const auto& m = c.metrics;
  json metrics = {{"r_tol", m.r_tol},
                  {"require_stop", m.require_stop},
                  {"icp_mode", m.icp_mode == IcpMode::binary ? "binary" : "depth"},
                  {"explore_cell", m.explore_cell},
                  {"nogoal_time_cap", m.nogoal_time_cap}};
  if (m.success_radius) metrics["success_radius"] = *m.success_radius;
  return {{"scenes", scenes},
          {"episodes", c.episodes.generic_string()},
          {"output_dir", c.output_dir.generic_string()},
          {"agent", c.agent},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"action_timeout_s", c.action_timeout_s},
          {"write_logs", c.write_logs},
          {"sim",
           {{"agent_radius", s.agent_radius},
            {"agent_height", s.agent_height},
            {"dt", s.dt},
            {"v_max", s.v_max},
            {"omega_max", s.omega_max},
            {"step_length", s.step_length},
            {"turn_deg", s.turn_angle * 180.0 / kPi},
            {"forward_speed", s.forward_speed},
            {"turn_rate", s.turn_rate},
            {"nogoal_time_cap", s.nogoal_time_cap},
            {"max_steps", s.max_steps},
            {"stuck_window", s.stuck_window},
            {"stuck_displacement", s.stuck_displacement},
            {"recovery_backoff", s.recovery_backoff},
            {"recovery", s.recovery}}},
          {"metrics", metrics},
          {"occupancy", occupancy_params_json(c.occupancy)},
          {"collision", collision_params_json(c.collision)},
          {"render",
           {{"enabled", c.render.enabled},
            {"width", c.render.width},
            {"height", c.render.height},
            {"fov_deg", c.render.fov_deg},
            {"rgb", c.render.channels.rgb},
            {"depth", c.render.channels.depth},
            {"semantic", c.render.channels.semantic}}}};
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError(fmt::format("cannot open config {}", file.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }
  return run_config_from_json(j, file.parent_path());
}

std::string config_hash(const RunConfig& config) {
  json j = run_config_to_json(config);
  j.erase("jobs");
  j.erase("output_dir");
  // Paths differ between checkouts; only their names matter for identity.
  json scenes = json::array();
  for (const auto& s : config.scenes) scenes.push_back(s.filename().generic_string());
  j["scenes"] = scenes;
  j["episodes"] = config.episodes.filename().generic_string();
  return sha256_hex(j.dump());
}

void validate_run_config(const RunConfig& config) {
  parse_agent_spec(config.agent);
  if (config.scenes.empty()) throw ValidationError("config.scenes is empty");
  for (const auto& s : config.scenes)
    if (!std::filesystem::exists(s / "scene.json"))
      throw ValidationError(fmt::format("scene '{}' has no scene.json", s.string()));
  if (config.episodes.empty() || !std::filesystem::exists(config.episodes))
    throw ValidationError(fmt::format("episode file '{}' does not exist", config.episodes.string()));
  if (config.action_timeout_s <= 0.0) throw ValidationError("action_timeout_s must be positive");
}

}  // namespace gsnav
