#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/metrics.hpp"
#include "gsnav/semantic_map.hpp"
#include "gsnav/sim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gsnav {

struct RenderConfig {
  bool enabled = false;
  int width = 224;
  int height = 224;
  double fov_deg = 90.0;
  RenderChannels channels;
};

enum class AgentKind { builtin, subprocess, socket };

struct AgentSpec {
  AgentKind kind = AgentKind::builtin;
  std::string value;  // builtin name or command line
  int port = 0;
};

// "builtin:<name>", "subprocess:<command>" or "socket:<port>".
AgentSpec parse_agent_spec(const std::string& text);

struct RunConfig {
  std::vector<std::filesystem::path> scenes;
  std::filesystem::path episodes;
  std::string agent = "builtin:oracle";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path output_dir = "run_output";
  double action_timeout_s = 30.0;
  bool write_logs = true;
  SimParams sim;
  MetricConfig metrics;
  OccupancyParams occupancy;
  CollisionParams collision;
  RenderConfig render;
};

// Relative paths are resolved against base_dir. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& file);

// SHA-256 over the canonical JSON of everything that affects results
// (excludes jobs and output_dir).
std::string config_hash(const RunConfig& config);

// Throws ValidationError when referenced files are missing or the agent spec is bad.
void validate_run_config(const RunConfig& config);

nlohmann::json occupancy_params_json(const OccupancyParams& p);
nlohmann::json collision_params_json(const CollisionParams& p);

}  // namespace gsnav
