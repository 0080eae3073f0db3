#pragma once

#include "gsnav/config.hpp"
#include "gsnav/episode.hpp"
#include "gsnav/metrics.hpp"
#include "gsnav/protocol.hpp"
#include "gsnav/sim.hpp"
#include "gsnav/world.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace gsnav {

struct ServeOptions {
  std::size_t max_steps = 500;
  std::chrono::milliseconds action_timeout{30000};
};

struct EpisodeOutcome {
  std::string episode_id;
  TrajectoryLog log;
  bool protocol_failure = false;
  std::string failure;
  bool agent_timeout = false;
  std::size_t steps = 0;
};

// Drives one episode over an already greeted channel. Malformed agent
// messages abort the episode (protocol_failure); a silent agent counts as stop.
// Throws TransportError when the channel dies.
EpisodeOutcome serve_episode(Environment& env, AgentChannel& channel, const Episode& episode,
                             const ServeOptions& options);

using EnvironmentFactory = std::function<std::unique_ptr<Environment>(const Episode&)>;

// hello, every episode in order, bye. Episodes after a transport failure are
// reported as failures rather than thrown.
std::vector<EpisodeOutcome> serve_session(AgentChannel& channel, const std::vector<const Episode*>& episodes,
                                          const EnvironmentFactory& make_env, const ServeOptions& options);

struct BakeInfo {
  bool cache_hit = false;
  std::string content_hash;
  std::string note;  // why the cache was (not) used
  double build_ms = 0.0;
};

std::string scene_content_hash(const std::filesystem::path& scene_dir, const CollisionParams& collision,
                               const OccupancyParams& occupancy);

// Rebuilds collision bodies and map layers and writes them under <scene>/bake.
World bake_scene(const std::filesystem::path& scene_dir, const CollisionParams& collision,
                 const OccupancyParams& occupancy, BakeInfo* info = nullptr);

// Loads a scene, reusing the bake when its content hash matches. Stale or
// corrupt caches are rebuilt with a warning.
World load_world(const std::filesystem::path& scene_dir, const CollisionParams& collision,
                 const OccupancyParams& occupancy, BakeInfo* info = nullptr);

// Observation callback for an environment over `world`; `caster` must outlive it.
ObservationFn make_observer(const World& world, const RayCaster& caster, const RenderConfig& render,
                            double agent_height);

struct RunSummary {
  std::string config_hash;
  MetricReport report;
  std::vector<EpisodeOutcome> outcomes;
  std::filesystem::path csv;
  std::filesystem::path slices_csv;
  std::filesystem::path json;
};

// Runs every episode with the configured agent, scores and writes reports.
RunSummary run_suite(const RunConfig& config);

// Rescores the logs of a previous run (output_dir/logs) and rewrites the reports.
RunSummary score_run(const RunConfig& config);

// Human-readable table of a summary.json.
std::string format_report(const nlohmann::json& summary);

}  // namespace gsnav
