#include "gsnav/harness.hpp"

#include "gsnav/agents.hpp"
#include "gsnav/error.hpp"
#include "gsnav/image_io.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace gsnav {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kBakeFormat = 1;

TrajectoryLog empty_log(const Episode& ep, DoneReason reason) {
  TrajectoryLog log;
  log.episode_id = ep.episode_id;
  log.scene_id = ep.scene_id;
  log.task_type = std::string(to_string(ep.task_type));
  log.done_reason = reason;
  return log;
}

EpisodeOutcome failed_outcome(const Episode& ep, std::string why) {
  EpisodeOutcome out;
  out.episode_id = ep.episode_id;
  out.log = empty_log(ep, DoneReason::aborted);
  out.protocol_failure = true;
  out.failure = std::move(why);
  return out;
}

json aborted_step() {
  return {{"type", "step"}, {"obs", nullptr}, {"contacts", json::array()}, {"done", true}, {"done_reason", "aborted"}};
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  os << text;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

EpisodeOutcome serve_episode(Environment& env, AgentChannel& channel, const Episode& episode,
                             const ServeOptions& options) {
  EpisodeOutcome out;
  out.episode_id = episode.episode_id;
  std::optional<Frame> obs;
  try {
    obs = env.reset(episode).second;
  } catch (const EpisodeError& e) {
    return failed_outcome(episode, e.what());
  }
  channel.send(reset_message(episode, obs));

  auto fail = [&](std::string why) {
    spdlog::warn("episode {}: protocol failure: {}", episode.episode_id, why);
    out.protocol_failure = true;
    out.failure = std::move(why);
    env.terminate(DoneReason::aborted);
    channel.send(aborted_step());
  };

  while (!env.done()) {
    const auto line = channel.receive(options.action_timeout);
    Action action = DiscreteAction::stop;
    if (!line) {
      out.agent_timeout = true;
      spdlog::warn("episode {}: agent timed out, treating as stop", episode.episode_id);
    } else {
      json msg;
      try {
        msg = json::parse(*line);
      } catch (const json::exception&) {
        fail("agent sent invalid JSON");
        break;
      }
      if (!msg.is_object() || msg.value("type", "") != "action") {
        fail("expected an action message");
        break;
      }
      try {
        action = action_from_json(msg);
      } catch (const ProtocolError& e) {
        fail(e.what());
        break;
      }
    }
    StepResult result;
    try {
      result = env.step(action);
    } catch (const ValidationError& e) {
      fail(e.what());
      break;
    }
    // The cap must show up in this step's reply, or the agent sends one more action.
    if (!result.done && env.steps() >= options.max_steps) {
      env.terminate(DoneReason::max_steps);
      result.done = true;
      result.done_reason = DoneReason::max_steps;
    }
    channel.send(step_message(result));
  }
  out.log = env.finalize();
  out.steps = env.steps();
  channel.send(close_message(episode.episode_id, episode.episode_id));
  return out;
}

std::vector<EpisodeOutcome> serve_session(AgentChannel& channel, const std::vector<const Episode*>& episodes,
                                          const EnvironmentFactory& make_env, const ServeOptions& options) {
  std::vector<EpisodeOutcome> outcomes;
  std::string dead;
  try {
    handshake(channel, episodes.size(), options.action_timeout);
  } catch (const Error& e) {
    dead = e.what();
  }
  for (const Episode* ep : episodes) {
    if (!dead.empty()) {
      outcomes.push_back(failed_outcome(*ep, dead));
      continue;
    }
    try {
      auto env = make_env(*ep);
      if (!env) {
        outcomes.push_back(failed_outcome(*ep, fmt::format("no scene '{}' loaded", ep->scene_id)));
        continue;
      }
      outcomes.push_back(serve_episode(*env, channel, *ep, options));
    } catch (const TransportError& e) {
      dead = e.what();
      spdlog::warn("agent channel lost: {}", dead);
      outcomes.push_back(failed_outcome(*ep, dead));
    }
  }
  if (dead.empty()) {
    try {
      channel.send(bye_message());
    } catch (const TransportError&) {
    }
  }
  return outcomes;
}

std::string scene_content_hash(const fs::path& scene_dir, const CollisionParams& collision,
                               const OccupancyParams& occupancy) {
  std::string blob = read_text(scene_dir / "scene.json");
  blob += '\0';
  if (fs::exists(scene_dir / "gaussians.bin")) blob += read_text(scene_dir / "gaussians.bin");
  blob += '\0';
  blob += json{{"format", kBakeFormat},
               {"collision", collision_params_json(collision)},
               {"occupancy", occupancy_params_json(occupancy)}}
              .dump();
  return sha256_hex(blob);
}

namespace {

void write_bake(const fs::path& scene_dir, const World& world, const std::string& hash) {
  const fs::path dir = scene_dir / "bake";
  fs::create_directories(dir);
  fs::remove(dir / "cache.json");
  write_collision_bodies(world.bodies, dir / "collision.bin");
  write_occupancy(world.grid, dir / "occupancy.pgm", dir / "occupancy.json");
  write_text(dir / "semantic_map.json", semantic_map_json(world.map));
  write_text(dir / "cache.json", json{{"content_hash", hash},
                                      {"format", kBakeFormat},
                                      {"scene_id", world.scene.scene_id},
                                      {"bodies", world.bodies.size()}}
                                         .dump(2) +
                                     "\n");
}

}  // namespace

World bake_scene(const fs::path& scene_dir, const CollisionParams& collision, const OccupancyParams& occupancy,
                 BakeInfo* info) {
  const auto t0 = std::chrono::steady_clock::now();
  Scene scene = load_scene(scene_dir);
  auto bodies = build_scene_bodies(scene, collision);
  World world = make_world(std::move(scene), std::move(bodies), occupancy);
  const std::string hash = scene_content_hash(scene_dir, collision, occupancy);
  write_bake(scene_dir, world, hash);
  if (info) {
    info->cache_hit = false;
    info->content_hash = hash;
    info->note = "baked";
    info->build_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return world;
}

World load_world(const fs::path& scene_dir, const CollisionParams& collision, const OccupancyParams& occupancy,
                 BakeInfo* info) {
  const auto t0 = std::chrono::steady_clock::now();
  Scene scene = load_scene(scene_dir);
  const std::string hash = scene_content_hash(scene_dir, collision, occupancy);
  const fs::path dir = scene_dir / "bake";
  std::optional<std::vector<CollisionBody>> bodies;
  std::string note = "no cache";
  if (fs::exists(dir / "cache.json")) {
    try {
      const json meta = json::parse(read_text(dir / "cache.json"));
      if (meta.at("content_hash").get<std::string>() != hash) {
        note = "stale cache (content hash mismatch), rebuilding";
        spdlog::warn("{}: {}", scene_dir.string(), note);
      } else {
        auto cached = read_collision_bodies(dir / "collision.bin");
        if (cached.size() != scene.objects.size()) throw ParseError("body count does not match the scene");
        for (std::size_t i = 0; i < cached.size(); ++i)
          if (cached[i].instance_id != scene.objects[i].instance_id) throw ParseError("body ids do not match the scene");
        bodies = std::move(cached);
        note = "cache hit";
      }
    } catch (const std::exception& e) {
      note = fmt::format("corrupt cache ({}), rebuilding", e.what());
      spdlog::warn("{}: {}", scene_dir.string(), note);
    }
  }
  const bool hit = bodies.has_value();
  if (!hit) bodies = build_scene_bodies(scene, collision);
  World world = make_world(std::move(scene), std::move(*bodies), occupancy);
  if (!hit) write_bake(scene_dir, world, hash);
  if (info) {
    info->cache_hit = hit;
    info->content_hash = hash;
    info->note = note;
    info->build_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  spdlog::debug("{}: {} in {:.1f} ms", scene_dir.string(), note, info ? info->build_ms : 0.0);
  return world;
}

ObservationFn make_observer(const World& world, const RayCaster& caster, const RenderConfig& render,
                            double agent_height) {
  return [&world, &caster, render, agent_height](const AgentState& s) {
    const Camera cam = Camera::look(Vec3(s.position.x(), s.position.y(), world.scene.floor_z + agent_height), s.theta,
                                    0.0, render.width, render.height, render.fov_deg * kPi / 180.0);
    return render_frame(cam, world.scene.gaussians, caster, render.channels);
  };
}

namespace {

struct LoadedWorld {
  World world;
  std::unique_ptr<RayCaster> caster;
};

std::map<std::string, std::unique_ptr<LoadedWorld>> load_worlds(const RunConfig& config) {
  std::map<std::string, std::unique_ptr<LoadedWorld>> worlds;
  for (const auto& dir : config.scenes) {
    auto lw = std::make_unique<LoadedWorld>();
    lw->world = load_world(dir, config.collision, config.occupancy);
    lw->caster = std::make_unique<RayCaster>(lw->world.bodies);
    const std::string id = lw->world.scene.scene_id;
    worlds[id] = std::move(lw);
  }
  return worlds;
}

RunSummary write_reports(const RunConfig& config, const std::vector<Episode>& episodes,
                         std::vector<EpisodeOutcome> outcomes,
                         const std::map<std::string, std::unique_ptr<LoadedWorld>>& worlds) {
  RunSummary summary;
  summary.config_hash = config_hash(config);
  std::vector<EpisodeScore> rows;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto it = worlds.find(episodes[i].scene_id);
    const OccupancyGrid empty_grid;
    EpisodeScore row = score_episode(outcomes[i].log, episodes[i], it != worlds.end() ? it->second->world.grid : empty_grid,
                                     config.metrics);
    row.failed = outcomes[i].protocol_failure;
    row.failure = outcomes[i].failure;
    rows.push_back(std::move(row));
  }
  summary.report = aggregate(std::move(rows));
  fs::create_directories(config.output_dir);
  summary.csv = config.output_dir / "episodes.csv";
  summary.slices_csv = config.output_dir / "slices.csv";
  summary.json = config.output_dir / "summary.json";
  write_text(summary.csv, report_csv(summary.report));
  write_text(summary.slices_csv, slices_csv(summary.report));
  json j = report_json(summary.report, config.metrics, summary.config_hash);
  j["agent"] = config.agent;
  j["episodes"] = episodes.size();
  write_text(summary.json, j.dump(2) + "\n");
  summary.outcomes = std::move(outcomes);
  return summary;
}

}  // namespace

RunSummary run_suite(const RunConfig& config) {
  validate_run_config(config);
  const AgentSpec agent = parse_agent_spec(config.agent);
  const std::string hash = config_hash(config);
  const auto worlds = load_worlds(config);
  const auto episodes = read_episodes(config.episodes);

  SimParams sim = config.sim;
  ServeOptions options;
  options.max_steps = sim.max_steps;
  options.action_timeout = std::chrono::milliseconds(static_cast<long long>(config.action_timeout_s * 1000.0));

  auto make_env = [&](const Episode& ep) -> std::unique_ptr<Environment> {
    const auto it = worlds.find(ep.scene_id);
    if (it == worlds.end()) return nullptr;
    auto env = std::make_unique<Environment>(it->second->world, sim, hash);
    if (config.render.enabled)
      env->set_observation(make_observer(it->second->world, *it->second->caster, config.render, sim.agent_height));
    return env;
  };

  std::vector<EpisodeOutcome> outcomes(episodes.size());
  if (agent.kind == AgentKind::builtin) {
    // Validate the name once so a typo fails the run instead of every episode.
    if (agent.value != "oracle" && agent.value != "random" && agent.value != "greedy")
      throw ValidationError(fmt::format("unknown builtin agent '{}'", agent.value));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < episodes.size(); i = next++) {
        const Episode& ep = episodes[i];
        try {
          auto env = make_env(ep);
          if (!env) {
            outcomes[i] = failed_outcome(ep, fmt::format("no scene '{}' loaded", ep.scene_id));
            continue;
          }
          auto bot = make_builtin_agent(agent.value, *env, ep, config.seed);
          LoopbackChannel channel([&bot](const json& msg) { return bot->on_message(msg); });
          std::vector<const Episode*> one{&ep};
          auto single = serve_session(channel, one, [&](const Episode&) { return std::move(env); }, options);
          outcomes[i] = std::move(single.front());
        } catch (const std::exception& e) {
          outcomes[i] = failed_outcome(ep, e.what());
        }
      }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, episodes.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  } else {
    std::unique_ptr<AgentChannel> channel;
    if (agent.kind == AgentKind::subprocess) {
      channel = std::make_unique<PipeChannel>(agent.value);
    } else {
      TcpListener listener(agent.port);
      spdlog::info("waiting for an agent on 127.0.0.1:{}", listener.port());
      channel = listener.accept(std::chrono::milliseconds(static_cast<long long>(config.action_timeout_s * 1000.0)));
    }
    std::vector<const Episode*> all;
    for (const auto& ep : episodes) all.push_back(&ep);
    outcomes = serve_session(*channel, all, make_env, options);
  }

  if (config.write_logs) {
    fs::create_directories(config.output_dir / "logs");
    for (const auto& o : outcomes) write_log(o.log, config.output_dir / "logs" / (o.episode_id + ".jsonl"));
  }
  return write_reports(config, episodes, std::move(outcomes), worlds);
}

RunSummary score_run(const RunConfig& config) {
  const auto worlds = load_worlds(config);
  const auto episodes = read_episodes(config.episodes);
  std::vector<EpisodeOutcome> outcomes;
  for (const auto& ep : episodes) {
    const fs::path file = config.output_dir / "logs" / (ep.episode_id + ".jsonl");
    EpisodeOutcome o;
    o.episode_id = ep.episode_id;
    if (fs::exists(file)) {
      o.log = read_log(file);
      o.steps = o.log.action_count();
      o.protocol_failure = o.log.done_reason == DoneReason::aborted;
    } else {
      o = failed_outcome(ep, "no trajectory log");
    }
    outcomes.push_back(std::move(o));
  }
  return write_reports(config, episodes, std::move(outcomes), worlds);
}

std::string format_report(const json& summary) {
  std::string out;
  auto line = [&](const std::string& name, const json& m) {
    out += fmt::format("{:<40} {:>5} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>6.3f} {:>8.2f} {:>8.2f}\n",
                       name, m.value("count", 0), m.value("sr", 0.0), m.value("osr", 0.0), m.value("spl", 0.0),
                       m.value("cr", 0.0), m.value("csr", 0.0), m.value("icp", 0.0), m.value("ps", 0.0),
                       m.value("episode_time", 0.0), m.value("explored_area_m2", 0.0));
  };
  out += fmt::format("{:<40} {:>5} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8} {:>8}\n", "slice", "n", "SR", "OSR",
                     "SPL", "CR", "CSR", "ICP", "PS", "time_s", "area_m2");
  if (summary.contains("overall")) line("overall", summary["overall"]);
  if (summary.contains("by_axis"))
    for (const auto& [axis, values] : summary["by_axis"].items())
      for (const auto& [value, m] : values.items()) line(axis + "=" + value, m);
  if (summary.contains("slices"))
    for (const auto& s : summary["slices"])
      line(fmt::format("{}/{}/{}/{}", s.value("task_type", ""), s.value("instruction_level", ""),
                       s.value("scene_complexity", ""), s.value("path_complexity", "")),
           s);
  if (summary.contains("failures") && !summary["failures"].empty())
    out += fmt::format("{} episode(s) failed\n", summary["failures"].size());
  return out;
}

}  // namespace gsnav
