#include "gsnav/camera_sampler.hpp"
#include "gsnav/config.hpp"
#include "gsnav/episode.hpp"
#include "gsnav/error.hpp"
#include "gsnav/harness.hpp"
#include "gsnav/mllm.hpp"
#include "gsnav/synthetic.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gsnav;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool verbose = false;
};

RunConfig base_config(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = *g.jobs;
  return c;
}

struct RunOverrides {
  std::vector<std::string> scenes;
  std::string episodes;
  std::string agent;
  std::string output;
  std::optional<std::size_t> max_steps;

  void apply(RunConfig& c) const {
    if (!scenes.empty()) c.scenes.assign(scenes.begin(), scenes.end());
    if (!episodes.empty()) c.episodes = episodes;
    if (!agent.empty()) c.agent = agent;
    if (!output.empty()) c.output_dir = output;
    if (max_steps) c.sim.max_steps = *max_steps;
  }
};

void add_run_options(CLI::App* cmd, RunOverrides& o) {
  cmd->add_option("--scene", o.scenes, "Scene directory (repeatable)");
  cmd->add_option("--episodes", o.episodes, "Episode JSONL file");
  cmd->add_option("--agent", o.agent, "builtin:<name>, subprocess:<command> or socket:<port>");
  cmd->add_option("-o,--output", o.output, "Output directory");
  cmd->add_option("--max-steps", o.max_steps, "Per-episode action limit");
}

void print_summary(const RunSummary& s) {
  std::ifstream in(s.json);
  std::cout << format_report(nlohmann::json::parse(in));
  std::cout << fmt::format("config {}\nwrote {}, {}, {}\n", s.config_hash, s.csv.string(), s.slices_csv.string(),
                           s.json.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navigation benchmark harness over gaussian-splat scenes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--jobs", g.jobs, "Parallel episodes for builtin agents")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  // bake
  std::vector<std::string> bake_dirs;
  bool bake_check = false;
  auto* bake = app.add_subcommand("bake", "Build collision bodies and map layers into <scene>/bake");
  bake->add_option("scenes", bake_dirs, "Scene directories")->required()->check(CLI::ExistingDirectory);
  bake->add_flag("--load", bake_check, "Reuse a valid cache instead of always rebuilding");

  // gen-episodes
  std::string gen_scene, gen_out, gen_mllm = "stub", gen_url;
  EpisodeGenConfig gen;
  auto* gen_cmd = app.add_subcommand("gen-episodes", "Generate an episode set for one scene");
  gen_cmd->add_option("scene", gen_scene, "Scene directory")->required()->check(CLI::ExistingDirectory);
  gen_cmd->add_option("-o,--output", gen_out, "Episode JSONL file")->required();
  gen_cmd->add_option("--mllm", gen_mllm, "none, stub or http")->check(CLI::IsMember({"none", "stub", "http"}));
  gen_cmd->add_option("--mllm-url", gen_url, "Base URL for --mllm http");
  gen_cmd->add_option("--vln-pairs", gen.vln_pairs, "Start/goal pairs");
  gen_cmd->add_option("--nogoal", gen.nogoal, "Exploration episodes");
  gen_cmd->add_option("--base-actions", gen.base_actions, "Base-action episodes");
  gen_cmd->add_option("--success-radius", gen.success_radius, "Goal radius in meters");

  // plan-cameras
  std::string cam_scene, cam_out, cam_svg, cam_policy = "perimeter";
  std::size_t cam_budget = 300;
  double cam_min_surface = 0.2, cam_min_dist = 0.5;
  auto* cam = app.add_subcommand("plan-cameras", "Plan camera poses for dataset capture");
  cam->add_option("scene", cam_scene, "Scene directory")->required()->check(CLI::ExistingDirectory);
  cam->add_option("-o,--output", cam_out, "Pose JSONL file")->required();
  cam->add_option("--policy", cam_policy, "perimeter or volume")->check(CLI::IsMember({"perimeter", "volume"}));
  cam->add_option("--budget", cam_budget, "Placements (perimeter) or positions (volume)");
  cam->add_option("--min-surface", cam_min_surface, "Reject poses closer than this to a surface (m)");
  cam->add_option("--min-dist", cam_min_dist, "Poisson-disk radius for the volume policy (m)");
  cam->add_option("--svg", cam_svg, "Also write a top-down SVG");

  // run / serve / score
  RunOverrides run_o, serve_o, score_o;
  auto* run = app.add_subcommand("run", "Run, score and report an episode suite");
  add_run_options(run, run_o);
  int serve_port = 0;
  std::string serve_cmd;
  auto* serve = app.add_subcommand("serve", "Serve episodes to an external agent");
  add_run_options(serve, serve_o);
  serve->add_option("--port", serve_port, "Listen on 127.0.0.1:<port> (0 picks one)");
  serve->add_option("--command", serve_cmd, "Spawn the agent and talk over its stdin/stdout");
  auto* score = app.add_subcommand("score", "Rescore the trajectory logs of a previous run");
  add_run_options(score, score_o);

  // report
  std::string report_file;
  auto* report = app.add_subcommand("report", "Print a summary.json as a table");
  report->add_option("summary", report_file, "summary.json")->required()->check(CLI::ExistingFile);

  // synth-scene
  std::string synth_name, synth_out;
  auto* synth = app.add_subcommand("synth-scene", "Write a bundled synthetic scene");
  synth->add_option("name", synth_name, "Scene name")->required()->check(CLI::IsMember(synthetic_scene_names()));
  synth->add_option("output", synth_out, "Output scene directory")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (*bake) {
      const RunConfig c = base_config(g);
      for (const auto& dir : bake_dirs) {
        BakeInfo info;
        const World w = bake_check ? load_world(dir, c.collision, c.occupancy, &info)
                                   : bake_scene(dir, c.collision, c.occupancy, &info);
        std::cout << fmt::format("{}: {} bodies, {} free cells, {} ({:.1f} ms), hash {}\n", w.scene.scene_id,
                                 w.bodies.size(), w.grid.free_count(), info.note, info.build_ms, info.content_hash);
      }
    } else if (*gen_cmd) {
      const RunConfig c = base_config(g);
      gen.seed = c.seed;
      gen.cost = PlanCost{};
      const World w = load_world(gen_scene, c.collision, c.occupancy);
      std::unique_ptr<MlmClient> client;
      if (gen_mllm == "stub") client = std::make_unique<StubMlmClient>();
      if (gen_mllm == "http") {
        HttpMlmConfig hc;
        if (!gen_url.empty()) hc.base_url = gen_url;
        client = std::make_unique<HttpMlmClient>(hc);
      }
      const auto episodes = generate_episodes(w, client.get(), gen);
      write_episodes(episodes, gen_out);
      const auto balance = balance_report(episodes);
      std::cout << fmt::format("wrote {} episodes to {} (high-level balance ratio {:.2f}{})\n", episodes.size(), gen_out,
                               balance.ratio, balance.within_band ? "" : ", outside band");
    } else if (*cam) {
      const RunConfig c = base_config(g);
      const World w = load_world(cam_scene, c.collision, c.occupancy);
      CameraPlan plan;
      if (cam_policy == "perimeter") {
        plan = perimeter_sweep(w.scene.rooms, w.scene.floor_z, w.scene.ceiling_z, cam_budget);
      } else {
        VolumeConfig vc;
        vc.seed = c.seed;
        vc.min_dist = cam_min_dist;
        plan = volume_uniform(w.scene.rooms, w.scene.floor_z, w.scene.ceiling_z, cam_budget, vc);
      }
      plan = reject_near_surface(plan, w.bodies, w.scene.walls, cam_min_surface);
      for (const auto& warning : plan.warnings) spdlog::warn("{}", warning);
      write_plan_jsonl(plan, cam_out);
      if (!cam_svg.empty()) {
        std::ofstream os(cam_svg);
        os << plan_svg(plan, w.scene.rooms);
      }
      std::cout << fmt::format("{} poses kept, {} rejected, written to {}\n", plan.poses.size(), plan.rejected.size(),
                               cam_out);
    } else if (*run) {
      RunConfig c = base_config(g);
      run_o.apply(c);
      print_summary(run_suite(c));
    } else if (*serve) {
      RunConfig c = base_config(g);
      serve_o.apply(c);
      if (!serve_cmd.empty())
        c.agent = "subprocess:" + serve_cmd;
      else if (serve->count("--port") || parse_agent_spec(c.agent).kind == AgentKind::builtin)
        c.agent = fmt::format("socket:{}", serve_port);
      print_summary(run_suite(c));
    } else if (*score) {
      RunConfig c = base_config(g);
      score_o.apply(c);
      print_summary(score_run(c));
    } else if (*report) {
      std::ifstream in(report_file);
      std::cout << format_report(nlohmann::json::parse(in));
    } else if (*synth) {
      const Scene s = make_synthetic_scene(synth_name);
      save_scene(s, synth_out);
      std::cout << fmt::format("{}: {} objects, {} gaussians -> {}\n", s.scene_id, s.objects.size(), s.gaussians.size(),
                               synth_out);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
