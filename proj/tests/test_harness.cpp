#include "gsnav/error.hpp"
#include "gsnav/harness.hpp"
#include "gsnav/mllm.hpp"
#include "support.hpp"

#include "doctest.h"
#include <fmt/format.h>

#include <fstream>
#include <sstream>

using namespace gsnav;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// two_room scene on disk plus a generated episode file.
struct Fixture {
  testing::TempDir dir;
  fs::path scene = dir / "two_room";
  fs::path episodes = dir / "episodes.jsonl";
  std::vector<Episode> eps;

  Fixture() {
    save_scene(make_two_room(), scene);
    const World w = load_world(scene, {}, {});
    StubMlmClient client;
    EpisodeGenConfig cfg;
    cfg.seed = 3;
    cfg.vln_pairs = 5;
    cfg.high_per_pair = 1;
    cfg.nogoal = 2;
    cfg.base_actions = 2;
    eps = generate_episodes(w, &client, cfg);
    write_episodes(eps, episodes);
  }

  RunConfig config(const std::string& agent, const std::string& out, std::size_t jobs = 1) const {
    RunConfig c;
    c.scenes = {scene};
    c.episodes = episodes;
    c.agent = agent;
    c.seed = 11;
    c.jobs = jobs;
    c.output_dir = dir / out;
    return c;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("bake then load hits the cache") {
  testing::TempDir dir;
  const fs::path scene = dir / "box";
  save_scene(make_sealed_box(), scene);

  BakeInfo first;
  const World a = load_world(scene, {}, {}, &first);
  CHECK_FALSE(first.cache_hit);
  CHECK(first.note == "no cache");
  for (const char* f : {"collision.bin", "occupancy.pgm", "occupancy.json", "semantic_map.json", "cache.json"})
    CHECK(fs::exists(scene / "bake" / f));
  const json meta = json::parse(slurp(scene / "bake" / "cache.json"));
  CHECK(meta["content_hash"] == first.content_hash);
  CHECK(meta["scene_id"] == "box");

  BakeInfo second;
  const World b = load_world(scene, {}, {}, &second);
  CHECK(second.cache_hit);
  CHECK(second.note == "cache hit");
  CHECK(second.content_hash == first.content_hash);
  REQUIRE(a.bodies.size() == b.bodies.size());
  for (std::size_t i = 0; i < a.bodies.size(); ++i) {
    REQUIRE(a.bodies[i].hulls.size() == b.bodies[i].hulls.size());
    for (std::size_t k = 0; k < a.bodies[i].hulls.size(); ++k)
      CHECK(a.bodies[i].hulls[k].vertices == b.bodies[i].hulls[k].vertices);
  }
  CHECK(a.grid.cells == b.grid.cells);

  SUBCASE("edited scene.json rebuilds") {
    Scene s = load_scene(scene);
    s.objects[0].aabb.max.z() += 0.1;
    save_scene(s, scene);
    BakeInfo info;
    load_world(scene, {}, {}, &info);
    CHECK_FALSE(info.cache_hit);
    CHECK(info.note.find("stale") != std::string::npos);
    CHECK(info.content_hash != first.content_hash);
    load_world(scene, {}, {}, &info);
    CHECK(info.cache_hit);
  }
  SUBCASE("changed parameters rebuild") {
    OccupancyParams p;
    p.agent_radius = 0.3;
    BakeInfo info;
    load_world(scene, {}, p, &info);
    CHECK_FALSE(info.cache_hit);
    CHECK(info.note.find("stale") != std::string::npos);
  }
  SUBCASE("corrupt cache rebuilds") {
    const std::string bin = slurp(scene / "bake" / "collision.bin");
    std::ofstream(scene / "bake" / "collision.bin", std::ios::binary) << bin.substr(0, bin.size() / 2);
    BakeInfo info;
    const World c = load_world(scene, {}, {}, &info);
    CHECK_FALSE(info.cache_hit);
    CHECK(info.note.find("corrupt") != std::string::npos);
    CHECK(c.grid.cells == a.grid.cells);
    load_world(scene, {}, {}, &info);
    CHECK(info.cache_hit);
  }
  SUBCASE("garbage metadata rebuilds") {
    std::ofstream(scene / "bake" / "cache.json") << "{";
    BakeInfo info;
    load_world(scene, {}, {}, &info);
    CHECK_FALSE(info.cache_hit);
    CHECK(info.note.find("corrupt") != std::string::npos);
  }
}

TEST_CASE("explicit bake writes the cache") {
  testing::TempDir dir;
  save_scene(make_sealed_box(), dir / "box");
  BakeInfo info;
  bake_scene(dir / "box", {}, {}, &info);
  CHECK(info.note == "baked");
  load_world(dir / "box", {}, {}, &info);
  CHECK(info.cache_hit);
}

TEST_CASE("oracle suite succeeds on every navigation episode") {
  auto& f = fixture();
  const auto summary = run_suite(f.config("builtin:oracle", "oracle"));
  REQUIRE(summary.report.rows.size() == f.eps.size());
  std::size_t vln = 0;
  for (std::size_t i = 0; i < f.eps.size(); ++i) {
    const auto& row = summary.report.rows[i];
    CHECK_FALSE(row.failed);
    if (f.eps[i].task_type != TaskType::VLN) continue;
    ++vln;
    CAPTURE(row.episode_id);
    CHECK(row.sr == 1.0);
    CHECK(row.spl >= 0.99);
    CHECK(row.done_reason == "stop_issued");
  }
  CHECK(vln >= 10);
  CHECK(fs::exists(summary.csv));
  CHECK(fs::exists(summary.slices_csv));
  CHECK(fs::exists(f.dir / "oracle" / "logs" / (f.eps.front().episode_id + ".jsonl")));
  const json j = json::parse(slurp(summary.json));
  CHECK(j["agent"] == "builtin:oracle");
  CHECK(j["partial_failure"] == false);
  CHECK(j["config_hash"] == summary.config_hash);
  std::size_t counted = 0;
  for (const auto& s : j["slices"]) counted += s["count"].get<std::size_t>();
  CHECK(counted == f.eps.size());

  const std::string table = format_report(j);
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("task_type=VLN") != std::string::npos);
}

TEST_CASE("runs are byte-identical across reruns and job counts") {
  auto& f = fixture();
  for (const std::string agent : {"oracle", "random", "greedy"}) {
    CAPTURE(agent);
    const auto a = run_suite(f.config("builtin:" + agent, agent + "_a", 1));
    const auto b = run_suite(f.config("builtin:" + agent, agent + "_b", 1));
    const auto c = run_suite(f.config("builtin:" + agent, agent + "_c", 4));
    CHECK(slurp(a.csv) == slurp(b.csv));
    CHECK(slurp(a.csv) == slurp(c.csv));
    CHECK(slurp(a.slices_csv) == slurp(c.slices_csv));
    CHECK(slurp(a.json) == slurp(c.json));
    for (const auto& ep : f.eps) {
      const auto name = ep.episode_id + ".jsonl";
      REQUIRE(slurp(a.csv.parent_path() / "logs" / name) == slurp(c.csv.parent_path() / "logs" / name));
    }
  }
}

TEST_CASE("score rescoring matches the run") {
  auto& f = fixture();
  const auto run = run_suite(f.config("builtin:greedy", "rescore"));
  const std::string csv = slurp(run.csv);
  const auto again = score_run(f.config("builtin:greedy", "rescore"));
  CHECK(slurp(again.csv) == csv);

  fs::remove(f.dir / "rescore" / "logs" / (f.eps.front().episode_id + ".jsonl"));
  const auto missing = score_run(f.config("builtin:greedy", "rescore"));
  CHECK(missing.report.rows.front().failed);
  CHECK(json::parse(slurp(missing.json))["partial_failure"] == true);
}

TEST_CASE("protocol failure is reported and the run continues") {
  auto& f = fixture();
  const auto summary = run_suite(f.config(fmt::format("subprocess:{} invalid-json", SCRIPTED_AGENT), "broken"));
  REQUIRE(summary.report.rows.size() == f.eps.size());
  for (const auto& row : summary.report.rows) {
    CHECK(row.failed);
    CHECK(row.done_reason == "aborted");
  }
  const json j = json::parse(slurp(summary.json));
  CHECK(j["partial_failure"] == true);
  CHECK(j["failures"].size() == f.eps.size());
}

TEST_CASE("subprocess agent completes the suite") {
  auto& f = fixture();
  auto cfg = f.config(fmt::format("subprocess:{} random 4", SCRIPTED_AGENT), "external");
  cfg.sim.max_steps = 30;
  const auto summary = run_suite(cfg);
  for (const auto& o : summary.outcomes) {
    CHECK_FALSE(o.protocol_failure);
    CHECK(o.steps <= 30);
    CHECK(o.log.action_count() == o.steps);
  }
}

TEST_CASE("rendered observations reach builtin agents") {
  auto& f = fixture();
  auto cfg = f.config("builtin:greedy", "rendered");
  cfg.render.enabled = true;
  cfg.render.width = 16;
  cfg.render.height = 12;
  cfg.sim.max_steps = 5;
  const auto summary = run_suite(cfg);
  for (const auto& row : summary.report.rows) CHECK_FALSE(row.failed);
}

TEST_CASE("run configuration") {
  auto& f = fixture();
  const json j = {{"scenes", {"two_room"}},
                  {"episodes", "episodes.jsonl"},
                  {"agent", "builtin:random"},
                  {"seed", 5},
                  {"jobs", 2},
                  {"sim", {{"max_steps", 50}, {"turn_deg", 30.0}}},
                  {"metrics", {{"r_tol", 0.5}, {"success_radius", 1.0}}},
                  {"render", {{"enabled", true}, {"width", 64}}}};
  const RunConfig c = run_config_from_json(j, f.dir.path());
  CHECK(c.scenes.front() == f.scene);
  CHECK(c.episodes == f.episodes);
  CHECK(c.sim.max_steps == 50);
  CHECK(c.sim.turn_angle == doctest::Approx(kPi / 6.0));
  CHECK(c.metrics.r_tol == 0.5);
  CHECK(c.metrics.success_radius == 1.0);
  CHECK(c.render.width == 64);
  CHECK_NOTHROW(validate_run_config(c));

  // Round trip through JSON keeps the hash.
  const RunConfig back = run_config_from_json(run_config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));

  RunConfig other = c;
  other.jobs = 8;
  other.output_dir = "/elsewhere";
  CHECK(config_hash(other) == config_hash(c));
  other.seed = 6;
  CHECK(config_hash(other) != config_hash(c));
  other = c;
  other.metrics.r_tol = 1.5;
  CHECK(config_hash(other) != config_hash(c));

  json bad = j;
  bad["sim"]["warp_speed"] = 9;
  CHECK_THROWS_AS(run_config_from_json(bad, f.dir.path()), ValidationError);
  bad = j;
  bad["colour"] = "red";
  CHECK_THROWS_AS(run_config_from_json(bad, f.dir.path()), ValidationError);
  bad = j;
  bad["metrics"]["icp_mode"] = "loud";
  CHECK_THROWS_AS(run_config_from_json(bad, f.dir.path()), ValidationError);

  RunConfig missing = c;
  missing.episodes = f.dir / "nope.jsonl";
  CHECK_THROWS_AS(validate_run_config(missing), ValidationError);
  missing = c;
  missing.scenes = {f.dir / "nowhere"};
  CHECK_THROWS_AS(validate_run_config(missing), ValidationError);
  missing = c;
  missing.agent = "builtin:teleporter";
  CHECK_THROWS_AS(run_suite(missing), ValidationError);
}

TEST_CASE("agent specs") {
  CHECK(parse_agent_spec("builtin:oracle").kind == AgentKind::builtin);
  const auto sub = parse_agent_spec("subprocess:python3 -m agent --x 1");
  CHECK(sub.kind == AgentKind::subprocess);
  CHECK(sub.value == "python3 -m agent --x 1");
  const auto sock = parse_agent_spec("socket:5555");
  CHECK(sock.kind == AgentKind::socket);
  CHECK(sock.port == 5555);
  for (const char* bad : {"oracle", "builtin:", "socket:abc", "socket:70000", "carrier:pigeon"})
    CHECK_THROWS_AS(parse_agent_spec(bad), ValidationError);
}
