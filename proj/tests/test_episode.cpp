#include "gsnav/episode.hpp"
#include "gsnav/error.hpp"
#include "gsnav/mllm.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace gsnav;
using nlohmann::json;

namespace {

json entry(const std::string& type, const std::string& text) {
  return {{"instruction_type", type}, {"start", "sofa"}, {"end", "fridge"}, {"generated_instruction", text}};
}

json valid_batch() {
  json arr = json::array();
  const char* types[] = {"Add Object", "Scenario-Driven", "Relative Relationship", "Attribute-based", "Area-based"};
  for (const char* t : types)
    for (int k = 0; k < 3; ++k)
      arr.push_back(entry(t, "Leave the gray sofa and walk over to the white fridge number " + std::to_string(k) + "."));
  return arr;
}

std::map<InstructionType, int> per_type(const std::vector<Instruction>& v) {
  std::map<InstructionType, int> m;
  for (const auto& i : v) ++m[i.type];
  return m;
}

}  // namespace

TEST_CASE("complexity thresholds") {
  CHECK(label_complexity(400, 30.0) == ComplexityLabels{SceneComplexity::many, PathComplexity::long_path});
  CHECK(label_complexity(100, 5.0) == ComplexityLabels{SceneComplexity::few, PathComplexity::short_path});
  CHECK(label_complexity(184, 8.4) == ComplexityLabels{SceneComplexity::mid, PathComplexity::mid});
  CHECK(label_complexity(376, 29.0) == ComplexityLabels{SceneComplexity::mid, PathComplexity::mid});
  CHECK(label_complexity(377, 29.0001).scene == SceneComplexity::many);
  CHECK(label_complexity(183, 8.3999).path == PathComplexity::short_path);
}

TEST_CASE("single-goal templates") {
  const std::set<std::string> names = {"table", "door", "kitchen", "living_room", "sofa"};
  CHECK(template_low_level("table", "door", SingleGoalKind::ObjectToObject, names).text == "Walk from the table to the door.");
  CHECK(template_low_level("kitchen", "living_room", SingleGoalKind::RoomToRoom, names).text ==
        "Go from the kitchen to the living room.");
  CHECK_THROWS_AS(template_low_level("sofa_0", "door", SingleGoalKind::ObjectToObject, names), ValidationError);
  CHECK_THROWS_AS(template_low_level("sofa", "sofa_1", SingleGoalKind::ObjectToObject, names, {"sofa_1"}),
                  ValidationError);
  CHECK_THROWS_AS(template_low_level("piano", "door", SingleGoalKind::ObjectToObject, names), UnknownNameError);
}

TEST_CASE("templating is total over names and subtypes") {
  const Scene s = make_apartment_small();
  std::set<std::string> names(s.taxonomy.begin(), s.taxonomy.end());
  for (const auto& r : s.rooms) names.insert(r.label);
  std::set<std::string> ids;
  for (const auto& o : s.objects) ids.insert(o.instance_id);
  for (const auto& a : names)
    for (const auto& b : names)
      for (auto kind : {SingleGoalKind::RoomToRoom, SingleGoalKind::RoomToObject, SingleGoalKind::ObjectToObject,
                        SingleGoalKind::ObjectToRoom, SingleGoalKind::ZoneToZone}) {
        const auto i = template_low_level(a, b, kind, names, ids);
        CHECK(i.level == InstructionLevel::low);
        CHECK(i.text == template_low_level(a, b, kind, names, ids).text);
        CHECK_NOTHROW(validate_instruction(i, ids));
        CHECK_FALSE(contains_internal_id(i.text, ids));
      }
}

TEST_CASE("base-action episodes") {
  const Pose2 start{{1.0, 2.0}, 0.0};
  const auto fwd = base_action_episode(ForwardSteps{2}, start);
  CHECK(fwd.instruction.text == "Move forward two steps.");
  CHECK((fwd.goal.position - Vec2(1.5, 2.0)).norm() < 1e-12);
  CHECK(fwd.instruction.type == InstructionType::BaseAction);

  const auto right = base_action_episode(TurnDegrees{-90}, start);
  CHECK(right.instruction.text == "Turn 90 degrees to the right in place.");
  CHECK((right.goal.position - start.position).norm() < 1e-12);
  REQUIRE(right.goal.heading);
  CHECK(*right.goal.heading == doctest::Approx(-kPi / 2));

  const auto back = base_action_episode(BackwardSteps{1}, Pose2{{0, 0}, kPi / 2});
  CHECK(back.instruction.text == "Move backward one step.");
  CHECK((back.goal.position - Vec2(0, -0.25)).norm() < 1e-12);
  // Step goals are positional only.
  CHECK_FALSE(back.goal.heading.has_value());
  CHECK_FALSE(fwd.goal.heading.has_value());
}

TEST_CASE("instruction validation") {
  Instruction hi;
  hi.level = InstructionLevel::high;
  hi.type = InstructionType::AreaBased;
  hi.text = "Go to the kitchen area now.";
  CHECK_NOTHROW(validate_instruction(hi, {}));
  hi.text = "Go there now.";
  CHECK_THROWS_AS(validate_instruction(hi, {}), ValidationError);
  hi.text = "Find the chair_5 near the window and wait there.";
  CHECK_THROWS_AS(validate_instruction(hi, {}), ValidationError);
  hi.type = InstructionType::SingleGoal;
  hi.text = "Go to the kitchen area now.";
  CHECK_THROWS_AS(validate_instruction(hi, {}), ValidationError);
  CHECK(word_count("  one two\tthree  ") == 3);
}

TEST_CASE("high-level generation through a canned client") {
  const auto& w = testing::apartment();
  SUBCASE("valid batch") {
    StubMlmClient client({valid_batch().dump()});
    const auto r = gen_high_level(client, w, "sofa_1", "fridge_1");
    CHECK(r.instructions.size() == 15);
    for (const auto& [type, n] : per_type(r.instructions)) {
      CHECK(n >= 2);
      CHECK(n <= 4);
    }
    CHECK(r.warnings.empty());
  }
  SUBCASE("leaked id and overlong text are dropped with warnings") {
    json batch = valid_batch();
    batch.push_back(entry("Area-based", "Walk to chair_5 in the kitchen and stop there."));
    std::string longtext;
    for (int i = 0; i < 25; ++i) longtext += "word ";
    batch.push_back(entry("Area-based", longtext));
    StubMlmClient client({batch.dump()});
    const auto r = gen_high_level(client, w, "sofa_1", "fridge_1");
    CHECK(r.instructions.size() == 15);
    CHECK(r.warnings.size() == 2);
    CHECK(r.warnings[0].find("chair_5") != std::string::npos);
  }
  SUBCASE("malformed responses are retried") {
    StubMlmClient client({"not json", valid_batch().dump()});
    const auto r = gen_high_level(client, w, "sofa_1", "fridge_1");
    CHECK(r.attempts == 2);
    CHECK(client.calls() == 2);
    StubMlmClient broken({"{}"});
    HighLevelOptions opt;
    opt.max_retries = 2;
    CHECK_THROWS_AS(gen_high_level(broken, w, "sofa_1", "fridge_1", opt), SchemaError);
    CHECK(broken.calls() == 3);
  }
  SUBCASE("nothing survives") {
    StubMlmClient client({json::array({entry("Area-based", "too short")}).dump()});
    CHECK_THROWS_AS(gen_high_level(client, w, "sofa_1", "fridge_1"), EmptyResultError);
  }
  SUBCASE("generated stub output is valid") {
    StubMlmClient client;
    const auto r = gen_high_level(client, w, "sofa_1", "fridge_1");
    const auto counts = per_type(r.instructions);
    CHECK(counts.size() == 5);
  }
}

TEST_CASE("spatial relations and the text map") {
  Scene s = testing::empty_room(8, 8);
  testing::add_object(s, testing::make_box("bed_1", "bed", {1, 1, 0}, {3, 3, 0.5}));
  testing::add_object(s, testing::make_box("nightstand_1", "nightstand", {3.2, 1, 0}, {3.7, 1.5, 0.6}));
  testing::add_object(s, testing::make_box("wardrobe_1", "wardrobe", {4.2, 1, 0}, {5.2, 3, 2}));
  testing::add_object(s, testing::make_box("chair_1", "chair", {0.0, 4.0, 0}, {0.5, 4.5, 0.9}));
  testing::add_object(s, testing::make_box("lamp_1", "lamp", {6.5, 6.5, 0}, {6.8, 6.8, 1.5}));
  const auto w = testing::world_of(s);
  const auto rel = extract_relations(w);
  auto has = [&](const std::string& a, const std::string& r, const std::string& b) {
    return std::any_of(rel.begin(), rel.end(), [&](const SpatialRelation& x) {
      return x.relation == r && ((x.subject == a && x.object == b) || (x.subject == b && x.object == a));
    });
  };
  CHECK(has("bed_1", "next_to", "nightstand_1"));
  CHECK_FALSE(has("bed_1", "next_to", "wardrobe_1"));
  CHECK(has("bed_1", "opposite", "wardrobe_1"));
  // Centroid line at about 63 degrees from the x axis: not square, so in front of.
  CHECK(has("bed_1", "in_front_of", "chair_1"));
  for (const auto& r : rel) CHECK((r.subject != "lamp_1" && r.object != "lamp_1"));
  Scene blocked = s;
  testing::add_object(blocked, testing::make_box("crate_1", "crate", {3.8, 1.8, 0}, {4.0, 2.2, 1.0}));
  const auto wb = testing::world_of(blocked);
  const auto rel2 = extract_relations(wb);
  CHECK(std::any_of(rel2.begin(), rel2.end(), [](const SpatialRelation& x) {
    return x.subject == "bed_1" && x.object == "wardrobe_1" && x.relation == "in_front_of";
  }));
  const auto text = build_text_map(w);
  CHECK(text.find("- bed_1: bed") != std::string::npos);
  CHECK(text.find("RELATIONS") != std::string::npos);
}

TEST_CASE("generated episodes validate and are deterministic") {
  const auto& w = testing::apartment();
  StubMlmClient client;
  EpisodeGenConfig cfg;
  cfg.seed = 5;
  const auto eps = generate_episodes(w, &client, cfg);
  REQUIRE(!eps.empty());
  std::set<std::string> ids;
  std::size_t high = 0, low = 0, nogoal = 0;
  for (const auto& ep : eps) {
    CHECK(ids.insert(ep.episode_id).second);
    CHECK_NOTHROW(validate_episode(ep));
    CHECK(ep.labels == label_complexity(ep.asset_count, ep.reference_path.length()));
    if (ep.task_type == TaskType::NogoalNav) {
      ++nogoal;
      continue;
    }
    (ep.instruction.level == InstructionLevel::high ? high : low)++;
    REQUIRE(ep.reference_path.waypoints.size() >= 1);
    CHECK((ep.reference_path.waypoints.front() - ep.start_pose.position).norm() <= ep.goal.success_radius);
    CHECK((ep.reference_path.waypoints.back() - ep.goal.position).norm() <= ep.goal.success_radius);
  }
  CHECK(nogoal == cfg.nogoal);
  CHECK(high == cfg.vln_pairs * cfg.high_per_pair);
  CHECK(low == cfg.vln_pairs + cfg.base_actions);
  const auto balance = balance_report(eps);
  CHECK(balance.within_band);

  StubMlmClient again;
  const auto eps2 = generate_episodes(w, &again, cfg);
  REQUIRE(eps2.size() == eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(episode_to_json(eps[i]).dump() == episode_to_json(eps2[i]).dump());

  const auto offline = generate_episodes(w, nullptr, cfg);
  for (const auto& ep : offline) CHECK(ep.instruction.level == InstructionLevel::low);
}

TEST_CASE("episode JSONL round trip") {
  const auto& w = testing::apartment();
  StubMlmClient client;
  const auto eps = generate_episodes(w, &client, {});
  testing::TempDir dir;
  write_episodes(eps, dir / "e.jsonl");
  const auto back = read_episodes(dir / "e.jsonl");
  REQUIRE(back.size() == eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(episode_to_json(back[i]) == episode_to_json(eps[i]));
  std::ofstream(dir / "bad.jsonl") << "{\"episode_id\": 3}\n";
  CHECK_THROWS_AS(read_episodes(dir / "bad.jsonl"), ParseError);
}

TEST_CASE("balance report flags skew") {
  std::vector<Episode> eps;
  for (auto t : kHighLevelTypes) {
    Episode e;
    e.instruction.level = InstructionLevel::high;
    e.instruction.type = t;
    eps.push_back(e);
    if (t == InstructionType::AddObject) eps.push_back(e), eps.push_back(e);
  }
  const auto r = balance_report(eps);
  CHECK(r.ratio == doctest::Approx(3.0));
  CHECK_FALSE(r.within_band);
}

TEST_CASE("prompt carries the map and endpoints") {
  const auto p = build_prompt("ROOMS\n* living", "sofa_1", "fridge_1");
  CHECK(p.find("sofa_1") != std::string::npos);
  CHECK(p.find("fridge_1") != std::string::npos);
  CHECK(p.find("ROOMS") != std::string::npos);
}
