#include "gsnav/episode.hpp"

#include "gsnav/error.hpp"
#include "gsnav/mllm.hpp"
#include "gsnav/rng.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

namespace gsnav {

using nlohmann::json;

std::string_view to_string(InstructionLevel v) { return v == InstructionLevel::high ? "high" : "low"; }

std::string_view to_string(InstructionType v) {
  switch (v) {
    case InstructionType::AddObject: return "AddObject";
    case InstructionType::ScenarioDriven: return "ScenarioDriven";
    case InstructionType::RelativeRelationship: return "RelativeRelationship";
    case InstructionType::AttributeBased: return "AttributeBased";
    case InstructionType::AreaBased: return "AreaBased";
    case InstructionType::BaseAction: return "BaseAction";
    case InstructionType::SingleGoal: return "SingleGoal";
  }
  return "SingleGoal";
}

std::string_view to_string(TaskType v) { return v == TaskType::VLN ? "VLN" : "NogoalNav"; }

std::string_view to_string(SceneComplexity v) {
  switch (v) {
    case SceneComplexity::many: return "many";
    case SceneComplexity::mid: return "mid";
    case SceneComplexity::few: return "few";
  }
  return "mid";
}

std::string_view to_string(PathComplexity v) {
  switch (v) {
    case PathComplexity::long_path: return "long";
    case PathComplexity::mid: return "mid";
    case PathComplexity::short_path: return "short";
  }
  return "mid";
}

InstructionLevel instruction_level_from_string(std::string_view s) {
  if (s == "high") return InstructionLevel::high;
  if (s == "low") return InstructionLevel::low;
  throw ValidationError(fmt::format("unknown instruction level '{}'", s));
}

InstructionType instruction_type_from_string(std::string_view s) {
  for (auto t : {InstructionType::AddObject, InstructionType::ScenarioDriven, InstructionType::RelativeRelationship,
                 InstructionType::AttributeBased, InstructionType::AreaBased, InstructionType::BaseAction,
                 InstructionType::SingleGoal})
    if (to_string(t) == s) return t;
  throw ValidationError(fmt::format("unknown instruction type '{}'", s));
}

TaskType task_type_from_string(std::string_view s) {
  if (s == "VLN") return TaskType::VLN;
  if (s == "NogoalNav") return TaskType::NogoalNav;
  throw ValidationError(fmt::format("unknown task type '{}'", s));
}

SceneComplexity scene_complexity_from_string(std::string_view s) {
  for (auto v : {SceneComplexity::many, SceneComplexity::mid, SceneComplexity::few})
    if (to_string(v) == s) return v;
  throw ValidationError(fmt::format("unknown scene complexity '{}'", s));
}

PathComplexity path_complexity_from_string(std::string_view s) {
  for (auto v : {PathComplexity::long_path, PathComplexity::mid, PathComplexity::short_path})
    if (to_string(v) == s) return v;
  throw ValidationError(fmt::format("unknown path complexity '{}'", s));
}

InstructionLevel level_of(InstructionType t) {
  return (t == InstructionType::BaseAction || t == InstructionType::SingleGoal) ? InstructionLevel::low
                                                                               : InstructionLevel::high;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

bool contains_internal_id(std::string_view text, const std::set<std::string>& ids) {
  for (const auto& id : ids)
    if (!id.empty() && text.find(id) != std::string_view::npos) return true;
  static const std::regex id_shape(R"([A-Za-z][A-Za-z0-9]*_[0-9]+)");
  return std::regex_search(text.begin(), text.end(), id_shape);
}

void validate_instruction(const Instruction& instr, const std::set<std::string>& ids) {
  if (level_of(instr.type) != instr.level)
    throw ValidationError(fmt::format("instruction type {} does not belong to level {}", to_string(instr.type),
                                      to_string(instr.level)));
  if (contains_internal_id(instr.text, ids))
    throw ValidationError(fmt::format("instruction leaks an internal id: \"{}\"", instr.text));
  if (instr.level == InstructionLevel::high) {
    const auto words = word_count(instr.text);
    if (words < 5 || words > 20)
      throw ValidationError(fmt::format("high-level instruction has {} words (allowed 5-20)", words));
  }
}

ComplexityLabels label_complexity(std::size_t scene_asset_count, double path_length,
                                  const ComplexityThresholds& t) {
  ComplexityLabels out;
  if (scene_asset_count > t.many_assets_above)
    out.scene = SceneComplexity::many;
  else if (scene_asset_count < t.few_assets_below)
    out.scene = SceneComplexity::few;
  else
    out.scene = SceneComplexity::mid;
  if (path_length > t.long_path_above)
    out.path = PathComplexity::long_path;
  else if (path_length < t.short_path_below)
    out.path = PathComplexity::short_path;
  else
    out.path = PathComplexity::mid;
  return out;
}

void validate_episode(const Episode& ep, const ComplexityThresholds& thresholds) {
  if (ep.reference_path.waypoints.empty()) throw ValidationError(fmt::format("{}: empty reference path", ep.episode_id));
  const auto& wp = ep.reference_path.waypoints;
  for (std::size_t i = 1; i < wp.size(); ++i)
    if (wp[i] == wp[i - 1]) throw ValidationError(fmt::format("{}: repeated waypoint {}", ep.episode_id, i));
  const double tol = std::max(ep.goal.success_radius, 1e-9);
  if ((wp.front() - ep.start_pose.position).norm() > tol)
    throw ValidationError(fmt::format("{}: reference path does not begin at the start pose", ep.episode_id));
  if ((wp.back() - ep.goal.position).norm() > tol)
    throw ValidationError(fmt::format("{}: reference path does not end at the goal", ep.episode_id));
  if (label_complexity(ep.asset_count, ep.reference_path.length(), thresholds) != ep.labels)
    throw ValidationError(fmt::format("{}: complexity labels disagree with thresholds", ep.episode_id));
}

std::string display_name(std::string_view name) {
  std::string s(name);
  for (char& c : s)
    if (c == '_') c = ' ';
  return s;
}

Instruction template_low_level(std::string_view start_ref, std::string_view end_ref, SingleGoalKind kind,
                               const std::set<std::string>& known_names, const std::set<std::string>& instance_ids) {
  for (std::string_view name : {start_ref, end_ref}) {
    if (contains_internal_id(name, instance_ids))
      throw ValidationError(fmt::format("name '{}' is an internal id", name));
    if (!known_names.contains(std::string(name))) throw UnknownNameError(fmt::format("unknown name '{}'", name));
  }
  const std::string s = display_name(start_ref);
  const std::string e = display_name(end_ref);
  Instruction instr;
  instr.level = InstructionLevel::low;
  instr.type = InstructionType::SingleGoal;
  switch (kind) {
    case SingleGoalKind::ObjectToObject:
      instr.text = fmt::format("Walk from the {} to the {}.", s, e);
      instr.slots["subtype"] = "Object-to-Object";
      break;
    case SingleGoalKind::RoomToRoom:
      instr.text = fmt::format("Go from the {} to the {}.", s, e);
      instr.slots["subtype"] = "Room-to-Room";
      break;
    case SingleGoalKind::RoomToObject:
      instr.text = fmt::format("Go from the {} to the {}.", s, e);
      instr.slots["subtype"] = "Room-to-Object";
      break;
    case SingleGoalKind::ObjectToRoom:
      instr.text = fmt::format("Walk from the {} to the {}.", s, e);
      instr.slots["subtype"] = "Object-to-Room";
      break;
    case SingleGoalKind::ZoneToZone:
      instr.text = fmt::format("Walk from the {} area to the {} area.", s, e);
      instr.slots["subtype"] = "Zone-to-Zone";
      break;
  }
  instr.slots["start_ref"] = std::string(start_ref);
  instr.slots["end_ref"] = std::string(end_ref);
  validate_instruction(instr, instance_ids);
  return instr;
}

namespace {

std::string number_word(int n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  return (n >= 0 && n <= 10) ? std::string(words[n]) : std::to_string(n);
}

}  // namespace

Episode base_action_episode(const BaseAction& action, const Pose2& start, const BaseActionParams& params) {
  Episode ep;
  ep.task_type = TaskType::VLN;
  ep.instruction.level = InstructionLevel::low;
  ep.instruction.type = InstructionType::BaseAction;
  ep.start_pose = start;
  ep.goal.success_radius = params.goal_radius;
  const Vec2 heading(std::cos(start.theta), std::sin(start.theta));

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ForwardSteps> || std::is_same_v<T, BackwardSteps>) {
          if (a.n < 1) throw ValidationError("base action needs at least one step");
          const bool forward = std::is_same_v<T, ForwardSteps>;
          const double dist = a.n * params.step_length;
          ep.goal.position = start.position + (forward ? 1.0 : -1.0) * dist * heading;
          ep.instruction.text = fmt::format("Move {} {} step{}.", forward ? "forward" : "backward", number_word(a.n),
                                            a.n == 1 ? "" : "s");
          ep.instruction.slots["action"] = forward ? "forward" : "backward";
          ep.instruction.slots["steps"] = std::to_string(a.n);
          ep.reference_path.waypoints = {start.position, ep.goal.position};
        } else {
          const int deg = a.degrees;
          if (deg != 90 && deg != -90 && deg != 180 && deg != -180)
            throw ValidationError(fmt::format("unsupported turn of {} degrees", deg));
          ep.goal.position = start.position;
          ep.goal.heading = wrap_angle(start.theta + deg * kPi / 180.0);
          ep.goal.heading_tolerance = params.heading_tolerance;
          ep.instruction.text =
              fmt::format("Turn {} degrees to the {} in place.", std::abs(deg), deg > 0 ? "left" : "right");
          ep.instruction.slots["action"] = "turn";
          ep.instruction.slots["degrees"] = std::to_string(deg);
          ep.reference_path.waypoints = {start.position};
        }
      },
      action);
  ep.labels = label_complexity(0, ep.reference_path.length());
  return ep;
}

namespace {

double polygon_gap(const ConvexPolygon2& a, const ConvexPolygon2& b) {
  for (const auto& v : a.vertices())
    if (b.contains(v)) return 0.0;
  for (const auto& v : b.vertices())
    if (a.contains(v)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i)
    for (std::size_t j = 0; j < vb.size(); ++j)
      d = std::min(d, segment_segment_distance(va[i], va[(i + 1) % va.size()], vb[j], vb[(j + 1) % vb.size()]));
  return d;
}

double footprint_gap(const ObjectFootprint& a, const ObjectFootprint& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& ma : a.masks)
    for (const auto& mb : b.masks) d = std::min(d, polygon_gap(ma, mb));
  return d;
}

Vec2 footprint_centroid(const ObjectFootprint& fp) {
  Vec2 c = Vec2::Zero();
  double area = 0.0;
  for (const auto& m : fp.masks) {
    c += m.centroid() * m.area();
    area += m.area();
  }
  return area > 0.0 ? Vec2(c / area) : c;
}

bool inside_footprint(const Vec2& p, const ObjectFootprint& fp) {
  for (const auto& m : fp.masks)
    if (m.contains(p)) return true;
  return false;
}

// Free space between two footprints along the centroid line.
// The centroid segment crosses free floor: no wall and no third footprint
// (closed doors included) in the way. Uses raw footprints, not the inflated grid,
// since every cell next to an object is blocked there.
bool corridor_between(const World& world, const ObjectFootprint& a, const ObjectFootprint& b) {
  const Vec2 ca = footprint_centroid(a);
  const Vec2 cb = footprint_centroid(b);
  for (const auto& w : world.scene.walls)
    if (segments_intersect(ca, cb, w.a, w.b)) return false;
  const double len = (cb - ca).norm();
  const double spacing = 0.5 * world.grid.resolution;
  const int steps = std::max(2, static_cast<int>(len / spacing));
  bool saw_free = false;
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = ca + (cb - ca) * (static_cast<double>(i) / steps);
    if (inside_footprint(p, a) || inside_footprint(p, b)) continue;
    for (const auto& [id, fp] : world.map.footprints) {
      if (id == a.instance_id || id == b.instance_id) continue;
      const auto door = world.map.door_marks.find(id);
      if (door != world.map.door_marks.end() && door->second != DoorState::closed) continue;
      if (inside_footprint(p, fp)) return false;
    }
    saw_free = true;
  }
  return saw_free;
}

std::string room_label_at(const Scene& scene, const Vec2& p) {
  const int r = scene.room_at(p);
  return r < 0 ? std::string() : scene.rooms[static_cast<std::size_t>(r)].label;
}

}  // namespace

std::vector<SpatialRelation> extract_relations(const World& world, const RelationParams& params) {
  std::vector<const ObjectFootprint*> fps;
  for (const auto& obj : world.scene.objects) {
    if (obj.door_state) continue;
    const auto it = world.map.footprints.find(obj.instance_id);
    if (it != world.map.footprints.end()) fps.push_back(&it->second);
  }
  std::vector<SpatialRelation> out;
  const double cos_limit = std::cos(params.opposite_angle_deg * kPi / 180.0);
  for (std::size_t i = 0; i < fps.size(); ++i)
    for (std::size_t j = i + 1; j < fps.size(); ++j) {
      const double gap = footprint_gap(*fps[i], *fps[j]);
      if (gap >= params.max_gap) continue;
      std::string rel;
      if (gap < params.next_to_gap) {
        rel = "next_to";
      } else {
        // Facing each other squarely: the centroid line is within the angle
        // limit of a principal axis and crosses free floor.
        const Vec2 d = (footprint_centroid(*fps[j]) - footprint_centroid(*fps[i])).normalized();
        const double axis_alignment = std::max(std::abs(d.x()), std::abs(d.y()));
        rel = (axis_alignment >= cos_limit && corridor_between(world, *fps[i], *fps[j])) ? "opposite" : "in_front_of";
      }
      out.push_back({fps[i]->instance_id, rel, fps[j]->instance_id});
    }
  return out;
}

std::string build_text_map(const World& world, const RelationParams& params) {
  std::ostringstream out;
  out << "ROOMS:\n";
  for (const auto& r : world.scene.rooms) out << "* " << r.name << " (" << display_name(r.label) << ")\n";
  out << "OBJECTS:\n";
  for (const auto& obj : world.scene.objects) {
    const auto it = world.map.footprints.find(obj.instance_id);
    const Vec2 c = it != world.map.footprints.end() ? footprint_centroid(it->second)
                                                    : Vec2(obj.aabb.center().x(), obj.aabb.center().y());
    out << "- " << obj.instance_id << ": " << obj.category << " | room: " << room_label_at(world.scene, c);
    std::vector<std::string> attrs;
    for (const auto& [k, v] : obj.attributes) attrs.push_back(k + "=" + v);
    if (obj.door_state) attrs.push_back("state=" + std::string(to_string(*obj.door_state)));
    if (!attrs.empty()) {
      out << " | attributes: ";
      for (std::size_t i = 0; i < attrs.size(); ++i) out << (i ? ", " : "") << attrs[i];
    }
    out << fmt::format(" | position: ({:.2f}, {:.2f})\n", c.x(), c.y());
  }
  out << "RELATIONS:\n";
  for (const auto& rel : extract_relations(world, params))
    out << "* " << rel.subject << " " << rel.relation << " " << rel.object << "\n";
  return out.str();
}

namespace {

std::optional<InstructionType> response_type(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
    return c == '-' || c == ' ' ? '_' : static_cast<char>(std::tolower(c));
  });
  if (name == "add_object") return InstructionType::AddObject;
  if (name == "scenario_driven") return InstructionType::ScenarioDriven;
  if (name == "relative_relationship") return InstructionType::RelativeRelationship;
  if (name == "attribute_based") return InstructionType::AttributeBased;
  if (name == "area_based") return InstructionType::AreaBased;
  return std::nullopt;
}

std::set<std::string> instance_ids(const Scene& scene) {
  std::set<std::string> ids;
  for (const auto& o : scene.objects) ids.insert(o.instance_id);
  return ids;
}

}  // namespace

HighLevelResult gen_high_level(MlmClient& client, const World& world, const std::string& start_instance,
                               const std::string& goal_instance, const HighLevelOptions& options) {
  MlmRequest req;
  req.text_map = build_text_map(world, options.relations);
  req.starting_point = start_instance;
  req.end_point = goal_instance;
  req.prompt_version = options.prompt_version;
  req.prompt = build_prompt(req.text_map, start_instance, goal_instance);

  HighLevelResult result;
  std::optional<std::vector<MlmEntry>> entries;
  for (int attempt = 0; attempt <= options.max_retries && !entries; ++attempt) {
    ++result.attempts;
    const std::string body = client.complete(req);
    try {
      entries = parse_mlm_response(body);
    } catch (const SchemaError& e) {
      result.warnings.push_back(fmt::format("attempt {}: {}", attempt + 1, e.what()));
      spdlog::warn("MLLM response rejected: {}", e.what());
    }
  }
  if (!entries) throw SchemaError(fmt::format("MLLM response invalid after {} attempts", result.attempts));

  const auto ids = instance_ids(world.scene);
  const ObjectInstance* start_obj = world.scene.find_object(start_instance);
  const ObjectInstance* goal_obj = world.scene.find_object(goal_instance);
  for (const auto& e : *entries) {
    const auto type = response_type(e.instruction_type);
    if (!type) {
      result.warnings.push_back(fmt::format("dropped entry of unknown type '{}'", e.instruction_type));
      spdlog::warn("{}", result.warnings.back());
      continue;
    }
    Instruction instr;
    instr.level = InstructionLevel::high;
    instr.type = *type;
    instr.text = e.generated_instruction;
    if (start_obj) instr.slots["start_ref"] = start_obj->category;
    if (goal_obj) instr.slots["end_ref"] = goal_obj->category;
    try {
      validate_instruction(instr, ids);
    } catch (const ValidationError& err) {
      result.warnings.push_back(fmt::format("dropped \"{}\": {}", e.generated_instruction, err.what()));
      spdlog::warn("{}", result.warnings.back());
      continue;
    }
    result.instructions.push_back(std::move(instr));
  }
  if (result.instructions.empty()) throw EmptyResultError("no MLLM instruction survived validation");
  return result;
}

BalanceReport balance_report(const std::vector<Episode>& episodes, double max_ratio) {
  BalanceReport rep;
  for (auto t : kHighLevelTypes) rep.counts[t] = 0;
  for (const auto& ep : episodes)
    if (ep.instruction.level == InstructionLevel::high) ++rep.counts[ep.instruction.type];
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (const auto& [t, c] : rep.counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (hi == 0) {
    rep.ratio = 1.0;
  } else if (lo == 0) {
    rep.ratio = std::numeric_limits<double>::infinity();
  } else {
    rep.ratio = static_cast<double>(hi) / static_cast<double>(lo);
  }
  rep.within_band = rep.ratio <= max_ratio;
  return rep;
}

namespace {

json cost_json(const PlanCost& c) {
  return {{"w_dist", c.w_dist}, {"w_narrow", c.w_narrow}, {"w_area", c.w_area}, {"clearance_soft", c.clearance_soft}};
}

std::string nearest_object(const World& world, const Vec2& p) {
  std::string best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& obj : world.scene.objects) {
    if (obj.door_state) continue;
    const auto it = world.map.footprints.find(obj.instance_id);
    if (it == world.map.footprints.end()) continue;
    const double d = (footprint_centroid(it->second) - p).norm();
    if (d < best_d) {
      best_d = d;
      best = obj.instance_id;
    }
  }
  return best;
}

std::vector<Cell> safe_cells(const World& world, double min_clearance) {
  std::vector<Cell> out;
  for (int y = 0; y < world.grid.height; ++y)
    for (int x = 0; x < world.grid.width; ++x)
      if (!world.grid.blocked(x, y) && world.clearance.at(x, y) >= min_clearance &&
          world.scene.room_at(world.grid.center({x, y})) >= 0)
        out.push_back({x, y});
  return out;
}

}  // namespace

std::vector<Episode> generate_episodes(const World& world, MlmClient* client, const EpisodeGenConfig& config) {
  const Scene& scene = world.scene;
  Rng rng(config.seed ^ stable_hash(scene.scene_id));
  const std::size_t assets = scene.objects.size();
  const auto ids = instance_ids(scene);
  std::set<std::string> known(scene.taxonomy.begin(), scene.taxonomy.end());
  for (const auto& r : scene.rooms) {
    known.insert(r.label);
    known.insert(r.name);
  }

  std::vector<Episode> out;
  for (std::size_t k = 0; k < config.vln_pairs; ++k) {
    const EndpointSample s = sample_endpoints(scene, world.map, world.grid, world.clearance, config.endpoints, rng);
    std::vector<std::uint8_t> pref;
    if (config.prefer_goal_room && s.goal_room >= 0)
      pref = room_mask(world.grid, scene, scene.rooms[static_cast<std::size_t>(s.goal_room)].label);
    const PlanResult plan =
        astar(world.grid, world.clearance, config.cost, s.start, s.goal, pref.empty() ? nullptr : &pref);
    const auto& wp = plan.path.waypoints;
    if (wp.size() < 2) continue;

    Episode base;
    base.scene_id = scene.scene_id;
    base.task_type = TaskType::VLN;
    base.start_pose = {wp.front(), std::atan2(wp[1].y() - wp[0].y(), wp[1].x() - wp[0].x())};
    base.goal.position = wp.back();
    base.goal.success_radius = config.success_radius;
    base.goal.target_instance = s.target_instance;
    base.reference_path = plan.path;
    base.asset_count = assets;
    base.labels = label_complexity(assets, plan.path.length(), config.thresholds);
    base.metadata = {{"plan_cost", cost_json(config.cost)},
                     {"path_cost", plan.cost},
                     {"path_length", plan.path.length()},
                     {"geodesic", s.geodesic}};

    const ObjectInstance* target = scene.find_object(s.target_instance);
    const std::string start_room = s.start_room >= 0 ? scene.rooms[static_cast<std::size_t>(s.start_room)].label : "";
    if (target != nullptr && !start_room.empty()) {
      Episode low = base;
      low.episode_id = fmt::format("{}-vln-{:03d}-low", scene.scene_id, k);
      low.instruction = template_low_level(start_room, target->category, SingleGoalKind::RoomToObject, known, ids);
      out.push_back(std::move(low));
    }

    if (client != nullptr) {
      try {
        const auto high = gen_high_level(*client, world, nearest_object(world, s.start), s.target_instance, config.high);
        std::set<InstructionType> used;
        for (const auto& instr : high.instructions) {
          if (used.size() >= config.high_per_pair) break;
          if (!used.insert(instr.type).second) continue;
          Episode ep = base;
          ep.instruction = instr;
          ep.episode_id = fmt::format("{}-vln-{:03d}-{}", scene.scene_id, k, to_string(instr.type));
          out.push_back(std::move(ep));
        }
      } catch (const Error& e) {
        spdlog::warn("high-level generation skipped for pair {}: {}", k, e.what());
      }
    }
  }

  const auto roomy = safe_cells(world, config.endpoints.min_safety);
  for (std::size_t k = 0; k < config.nogoal && !roomy.empty(); ++k) {
    const Vec2 p = world.grid.center(roomy[rng.below(roomy.size())]);
    Episode ep;
    ep.episode_id = fmt::format("{}-nogoal-{:03d}", scene.scene_id, k);
    ep.scene_id = scene.scene_id;
    ep.task_type = TaskType::NogoalNav;
    ep.instruction.level = InstructionLevel::low;
    ep.instruction.type = InstructionType::BaseAction;
    ep.instruction.text = "Explore the house as far as you can without bumping into anything.";
    ep.instruction.slots["action"] = "explore";
    ep.start_pose = {p, wrap_angle(static_cast<double>(rng.below(8)) * kPi / 4.0)};
    ep.goal.position = p;
    ep.goal.success_radius = 0.0;
    ep.reference_path.waypoints = {p};
    ep.asset_count = assets;
    ep.labels = label_complexity(assets, 0.0, config.thresholds);
    out.push_back(std::move(ep));
  }

  const double reach = config.base.step_length * 2.0 + 0.5;
  const auto open_cells = safe_cells(world, std::max(config.endpoints.min_safety, reach));
  const BaseAction kinds[] = {ForwardSteps{2}, TurnDegrees{-90}, TurnDegrees{180}, BackwardSteps{1}};
  for (std::size_t k = 0; k < config.base_actions && !open_cells.empty(); ++k) {
    const Vec2 p = world.grid.center(open_cells[rng.below(open_cells.size())]);
    const double theta = wrap_angle(static_cast<double>(rng.below(4)) * kPi / 2.0);
    Episode ep = base_action_episode(kinds[k % 4], {p, theta}, config.base);
    ep.episode_id = fmt::format("{}-base-{:03d}", scene.scene_id, k);
    ep.scene_id = scene.scene_id;
    ep.asset_count = assets;
    ep.labels = label_complexity(assets, ep.reference_path.length(), config.thresholds);
    out.push_back(std::move(ep));
  }
  return out;
}

json episode_to_json(const Episode& ep) {
  json wp = json::array();
  for (const auto& p : ep.reference_path.waypoints) wp.push_back({p.x(), p.y()});
  json goal = {{"position", {ep.goal.position.x(), ep.goal.position.y()}}, {"success_radius", ep.goal.success_radius}};
  if (ep.goal.target_instance) goal["target_instance"] = *ep.goal.target_instance;
  if (ep.goal.heading) {
    goal["heading"] = *ep.goal.heading;
    goal["heading_tolerance"] = ep.goal.heading_tolerance;
  }
  return {{"episode_id", ep.episode_id},
          {"scene_id", ep.scene_id},
          {"task_type", to_string(ep.task_type)},
          {"instruction",
           {{"level", to_string(ep.instruction.level)},
            {"type", to_string(ep.instruction.type)},
            {"text", ep.instruction.text},
            {"slots", ep.instruction.slots}}},
          {"start_pose", {{"x", ep.start_pose.position.x()}, {"y", ep.start_pose.position.y()}, {"theta", ep.start_pose.theta}}},
          {"goal", goal},
          {"reference_path", wp},
          {"labels", {{"scene_complexity", to_string(ep.labels.scene)}, {"path_complexity", to_string(ep.labels.path)}}},
          {"asset_count", ep.asset_count},
          {"metadata", ep.metadata}};
}

Episode episode_from_json(const json& j) {
  Episode ep;
  try {
    ep.episode_id = j.at("episode_id").get<std::string>();
    ep.scene_id = j.at("scene_id").get<std::string>();
    ep.task_type = task_type_from_string(j.at("task_type").get<std::string>());
    const auto& ji = j.at("instruction");
    ep.instruction.level = instruction_level_from_string(ji.at("level").get<std::string>());
    ep.instruction.type = instruction_type_from_string(ji.at("type").get<std::string>());
    ep.instruction.text = ji.at("text").get<std::string>();
    ep.instruction.slots = ji.value("slots", std::map<std::string, std::string>{});
    const auto& sp = j.at("start_pose");
    ep.start_pose = {{sp.at("x").get<double>(), sp.at("y").get<double>()}, sp.at("theta").get<double>()};
    const auto& g = j.at("goal");
    ep.goal.position = {g.at("position")[0].get<double>(), g.at("position")[1].get<double>()};
    ep.goal.success_radius = g.at("success_radius").get<double>();
    if (g.contains("target_instance")) ep.goal.target_instance = g["target_instance"].get<std::string>();
    if (g.contains("heading")) {
      ep.goal.heading = g["heading"].get<double>();
      ep.goal.heading_tolerance = g.value("heading_tolerance", 0.0);
    }
    for (const auto& p : j.at("reference_path")) ep.reference_path.waypoints.emplace_back(p[0].get<double>(), p[1].get<double>());
    ep.labels.scene = scene_complexity_from_string(j.at("labels").at("scene_complexity").get<std::string>());
    ep.labels.path = path_complexity_from_string(j.at("labels").at("path_complexity").get<std::string>());
    ep.asset_count = j.value("asset_count", std::size_t{0});
    ep.metadata = j.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("episode: {}", e.what()));
  }
  return ep;
}

void write_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  for (const auto& ep : episodes) os << episode_to_json(ep).dump() << "\n";
}

std::vector<Episode> read_episodes(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError(fmt::format("cannot open {}", file.string()));
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}:{}: {}", file.string(), lineno, e.what()));
    }
  }
  return out;
}

}  // namespace gsnav
