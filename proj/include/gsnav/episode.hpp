#pragma once

#include "gsnav/planner.hpp"
#include "gsnav/world.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gsnav {

class MlmClient;

enum class InstructionLevel { high, low };

enum class InstructionType {
  // high level
  AddObject,
  ScenarioDriven,
  RelativeRelationship,
  AttributeBased,
  AreaBased,
  // low level
  BaseAction,
  SingleGoal,
};

enum class SingleGoalKind { RoomToRoom, RoomToObject, ObjectToObject, ObjectToRoom, ZoneToZone };

enum class TaskType { VLN, NogoalNav };
enum class SceneComplexity { many, mid, few };
enum class PathComplexity { long_path, mid, short_path };

std::string_view to_string(InstructionLevel v);
std::string_view to_string(InstructionType v);
std::string_view to_string(TaskType v);
std::string_view to_string(SceneComplexity v);
std::string_view to_string(PathComplexity v);
InstructionLevel instruction_level_from_string(std::string_view s);
InstructionType instruction_type_from_string(std::string_view s);
TaskType task_type_from_string(std::string_view s);
SceneComplexity scene_complexity_from_string(std::string_view s);
PathComplexity path_complexity_from_string(std::string_view s);

inline constexpr InstructionType kHighLevelTypes[] = {
    InstructionType::AddObject, InstructionType::ScenarioDriven, InstructionType::RelativeRelationship,
    InstructionType::AttributeBased, InstructionType::AreaBased};

InstructionLevel level_of(InstructionType t);

struct Instruction {
  InstructionLevel level = InstructionLevel::low;
  InstructionType type = InstructionType::SingleGoal;
  std::string text;
  std::map<std::string, std::string> slots;
};

std::size_t word_count(std::string_view text);

// True when text contains one of the ids, or anything shaped like an
// internal id (letters, underscore, digits, e.g. chair_5).
bool contains_internal_id(std::string_view text, const std::set<std::string>& ids);

// Throws ValidationError: type/level mismatch, leaked ids, or a high-level
// text outside 5..20 words.
void validate_instruction(const Instruction& instr, const std::set<std::string>& ids);

struct ComplexityLabels {
  SceneComplexity scene = SceneComplexity::mid;
  PathComplexity path = PathComplexity::mid;
  friend bool operator==(const ComplexityLabels&, const ComplexityLabels&) = default;
};

struct ComplexityThresholds {
  std::size_t many_assets_above = 376;
  std::size_t few_assets_below = 184;
  double long_path_above = 29.0;  // m
  double short_path_below = 8.4;  // m
};

ComplexityLabels label_complexity(std::size_t scene_asset_count, double path_length,
                                  const ComplexityThresholds& thresholds = {});

struct Pose2 {
  Vec2 position = Vec2::Zero();
  double theta = 0.0;
};

struct Goal {
  Vec2 position = Vec2::Zero();
  double success_radius = 3.0;
  std::optional<std::string> target_instance;
  std::optional<double> heading;
  double heading_tolerance = 0.0;
};

struct Episode {
  std::string episode_id;
  std::string scene_id;
  TaskType task_type = TaskType::VLN;
  Instruction instruction;
  Pose2 start_pose;
  Goal goal;
  Path2 reference_path;
  ComplexityLabels labels;
  std::size_t asset_count = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

// Throws ValidationError when the path endpoints do not match start/goal or
// the labels disagree with label_complexity.
void validate_episode(const Episode& ep, const ComplexityThresholds& thresholds = {});

// Text names for rooms and categories ("living_room" -> "living room").
std::string display_name(std::string_view name);

// Deterministic single-goal instruction. Names must be known; names that look
// like instance ids are rejected.
Instruction template_low_level(std::string_view start_ref, std::string_view end_ref, SingleGoalKind kind,
                               const std::set<std::string>& known_names, const std::set<std::string>& instance_ids = {});

struct ForwardSteps {
  int n = 1;
};
struct BackwardSteps {
  int n = 1;
};
struct TurnDegrees {
  int degrees = 90;  // positive = left (counter-clockwise)
};
using BaseAction = std::variant<ForwardSteps, BackwardSteps, TurnDegrees>;

struct BaseActionParams {
  double step_length = 0.25;
  double goal_radius = 0.2;
  double heading_tolerance = 15.0 * kPi / 180.0;
};

Episode base_action_episode(const BaseAction& action, const Pose2& start, const BaseActionParams& params = {});

struct SpatialRelation {
  std::string subject;
  std::string relation;  // next_to, opposite, in_front_of
  std::string object;
};

struct RelationParams {
  double max_gap = 1.5;
  double next_to_gap = 0.5;
  double opposite_angle_deg = 30.0;
};

std::vector<SpatialRelation> extract_relations(const World& world, const RelationParams& params = {});
std::string build_text_map(const World& world, const RelationParams& params = {});

struct HighLevelOptions {
  int max_retries = 3;
  std::string prompt_version = "v1";
  RelationParams relations;
};

struct HighLevelResult {
  std::vector<Instruction> instructions;
  std::vector<std::string> warnings;
  int attempts = 0;
};

// Asks the client for high-level instructions between two instances and keeps
// the entries that pass validation.
HighLevelResult gen_high_level(MlmClient& client, const World& world, const std::string& start_instance,
                               const std::string& goal_instance, const HighLevelOptions& options = {});

struct BalanceReport {
  std::map<InstructionType, std::size_t> counts;
  double ratio = 1.0;  // max / min over high-level categories
  bool within_band = true;
};

BalanceReport balance_report(const std::vector<Episode>& episodes, double max_ratio = 1.5);

struct EpisodeGenConfig {
  std::uint64_t seed = 0;
  std::size_t vln_pairs = 6;
  std::size_t high_per_pair = 5;
  std::size_t nogoal = 2;
  std::size_t base_actions = 4;
  double success_radius = 3.0;
  bool prefer_goal_room = true;
  EndpointConstraints endpoints;
  PlanCost cost;
  BaseActionParams base;
  HighLevelOptions high;
  ComplexityThresholds thresholds;
};

// Builds a deterministic episode set for one scene. client may be null, in
// which case only low-level, base-action and exploration episodes are made.
std::vector<Episode> generate_episodes(const World& world, MlmClient* client, const EpisodeGenConfig& config);

nlohmann::json episode_to_json(const Episode& ep);
Episode episode_from_json(const nlohmann::json& j);
void write_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& file);
std::vector<Episode> read_episodes(const std::filesystem::path& file);

}  // namespace gsnav
