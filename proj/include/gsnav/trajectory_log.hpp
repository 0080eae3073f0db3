#pragma once

#include "gsnav/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

enum class DoneReason { stop_issued, timeout, collision_terminated, max_steps, aborted };

std::string_view to_string(DoneReason r);
DoneReason done_reason_from_string(std::string_view s);

struct ContactSample {
  std::string instance_id;
  double penetration_depth = 0.0;
};

// One pose per simulation substep. `action` is set on the sample at which an
// action was issued (its JSON form), `cmd` is the velocity being executed
// during the substep that ended at t.
struct LogSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double cmd_v = 0.0;
  double cmd_omega = 0.0;
  std::optional<nlohmann::json> action;
  std::vector<ContactSample> contacts;

  [[nodiscard]] Vec2 position() const { return {x, y}; }
  [[nodiscard]] bool in_contact() const { return !contacts.empty(); }
};

struct ContactInterval {
  std::string instance_id;
  double t_start = 0.0;
  double t_end = 0.0;
  double max_depth = 0.0;
};

struct TrajectoryLog {
  std::string config_hash;
  std::string episode_id;
  std::string scene_id;
  std::string task_type;
  std::optional<DoneReason> done_reason;
  double agent_radius = 0.25;
  std::vector<double> stuck_events;  // times at which recovery fired
  std::vector<LogSample> samples;

  [[nodiscard]] std::size_t action_count() const;
  [[nodiscard]] double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
  [[nodiscard]] bool stop_issued() const { return done_reason == DoneReason::stop_issued; }
};

// Maximal runs of consecutive samples in contact with the same instance.
std::vector<ContactInterval> contact_intervals(const TrajectoryLog& log);

// Maximal runs of consecutive samples in contact with anything.
std::size_t contact_run_count(const TrajectoryLog& log);

std::string log_to_jsonl(const TrajectoryLog& log);
TrajectoryLog log_from_jsonl(const std::string& text);
void write_log(const TrajectoryLog& log, const std::filesystem::path& file);
TrajectoryLog read_log(const std::filesystem::path& file);

}  // namespace gsnav
