#pragma once

#include "gsnav/episode.hpp"
#include "gsnav/renderer.hpp"
#include "gsnav/trajectory_log.hpp"
#include "gsnav/world.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gsnav {

struct AgentState {
  Vec2 position = Vec2::Zero();
  double theta = 0.0;  // (-pi, pi]
  double height = 1.2;
  double radius = 0.25;
  double time = 0.0;
};

enum class DiscreteAction { turn_left, turn_right, forward, stop };

struct ContinuousAction {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
  double duration = 0.0;
};

using Action = std::variant<DiscreteAction, ContinuousAction>;

std::string_view to_string(DiscreteAction a);
DiscreteAction discrete_action_from_string(std::string_view s);
nlohmann::json action_to_json(const Action& a);
// Throws ProtocolError on malformed input.
Action action_from_json(const nlohmann::json& j);

struct SimParams {
  double agent_radius = 0.25;
  double agent_height = 1.2;
  double dt = 0.05;
  double v_max = 1.0;
  double omega_max = kPi / 2.0;
  double step_length = 0.25;
  double turn_angle = 15.0 * kPi / 180.0;
  double forward_speed = 0.5;
  double turn_rate = kPi / 6.0;
  double nogoal_time_cap = 120.0;
  std::size_t max_steps = 500;
  double stuck_window = 2.0;
  double stuck_displacement = 0.05;
  double recovery_backoff = 0.1;
  bool recovery = true;
};

struct ContactEvent {
  std::string instance_id;
  double penetration_depth = 0.0;
  double t = 0.0;
};

struct StepResult {
  AgentState state;
  std::optional<Frame> observation;
  std::vector<ContactEvent> contact_events;
  bool done = false;
  std::optional<DoneReason> done_reason;
};

// Deepest contact per obstacle for a disc at p.
std::vector<ContactEvent> disc_contacts(const ObstacleSet& obstacles, const Vec2& p, double radius);

// Stuck iff the window spans the stuck window, every sample in it was
// commanding translation, and the net displacement stays under the threshold.
bool detect_stuck(std::span<const LogSample> window, const SimParams& params);

using ObservationFn = std::function<Frame(const AgentState&)>;

// One episode of agent-world interaction over a shared immutable World.
class Environment {
 public:
  Environment(const World& world, SimParams params = {}, std::string config_hash = {});

  void set_observation(ObservationFn fn) { observe_ = std::move(fn); }

  // Throws EpisodeError on scene mismatch or a blocked start pose.
  std::pair<AgentState, std::optional<Frame>> reset(const Episode& episode);
  // Throws EpisodeError when stepped after done.
  StepResult step(const Action& action);
  // Ends the episode without an agent action (protocol failures, step caps).
  void terminate(DoneReason reason);
  // Throws EpisodeError while the episode is running.
  [[nodiscard]] TrajectoryLog finalize() const;

  [[nodiscard]] const AgentState& state() const { return state_; }
  [[nodiscard]] bool done() const { return done_; }
  [[nodiscard]] std::size_t steps() const { return steps_; }
  [[nodiscard]] const SimParams& params() const { return params_; }
  [[nodiscard]] const World& world() const { return world_; }

 private:
  void substep(double v, double omega, double h, std::vector<ContactEvent>& events);
  void record(double v, double omega, const std::vector<ContactEvent>& contacts);
  void try_recover();
  bool free_at(const Vec2& p) const;

  const World& world_;
  SimParams params_;
  std::string config_hash_;
  std::optional<Episode> episode_;
  AgentState state_;
  bool done_ = false;
  std::optional<DoneReason> reason_;
  std::size_t steps_ = 0;
  std::size_t window_start_ = 0;  // first sample eligible for stuck detection
  TrajectoryLog log_;
  ObservationFn observe_;
};

}  // namespace gsnav
