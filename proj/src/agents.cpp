#include "gsnav/agents.hpp"

#include "gsnav/error.hpp"
#include "gsnav/protocol.hpp"

#include <fmt/format.h>

namespace gsnav {

using nlohmann::json;

std::optional<json> BuiltinAgent::on_message(const json& msg) {
  const std::string type = msg.value("type", "");
  if (type == "hello") return json{{"type", "hello"}, {"protocol_version", kProtocolVersion}};
  if (type == "reset" || (type == "step" && !msg.value("done", false))) {
    json reply = action_to_json(act());
    reply["type"] = "action";
    return reply;
  }
  return std::nullopt;
}

std::vector<Action> oracle_plan(const Episode& episode, const SimParams& params) {
  std::vector<Action> plan;
  double heading = wrap_angle(episode.start_pose.theta);
  auto turn_to = [&](double target) {
    const double delta = wrap_angle(target - heading);
    if (std::abs(delta) > 1e-12)
      plan.push_back(ContinuousAction{0.0, delta > 0 ? params.omega_max : -params.omega_max,
                                      std::abs(delta) / params.omega_max});
    heading = target;
  };
  Vec2 at = episode.start_pose.position;
  const auto& wp = episode.reference_path.waypoints;
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const Vec2 d = wp[i] - at;
    const double len = d.norm();
    if (len < 1e-12) continue;
    const double seg_heading = std::atan2(d.y(), d.x());
    // Backward base actions reverse instead of turning around.
    const bool reverse = std::abs(wrap_angle(seg_heading - heading - kPi)) < 1e-9 &&
                         episode.instruction.type == InstructionType::BaseAction;
    if (!reverse) turn_to(seg_heading);
    plan.push_back(ContinuousAction{reverse ? -params.v_max : params.v_max, 0.0, len / params.v_max});
    at = wp[i];
  }
  if (episode.goal.heading) turn_to(*episode.goal.heading);
  plan.push_back(DiscreteAction::stop);
  return plan;
}

OracleAgent::OracleAgent(const Environment& env, const Episode& episode) : plan_(oracle_plan(episode, env.params())) {}

Action OracleAgent::act() { return next_ < plan_.size() ? plan_[next_++] : Action{DiscreteAction::stop}; }

Action RandomAgent::act() {
  switch (rng_.below(4)) {
    case 0: return DiscreteAction::turn_left;
    case 1: return DiscreteAction::turn_right;
    default: return DiscreteAction::forward;
  }
}

Action GreedyAgent::act() {
  const auto& s = env_.state();
  const auto& p = env_.params();
  const Vec2 to_goal = episode_.goal.position - s.position;
  if (to_goal.norm() <= std::min(episode_.goal.success_radius, 0.5)) return DiscreteAction::stop;
  const double delta = wrap_angle(std::atan2(to_goal.y(), to_goal.x()) - s.theta);
  if (std::abs(delta) > 0.5 * p.turn_angle) return delta > 0 ? DiscreteAction::turn_left : DiscreteAction::turn_right;
  const Vec2 next = s.position + p.step_length * Vec2(std::cos(s.theta), std::sin(s.theta));
  if (disc_contacts(env_.world().obstacles, next, p.agent_radius).empty()) return DiscreteAction::forward;
  return DiscreteAction::turn_left;
}

std::unique_ptr<BuiltinAgent> make_builtin_agent(const std::string& name, const Environment& env, const Episode& episode,
                                                 std::uint64_t seed) {
  if (name == "oracle") return std::make_unique<OracleAgent>(env, episode);
  if (name == "random") return std::make_unique<RandomAgent>(seed ^ stable_hash(episode.episode_id));
  if (name == "greedy") return std::make_unique<GreedyAgent>(env, episode);
  throw ValidationError(fmt::format("unknown builtin agent '{}'", name));
}

}  // namespace gsnav
