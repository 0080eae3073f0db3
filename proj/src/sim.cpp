#include "gsnav/sim.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace gsnav {

using nlohmann::json;

namespace {

constexpr double kContactEps = 1e-9;

struct Hit {
  const std::string* id;
  double depth;
  Vec2 normal;
};

std::vector<Hit> hits_at(const ObstacleSet& obstacles, const Vec2& p, double radius) {
  std::vector<Hit> out;
  for (const auto& poly : obstacles.polygons) {
    const auto b = poly.polygon.bounds();
    if (p.x() + radius < b.min.x() || p.x() - radius > b.max.x() || p.y() + radius < b.min.y() ||
        p.y() - radius > b.max.y())
      continue;
    const Contact c = disc_vs_polygon(p, radius, poly.polygon);
    if (c.in_contact && c.penetration_depth > kContactEps) out.push_back({&poly.instance_id, c.penetration_depth, c.normal});
  }
  for (const auto& wall : obstacles.walls) {
    const Contact c = disc_vs_segment(p, radius, wall.segment);
    if (c.in_contact && c.penetration_depth > kContactEps) out.push_back({&wall.id, c.penetration_depth, c.normal});
  }
  return out;
}

}  // namespace

std::string_view to_string(DiscreteAction a) {
  switch (a) {
    case DiscreteAction::turn_left: return "turn_left";
    case DiscreteAction::turn_right: return "turn_right";
    case DiscreteAction::forward: return "forward";
    case DiscreteAction::stop: return "stop";
  }
  return "stop";
}

DiscreteAction discrete_action_from_string(std::string_view s) {
  for (auto a : {DiscreteAction::turn_left, DiscreteAction::turn_right, DiscreteAction::forward, DiscreteAction::stop})
    if (to_string(a) == s) return a;
  throw ProtocolError(fmt::format("unknown discrete action '{}'", s));
}

json action_to_json(const Action& a) {
  if (const auto* d = std::get_if<DiscreteAction>(&a)) return {{"discrete", to_string(*d)}};
  const auto& c = std::get<ContinuousAction>(a);
  return {{"continuous", {{"v", c.v}, {"omega", c.omega}, {"duration", c.duration}}}};
}

Action action_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("action must be a JSON object");
  const bool has_d = j.contains("discrete");
  const bool has_c = j.contains("continuous");
  if (has_d == has_c) throw ProtocolError("action needs exactly one of 'discrete' or 'continuous'");
  if (has_d) {
    if (!j["discrete"].is_string()) throw ProtocolError("'discrete' must be a string");
    return discrete_action_from_string(j["discrete"].get<std::string>());
  }
  const auto& c = j["continuous"];
  for (const char* k : {"v", "omega", "duration"})
    if (!c.is_object() || !c.contains(k) || !c[k].is_number())
      throw ProtocolError(fmt::format("continuous action missing number '{}'", k));
  return ContinuousAction{c["v"].get<double>(), c["omega"].get<double>(), c["duration"].get<double>()};
}

std::vector<ContactEvent> disc_contacts(const ObstacleSet& obstacles, const Vec2& p, double radius) {
  std::map<std::string, double> deepest;
  for (const auto& h : hits_at(obstacles, p, radius)) {
    double& d = deepest[*h.id];
    d = std::max(d, h.depth);
  }
  std::vector<ContactEvent> out;
  for (const auto& [id, d] : deepest) out.push_back({id, d, 0.0});
  return out;
}

bool detect_stuck(std::span<const LogSample> window, const SimParams& params) {
  if (window.size() < 2) return false;
  if (window.back().t - window.front().t < params.stuck_window - 1e-9) return false;
  for (std::size_t i = 1; i < window.size(); ++i)
    if (window[i].cmd_v == 0.0) return false;
  return (window.back().position() - window.front().position()).norm() < params.stuck_displacement;
}

Environment::Environment(const World& world, SimParams params, std::string config_hash)
    : world_(world), params_(params), config_hash_(std::move(config_hash)) {}

std::pair<AgentState, std::optional<Frame>> Environment::reset(const Episode& episode) {
  if (episode.scene_id != world_.scene.scene_id)
    throw EpisodeError(
        fmt::format("episode {} is for scene '{}', not '{}'", episode.episode_id, episode.scene_id, world_.scene.scene_id));
  const auto cell = world_.grid.cell_of(episode.start_pose.position);
  if (!cell || world_.grid.blocked(cell->x, cell->y))
    throw EpisodeError(fmt::format("episode {}: start pose ({:.3f}, {:.3f}) is not on a free cell", episode.episode_id,
                                   episode.start_pose.position.x(), episode.start_pose.position.y()));
  episode_ = episode;
  state_ = AgentState{episode.start_pose.position, wrap_angle(episode.start_pose.theta), params_.agent_height,
                      params_.agent_radius, 0.0};
  done_ = false;
  reason_.reset();
  steps_ = 0;
  window_start_ = 0;
  log_ = TrajectoryLog{};
  log_.config_hash = config_hash_;
  log_.episode_id = episode.episode_id;
  log_.scene_id = episode.scene_id;
  log_.task_type = std::string(to_string(episode.task_type));
  log_.agent_radius = params_.agent_radius;
  record(0.0, 0.0, {});
  std::optional<Frame> obs;
  if (observe_) obs = observe_(state_);
  return {state_, std::move(obs)};
}

bool Environment::free_at(const Vec2& p) const { return hits_at(world_.obstacles, p, params_.agent_radius).empty(); }

void Environment::record(double v, double omega, const std::vector<ContactEvent>& contacts) {
  LogSample s;
  s.t = state_.time;
  s.x = state_.position.x();
  s.y = state_.position.y();
  s.theta = state_.theta;
  s.cmd_v = v;
  s.cmd_omega = omega;
  for (const auto& c : contacts) s.contacts.push_back({c.instance_id, c.penetration_depth});
  log_.samples.push_back(std::move(s));
}

void Environment::substep(double v, double omega, double h, std::vector<ContactEvent>& events) {
  const double th0 = state_.theta;
  Vec2 p = state_.position;
  if (v != 0.0) {
    if (std::abs(omega) > 1e-12) {
      const double th1 = th0 + omega * h;
      p += Vec2(v / omega * (std::sin(th1) - std::sin(th0)), -v / omega * (std::cos(th1) - std::cos(th0)));
    } else {
      p += v * h * Vec2(std::cos(th0), std::sin(th0));
    }
  }
  state_.theta = wrap_angle(th0 + omega * h);

  // Push out of the deepest obstacle until nothing overlaps.
  std::map<std::string, double> touched;
  for (int iter = 0; iter < 16; ++iter) {
    const auto hits = hits_at(world_.obstacles, p, params_.agent_radius);
    if (hits.empty()) break;
    const auto deepest = std::max_element(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.depth < b.depth;
    });
    for (const auto& hit : hits) {
      double& d = touched[*hit.id];
      d = std::max(d, hit.depth);
    }
    p += deepest->normal * deepest->depth;
  }
  state_.position = p;
  state_.time += h;

  std::vector<ContactEvent> now;
  for (const auto& [id, d] : touched) now.push_back({id, d, state_.time});
  record(v, omega, now);
  events.insert(events.end(), now.begin(), now.end());
}

void Environment::try_recover() {
  const auto& s = log_.samples;
  const double t_now = s.back().t;
  const double t_from = t_now - params_.stuck_window + 1e-9;
  // Last sample at or before the window start.
  auto it = std::upper_bound(s.begin() + static_cast<std::ptrdiff_t>(window_start_), s.end(), t_from,
                             [](double t, const LogSample& x) { return t < x.t; });
  if (it == s.begin() + static_cast<std::ptrdiff_t>(window_start_)) return;
  --it;
  const std::span<const LogSample> window(&*it, static_cast<std::size_t>(s.end() - it));
  if (!detect_stuck(window, params_)) return;
  log_.stuck_events.push_back(t_now);
  window_start_ = s.size() - 1;
  const Vec2 back = state_.position - params_.recovery_backoff * Vec2(std::cos(state_.theta), std::sin(state_.theta));
  if (free_at(back)) state_.position = back;
}

StepResult Environment::step(const Action& action) {
  if (!episode_) throw EpisodeError("step before reset");
  if (done_) throw EpisodeError(fmt::format("episode {} already finished", episode_->episode_id));

  double v = 0.0, omega = 0.0, duration = 0.0;
  bool stop = false;
  if (const auto* d = std::get_if<DiscreteAction>(&action)) {
    switch (*d) {
      case DiscreteAction::forward:
        v = params_.forward_speed;
        duration = params_.step_length / params_.forward_speed;
        break;
      case DiscreteAction::turn_left:
        omega = params_.turn_rate;
        duration = params_.turn_angle / params_.turn_rate;
        break;
      case DiscreteAction::turn_right:
        omega = -params_.turn_rate;
        duration = params_.turn_angle / params_.turn_rate;
        break;
      case DiscreteAction::stop: stop = true; break;
    }
  } else {
    const auto& c = std::get<ContinuousAction>(action);
    if (!std::isfinite(c.v) || !std::isfinite(c.omega) || !std::isfinite(c.duration))
      throw ValidationError("continuous action must be finite");
    if (std::abs(c.v) > params_.v_max + 1e-12)
      throw ValidationError(fmt::format("|v| = {} exceeds v_max = {}", std::abs(c.v), params_.v_max));
    if (std::abs(c.omega) > params_.omega_max + 1e-12)
      throw ValidationError(fmt::format("|omega| = {} exceeds omega_max = {}", std::abs(c.omega), params_.omega_max));
    if (c.duration <= 0.0) throw ValidationError("action duration must be positive");
    v = c.v;
    omega = c.omega;
    duration = c.duration;
  }

  ++steps_;
  log_.samples.back().action = action_to_json(action);

  StepResult result;
  const bool nogoal = episode_->task_type == TaskType::NogoalNav;
  if (stop) {
    done_ = true;
    reason_ = DoneReason::stop_issued;
  }
  double remaining = duration;
  while (!done_ && remaining > 1e-12) {
    double h = std::min(params_.dt, remaining);
    bool hits_cap = false;
    if (nogoal && state_.time + h >= params_.nogoal_time_cap - 1e-12) {
      h = params_.nogoal_time_cap - state_.time;
      hits_cap = true;
    }
    const std::size_t before = result.contact_events.size();
    substep(v, omega, h, result.contact_events);
    remaining -= h;
    if (nogoal && result.contact_events.size() > before) {
      done_ = true;
      reason_ = DoneReason::collision_terminated;
    } else if (hits_cap) {
      state_.time = params_.nogoal_time_cap;
      log_.samples.back().t = state_.time;
      done_ = true;
      reason_ = DoneReason::timeout;
    } else if (params_.recovery && v != 0.0) {
      try_recover();
    }
  }
  if (!done_ && steps_ >= params_.max_steps) {
    done_ = true;
    reason_ = DoneReason::max_steps;
  }
  if (done_) log_.done_reason = reason_;

  result.state = state_;
  result.done = done_;
  result.done_reason = reason_;
  if (observe_) result.observation = observe_(state_);
  return result;
}

void Environment::terminate(DoneReason reason) {
  if (!episode_ || done_) return;
  done_ = true;
  reason_ = reason;
  log_.done_reason = reason;
}

TrajectoryLog Environment::finalize() const {
  if (!episode_) throw EpisodeError("finalize before reset");
  if (!done_) throw EpisodeError(fmt::format("episode {} is still running", episode_->episode_id));
  return log_;
}

}  // namespace gsnav
