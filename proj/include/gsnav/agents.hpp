#pragma once

#include "gsnav/episode.hpp"
#include "gsnav/sim.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

// Protocol-speaking agent that runs in-process. Builtin agents may read the
// environment state directly; they still receive every protocol message.
class BuiltinAgent {
 public:
  virtual ~BuiltinAgent() = default;
  // Reply to a server message (hello/reset/step), or nullopt.
  std::optional<nlohmann::json> on_message(const nlohmann::json& msg);

 protected:
  virtual Action act() = 0;
};

// Follows the reference path: turn in place, drive the segment, repeat, stop.
class OracleAgent : public BuiltinAgent {
 public:
  OracleAgent(const Environment& env, const Episode& episode);

 protected:
  Action act() override;

 private:
  std::vector<Action> plan_;
  std::size_t next_ = 0;
};

// Uniform over forward/turn_left/turn_right (forward twice as likely). Never stops.
class RandomAgent : public BuiltinAgent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}

 protected:
  Action act() override;

 private:
  Rng rng_;
};

// Turns toward the goal, steps forward when the next pose is free, stops inside the goal radius.
class GreedyAgent : public BuiltinAgent {
 public:
  GreedyAgent(const Environment& env, const Episode& episode) : env_(env), episode_(episode) {}

 protected:
  Action act() override;

 private:
  const Environment& env_;
  const Episode& episode_;
};

// Oracle action sequence for an episode, starting from its start pose.
std::vector<Action> oracle_plan(const Episode& episode, const SimParams& params);

// "oracle", "random" or "greedy". Throws ValidationError otherwise.
std::unique_ptr<BuiltinAgent> make_builtin_agent(const std::string& name, const Environment& env, const Episode& episode,
                                                 std::uint64_t seed);

}  // namespace gsnav
