#include "gsnav/trajectory_log.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gsnav {

using nlohmann::json;

std::string_view to_string(DoneReason r) {
  switch (r) {
    case DoneReason::stop_issued: return "stop_issued";
    case DoneReason::timeout: return "timeout";
    case DoneReason::collision_terminated: return "collision_terminated";
    case DoneReason::max_steps: return "max_steps";
    case DoneReason::aborted: return "aborted";
  }
  return "aborted";
}

DoneReason done_reason_from_string(std::string_view s) {
  for (auto r : {DoneReason::stop_issued, DoneReason::timeout, DoneReason::collision_terminated, DoneReason::max_steps,
                 DoneReason::aborted})
    if (to_string(r) == s) return r;
  throw ParseError(fmt::format("unknown done_reason '{}'", s));
}

std::size_t TrajectoryLog::action_count() const {
  std::size_t n = 0;
  for (const auto& s : samples)
    if (s.action) ++n;
  return n;
}

std::vector<ContactInterval> contact_intervals(const TrajectoryLog& log) {
  std::vector<ContactInterval> out;
  std::map<std::string, std::size_t> open;  // instance -> index in out
  for (const auto& s : log.samples) {
    std::set<std::string> now;
    for (const auto& c : s.contacts) {
      now.insert(c.instance_id);
      auto it = open.find(c.instance_id);
      if (it == open.end()) {
        open[c.instance_id] = out.size();
        out.push_back({c.instance_id, s.t, s.t, c.penetration_depth});
      } else {
        auto& iv = out[it->second];
        iv.t_end = s.t;
        iv.max_depth = std::max(iv.max_depth, c.penetration_depth);
      }
    }
    for (auto it = open.begin(); it != open.end();) {
      if (!now.contains(it->first))
        it = open.erase(it);
      else
        ++it;
    }
  }
  return out;
}

std::size_t contact_run_count(const TrajectoryLog& log) {
  std::size_t runs = 0;
  bool prev = false;
  for (const auto& s : log.samples) {
    const bool c = s.in_contact();
    if (c && !prev) ++runs;
    prev = c;
  }
  return runs;
}

std::string log_to_jsonl(const TrajectoryLog& log) {
  json header = {{"type", "header"},
                 {"config_hash", log.config_hash},
                 {"episode_id", log.episode_id},
                 {"scene_id", log.scene_id},
                 {"task_type", log.task_type},
                 {"agent_radius", log.agent_radius},
                 {"stuck_events", log.stuck_events}};
  header["done_reason"] = log.done_reason ? json(to_string(*log.done_reason)) : json(nullptr);
  std::string out = header.dump() + "\n";
  for (const auto& s : log.samples) {
    json j = {{"t", s.t}, {"x", s.x}, {"y", s.y}, {"theta", s.theta}, {"cmd", {s.cmd_v, s.cmd_omega}}};
    if (s.action) j["action"] = *s.action;
    json contacts = json::array();
    for (const auto& c : s.contacts) contacts.push_back({{"instance_id", c.instance_id}, {"depth", c.penetration_depth}});
    j["contacts"] = contacts;
    out += j.dump();
    out += "\n";
  }
  return out;
}

TrajectoryLog log_from_jsonl(const std::string& text) {
  TrajectoryLog log;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "header") throw ParseError("trajectory log must start with a header line");
        log.config_hash = j.at("config_hash").get<std::string>();
        log.episode_id = j.at("episode_id").get<std::string>();
        log.scene_id = j.at("scene_id").get<std::string>();
        log.task_type = j.at("task_type").get<std::string>();
        log.agent_radius = j.at("agent_radius").get<double>();
        log.stuck_events = j.at("stuck_events").get<std::vector<double>>();
        if (!j.at("done_reason").is_null()) log.done_reason = done_reason_from_string(j["done_reason"].get<std::string>());
        have_header = true;
        continue;
      }
      LogSample s;
      s.t = j.at("t").get<double>();
      s.x = j.at("x").get<double>();
      s.y = j.at("y").get<double>();
      s.theta = j.at("theta").get<double>();
      s.cmd_v = j.at("cmd")[0].get<double>();
      s.cmd_omega = j.at("cmd")[1].get<double>();
      if (j.contains("action")) s.action = j["action"];
      for (const auto& c : j.at("contacts"))
        s.contacts.push_back({c.at("instance_id").get<std::string>(), c.at("depth").get<double>()});
      log.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("trajectory log: {}", e.what()));
  }
  if (!have_header) throw ParseError("trajectory log is empty");
  return log;
}

void write_log(const TrajectoryLog& log, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(fmt::format("cannot write {}", file.string()));
  os << log_to_jsonl(log);
}

TrajectoryLog read_log(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return log_from_jsonl(ss.str());
}

}  // namespace gsnav
