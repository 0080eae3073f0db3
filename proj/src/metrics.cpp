#include "gsnav/metrics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace gsnav {

using nlohmann::json;

bool Corridor::contains(const Vec2& p) const { return distance_to_polyline(p, reference.waypoints) <= r_tol; }

Corridor make_corridor(const Path2& reference, double r_tol) {
  Corridor c;
  c.reference = reference;
  c.r_tol = r_tol;
  if (!reference.waypoints.empty()) c.region = buffer_polyline(reference.waypoints, r_tol);
  return c;
}

double csr(const TrajectoryLog& log, const Corridor& corridor, const TaskCondition& condition) {
  if (log.samples.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : log.samples)
    if (corridor.contains(s.position()) && (!condition || condition(s))) ++ok;
  return static_cast<double>(ok) / static_cast<double>(log.samples.size());
}

double icp(const TrajectoryLog& log, IcpMode mode) {
  if (log.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : log.samples) {
    if (!s.in_contact()) continue;
    if (mode == IcpMode::binary) {
      acc += 1.0;
    } else {
      double d = 0.0;
      for (const auto& c : s.contacts) d = std::max(d, c.penetration_depth);
      acc += std::min(d / log.agent_radius, 1.0);
    }
  }
  return acc / static_cast<double>(log.samples.size());
}

double ps(const TrajectoryLog& log) {
  const auto& s = log.samples;
  if (s.size() < 2) return 1.0;
  double acc = 0.0;
  for (std::size_t t = 1; t < s.size(); ++t) acc += std::min(std::abs(wrap_angle(s[t].theta - s[t - 1].theta)) / kPi, 1.0);
  return 1.0 - acc / static_cast<double>(s.size() - 1);
}

double agent_path_length(const TrajectoryLog& log) {
  double len = 0.0;
  for (std::size_t i = 1; i < log.samples.size(); ++i)
    len += (log.samples[i].position() - log.samples[i - 1].position()).norm();
  return len;
}

StandardMetrics standard_metrics(const TrajectoryLog& log, const Episode& episode, const MetricConfig& config) {
  StandardMetrics m;
  m.cr = static_cast<double>(contact_run_count(log));
  if (log.samples.empty()) return m;
  const double radius = config.success_radius.value_or(episode.goal.success_radius);
  auto at_goal = [&](const LogSample& s) {
    if ((s.position() - episode.goal.position).norm() > radius) return false;
    if (episode.goal.heading && std::abs(wrap_angle(s.theta - *episode.goal.heading)) > episode.goal.heading_tolerance)
      return false;
    return true;
  };
  for (const auto& s : log.samples)
    if (at_goal(s)) {
      m.osr = 1.0;
      break;
    }
  const bool stopped = log.stop_issued() || !config.require_stop;
  m.sr = (stopped && at_goal(log.samples.back())) ? 1.0 : 0.0;
  const double L = episode.reference_path.length();
  const double P = agent_path_length(log);
  const double denom = std::max(P, L);
  m.spl = denom > 0.0 ? m.sr * L / denom : m.sr;
  return m;
}

NogoalMetrics nogoal_metrics(const TrajectoryLog& log, const OccupancyGrid& grid, const MetricConfig& config) {
  NogoalMetrics m;
  m.episode_time = std::min(log.duration(), config.nogoal_time_cap);
  std::set<std::pair<long, long>> cells;
  for (const auto& s : log.samples) {
    if (s.t > config.nogoal_time_cap + 1e-9) break;
    const Vec2 q = (s.position() - grid.origin) / config.explore_cell;
    cells.emplace(static_cast<long>(std::floor(q.x())), static_cast<long>(std::floor(q.y())));
  }
  m.explored_area = static_cast<double>(cells.size()) * config.explore_cell * config.explore_cell;
  return m;
}

std::string EvalSlice::key() const {
  return fmt::format("{}/{}/{}/{}", to_string(task_type), to_string(instruction_level), to_string(scene_complexity),
                     to_string(path_complexity));
}

EvalSlice slice_of(const Episode& episode) {
  return {episode.task_type, episode.instruction.level, episode.labels.scene, episode.labels.path};
}

EpisodeScore score_episode(const TrajectoryLog& log, const Episode& episode, const OccupancyGrid& grid,
                           const MetricConfig& config) {
  EpisodeScore row;
  row.episode_id = episode.episode_id;
  row.scene_id = episode.scene_id;
  row.slice = slice_of(episode);
  row.done_reason = log.done_reason ? std::string(to_string(*log.done_reason)) : "";
  row.steps = log.action_count();
  row.icp = icp(log, config.icp_mode);
  row.ps = ps(log);
  row.cr = static_cast<double>(contact_run_count(log));
  if (episode.task_type == TaskType::NogoalNav) {
    const auto ng = nogoal_metrics(log, grid, config);
    row.episode_time = ng.episode_time;
    row.explored_area = ng.explored_area;
  } else {
    const auto sm = standard_metrics(log, episode, config);
    row.sr = sm.sr;
    row.osr = sm.osr;
    row.spl = sm.spl;
    row.csr = csr(log, make_corridor(episode.reference_path, config.r_tol));
    row.episode_time = log.duration();
  }
  return row;
}

MetricMeans mean_of(const std::vector<const EpisodeScore*>& rows) {
  MetricMeans m;
  m.count = rows.size();
  if (rows.empty()) return m;
  for (const auto* r : rows) {
    m.sr += r->sr;
    m.osr += r->osr;
    m.spl += r->spl;
    m.cr += r->cr;
    m.csr += r->csr;
    m.icp += r->icp;
    m.ps += r->ps;
    m.episode_time += r->episode_time;
    m.explored_area += r->explored_area;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&m.sr, &m.osr, &m.spl, &m.cr, &m.csr, &m.icp, &m.ps, &m.episode_time, &m.explored_area}) *v /= n;
  return m;
}

MetricReport aggregate(std::vector<EpisodeScore> rows) {
  MetricReport rep;
  rep.rows = std::move(rows);
  std::vector<const EpisodeScore*> all;
  std::map<EvalSlice, std::vector<const EpisodeScore*>> by_slice;
  std::map<std::pair<std::string, std::string>, std::vector<const EpisodeScore*>> axes;
  for (const auto& r : rep.rows) {
    all.push_back(&r);
    by_slice[r.slice].push_back(&r);
    axes[{"task_type", std::string(to_string(r.slice.task_type))}].push_back(&r);
    axes[{"instruction_level", std::string(to_string(r.slice.instruction_level))}].push_back(&r);
    axes[{"scene_complexity", std::string(to_string(r.slice.scene_complexity))}].push_back(&r);
    axes[{"path_complexity", std::string(to_string(r.slice.path_complexity))}].push_back(&r);
  }
  rep.overall = mean_of(all);
  for (const auto& [s, v] : by_slice) rep.slices.emplace_back(s, mean_of(v));
  for (const auto& [k, v] : axes) rep.by_axis.emplace_back(k.first, k.second, mean_of(v));
  return rep;
}

namespace {

constexpr const char* kMetricHeader = "sr,osr,spl,cr,csr,icp,ps,episode_time,explored_area";

std::string metric_cells(double sr, double osr, double spl, double cr, double csr_v, double icp_v, double ps_v,
                         double time, double area) {
  return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", sr, osr, spl, cr, csr_v, icp_v,
                     ps_v, time, area);
}

std::string means_cells(const MetricMeans& m) {
  return metric_cells(m.sr, m.osr, m.spl, m.cr, m.csr, m.icp, m.ps, m.episode_time, m.explored_area);
}

json means_json(const MetricMeans& m) {
  return {{"count", m.count}, {"sr", m.sr},   {"osr", m.osr}, {"spl", m.spl},
          {"cr", m.cr},       {"csr", m.csr}, {"icp", m.icp}, {"ps", m.ps},
          {"episode_time", m.episode_time},   {"explored_area_m2", m.explored_area}};
}

}  // namespace

std::string report_csv(const MetricReport& report) {
  std::string out = fmt::format(
      "episode_id,scene_id,task_type,instruction_level,scene_complexity,path_complexity,done_reason,failed,steps,{}\n",
      kMetricHeader);
  for (const auto& r : report.rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.episode_id, r.scene_id, to_string(r.slice.task_type),
                       to_string(r.slice.instruction_level), to_string(r.slice.scene_complexity),
                       to_string(r.slice.path_complexity), r.done_reason, r.failed ? 1 : 0, r.steps,
                       metric_cells(r.sr, r.osr, r.spl, r.cr, r.csr, r.icp, r.ps, r.episode_time, r.explored_area));
  return out;
}

std::string slices_csv(const MetricReport& report) {
  std::string out = fmt::format("axis,value,count,{}\n", kMetricHeader);
  for (const auto& [axis, value, m] : report.by_axis)
    out += fmt::format("{},{},{},{}\n", axis, value, m.count, means_cells(m));
  for (const auto& [s, m] : report.slices) out += fmt::format("slice,{},{},{}\n", s.key(), m.count, means_cells(m));
  return out;
}

json report_json(const MetricReport& report, const MetricConfig& config, const std::string& config_hash) {
  json slices = json::array();
  for (const auto& [s, m] : report.slices) {
    json j = means_json(m);
    j["task_type"] = to_string(s.task_type);
    j["instruction_level"] = to_string(s.instruction_level);
    j["scene_complexity"] = to_string(s.scene_complexity);
    j["path_complexity"] = to_string(s.path_complexity);
    slices.push_back(j);
  }
  json axes = json::object();
  for (const auto& [axis, value, m] : report.by_axis) axes[axis][value] = means_json(m);
  json failures = json::array();
  for (const auto& r : report.rows)
    if (r.failed) failures.push_back({{"episode_id", r.episode_id}, {"reason", r.failure}});
  json cfg = {{"r_tol", config.r_tol},
              {"require_stop", config.require_stop},
              {"icp_mode", config.icp_mode == IcpMode::binary ? "binary" : "depth"},
              {"explore_cell_m", config.explore_cell},
              {"nogoal_time_cap_s", config.nogoal_time_cap}};
  if (config.success_radius) cfg["success_radius"] = *config.success_radius;
  return {{"config_hash", config_hash}, {"metric_config", cfg},  {"overall", means_json(report.overall)},
          {"slices", slices},           {"by_axis", axes},       {"failures", failures},
          {"partial_failure", !failures.empty()}};
}

}  // namespace gsnav
