#pragma once

#include "gsnav/episode.hpp"
#include "gsnav/polygon_set.hpp"
#include "gsnav/semantic_map.hpp"
#include "gsnav/trajectory_log.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

enum class IcpMode { binary, depth };

struct MetricConfig {
  double r_tol = 1.5;
  // Overrides every episode's goal radius when set.
  std::optional<double> success_radius;
  bool require_stop = true;
  IcpMode icp_mode = IcpMode::binary;
  double explore_cell = 0.5;
  double nogoal_time_cap = 120.0;
};

// Reference path buffered by r_tol. Membership is decided analytically
// (distance to the polyline); `region` is the polygonal buffer for export.
struct Corridor {
  Path2 reference;
  double r_tol = 1.5;
  Region region;

  [[nodiscard]] bool contains(const Vec2& p) const;
};

Corridor make_corridor(const Path2& reference, double r_tol);

using TaskCondition = std::function<bool(const LogSample&)>;

double csr(const TrajectoryLog& log, const Corridor& corridor, const TaskCondition& condition = {});
double icp(const TrajectoryLog& log, IcpMode mode = IcpMode::binary);
double ps(const TrajectoryLog& log);
double agent_path_length(const TrajectoryLog& log);

struct StandardMetrics {
  double sr = 0.0;
  double osr = 0.0;
  double spl = 0.0;
  double cr = 0.0;
};

StandardMetrics standard_metrics(const TrajectoryLog& log, const Episode& episode, const MetricConfig& config = {});

struct NogoalMetrics {
  double episode_time = 0.0;  // s
  double explored_area = 0.0;  // m^2
};

// Exploration cells are explore_cell wide, anchored at the grid origin.
NogoalMetrics nogoal_metrics(const TrajectoryLog& log, const OccupancyGrid& grid, const MetricConfig& config = {});

struct EvalSlice {
  TaskType task_type = TaskType::VLN;
  InstructionLevel instruction_level = InstructionLevel::low;
  SceneComplexity scene_complexity = SceneComplexity::mid;
  PathComplexity path_complexity = PathComplexity::mid;

  [[nodiscard]] std::string key() const;
  friend auto operator<=>(const EvalSlice&, const EvalSlice&) = default;
};

EvalSlice slice_of(const Episode& episode);

struct EpisodeScore {
  std::string episode_id;
  std::string scene_id;
  EvalSlice slice;
  std::string done_reason;
  bool failed = false;
  std::string failure;
  std::size_t steps = 0;
  double sr = 0.0, osr = 0.0, spl = 0.0, cr = 0.0;
  double csr = 0.0, icp = 0.0, ps = 0.0;
  double episode_time = 0.0, explored_area = 0.0;
};

EpisodeScore score_episode(const TrajectoryLog& log, const Episode& episode, const OccupancyGrid& grid,
                           const MetricConfig& config = {});

struct MetricMeans {
  std::size_t count = 0;
  double sr = 0.0, osr = 0.0, spl = 0.0, cr = 0.0, csr = 0.0, icp = 0.0, ps = 0.0;
  double episode_time = 0.0, explored_area = 0.0;
};

MetricMeans mean_of(const std::vector<const EpisodeScore*>& rows);

struct MetricReport {
  std::vector<EpisodeScore> rows;  // episode order
  MetricMeans overall;
  std::vector<std::pair<EvalSlice, MetricMeans>> slices;
  // axis name -> value -> means
  std::vector<std::tuple<std::string, std::string, MetricMeans>> by_axis;
};

MetricReport aggregate(std::vector<EpisodeScore> rows);

std::string report_csv(const MetricReport& report);
std::string slices_csv(const MetricReport& report);
nlohmann::json report_json(const MetricReport& report, const MetricConfig& config, const std::string& config_hash);

}  // namespace gsnav
