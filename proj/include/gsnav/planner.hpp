#pragma once

#include "gsnav/rng.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/semantic_map.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

struct PlanCost {
  double w_dist = 1.0;
  double w_narrow = 2.0;
  double w_area = 0.5;
  double clearance_soft = 0.6;  // m
};

struct ClearanceField {
  int width = 0;
  int height = 0;
  double resolution = 1.0;
  std::vector<double> values;  // m, row-major

  [[nodiscard]] double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

struct Path2 {
  std::vector<Vec2> waypoints;
  [[nodiscard]] double length() const { return polyline_length(waypoints); }
};

struct PlanResult {
  Path2 path;            // collinear-simplified cell centers
  std::vector<Cell> cells;  // full cell sequence
  double cost = 0.0;
};

// Exact Euclidean distance transform (cell-center to cell-center, in meters).
// Cells outside the grid count as blocked.
ClearanceField distance_transform(const OccupancyGrid& grid);

// Per-step cost of entering `to` from a neighbour at distance step_len.
double step_cost(const PlanCost& cost, double step_len, double clearance, bool outside_preferred);

// 8-connected A*. preferred_area, when given, is a per-cell mask (1 = inside).
PlanResult astar(const OccupancyGrid& grid, const ClearanceField& clearance, const PlanCost& cost, const Vec2& start,
                 const Vec2& goal, const std::vector<std::uint8_t>* preferred_area = nullptr);

// Drops interior waypoints that lie on the line through their neighbours.
std::vector<Vec2> simplify_collinear(const std::vector<Vec2>& pts);

struct EndpointConstraints {
  double min_geodesic = 2.0;  // m
  double min_safety = 0.3;    // m clearance at both ends
  double goal_reach = 1.0;    // max distance from goal to target footprint
  bool distinct_rooms = true;
  std::size_t max_attempts = 2000;
};

struct EndpointSample {
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  std::string target_instance;
  int start_room = -1;
  int goal_room = -1;
  double geodesic = 0.0;
};

// Unweighted 8-connected geodesic distances (m) from a cell; +inf where unreachable.
std::vector<double> geodesic_field(const OccupancyGrid& grid, Cell from);

EndpointSample sample_endpoints(const Scene& scene, const SemanticTopDownMap& map, const OccupancyGrid& grid,
                                const ClearanceField& clearance, const EndpointConstraints& constraints, Rng& rng);

}  // namespace gsnav
