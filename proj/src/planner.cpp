#include "gsnav/planner.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace gsnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;

// Felzenszwalb-Huttenlocher lower envelope of parabolas, in place.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == kInf ? kInf : dq * dq + f[v[k]];
  }
}

}  // namespace

ClearanceField distance_transform(const OccupancyGrid& grid) {
  if (grid.width <= 0 || grid.height <= 0) throw ValidationError("distance_transform: empty grid");
  // Pad by one blocked cell on every side.
  const int w = grid.width + 2;
  const int h = grid.height + 2;
  std::vector<double> sq(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      sq[static_cast<std::size_t>(y + 1) * w + (x + 1)] = grid.blocked(x, y) ? 0.0 : kInf;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq[static_cast<std::size_t>(y) * w + x] = d[x];
  }

  ClearanceField out;
  out.width = grid.width;
  out.height = grid.height;
  out.resolution = grid.resolution;
  out.values.resize(grid.cells.size());
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      out.values[grid.index(x, y)] = std::sqrt(sq[static_cast<std::size_t>(y + 1) * w + (x + 1)]) * grid.resolution;
  return out;
}

double step_cost(const PlanCost& cost, double step_len, double clearance, bool outside_preferred) {
  double c = cost.w_dist * step_len;
  if (cost.w_narrow > 0.0 && cost.clearance_soft > 0.0)
    c += cost.w_narrow * std::max(0.0, cost.clearance_soft - clearance) / cost.clearance_soft * step_len;
  if (cost.w_area > 0.0 && outside_preferred) c += cost.w_area * step_len;
  return c;
}

std::vector<Vec2> simplify_collinear(const std::vector<Vec2>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec2> out{pts.front()};
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i] - out.back();
    const Vec2 b = pts[i + 1] - pts[i];
    // Cell centers are on a lattice: exact collinearity up to rounding.
    if (std::abs(cross2(a, b)) > 1e-9 * a.norm() * b.norm() || a.dot(b) < 0.0) out.push_back(pts[i]);
  }
  out.push_back(pts.back());
  return out;
}

namespace {

struct OpenEntry {
  double f;
  double h;
  std::size_t idx;
};

struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.idx > b.idx;
  }
};

constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

Cell endpoint_cell(const OccupancyGrid& grid, const Vec2& p, std::string_view which) {
  const auto c = grid.cell_of(p);
  if (!c) throw InvalidEndpointError(fmt::format("{} ({:.3f}, {:.3f}) is outside the grid", which, p.x(), p.y()));
  if (grid.blocked(c->x, c->y))
    throw InvalidEndpointError(fmt::format("{} ({:.3f}, {:.3f}) is in a blocked cell", which, p.x(), p.y()));
  return *c;
}

}  // namespace

PlanResult astar(const OccupancyGrid& grid, const ClearanceField& clearance, const PlanCost& cost, const Vec2& start,
                 const Vec2& goal, const std::vector<std::uint8_t>* preferred_area) {
  const Cell s = endpoint_cell(grid, start, "start");
  const Cell g = endpoint_cell(grid, goal, "goal");
  const double res = grid.resolution;

  auto heuristic = [&](int x, int y) {
    const double dx = std::abs(x - g.x);
    const double dy = std::abs(y - g.y);
    return cost.w_dist * res * (std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy));
  };

  const std::size_t n = grid.cells.size();
  std::vector<double> g_cost(n, kInf);
  std::vector<std::size_t> parent(n, n);
  std::vector<char> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;

  const std::size_t s_idx = grid.index(s.x, s.y);
  const std::size_t g_idx = grid.index(g.x, g.y);
  g_cost[s_idx] = 0.0;
  open.push({heuristic(s.x, s.y), heuristic(s.x, s.y), s_idx});

  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    if (closed[cur.idx]) continue;
    closed[cur.idx] = 1;
    if (cur.idx == g_idx) break;
    const int cx = static_cast<int>(cur.idx % static_cast<std::size_t>(grid.width));
    const int cy = static_cast<int>(cur.idx / static_cast<std::size_t>(grid.width));
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + kDx[k];
      const int ny = cy + kDy[k];
      if (!grid.free(nx, ny)) continue;
      const std::size_t ni = grid.index(nx, ny);
      if (closed[ni]) continue;
      const double len = (k < 4 ? 1.0 : kSqrt2) * res;
      const bool outside = preferred_area != nullptr && (*preferred_area)[ni] == 0;
      const double tentative = g_cost[cur.idx] + step_cost(cost, len, clearance.values[ni], outside);
      if (tentative < g_cost[ni]) {
        g_cost[ni] = tentative;
        parent[ni] = cur.idx;
        const double h = heuristic(nx, ny);
        open.push({tentative + h, h, ni});
      }
    }
  }

  if (!closed[g_idx])
    throw UnreachableError(fmt::format("no path from ({:.3f}, {:.3f}) to ({:.3f}, {:.3f})", start.x(), start.y(),
                                       goal.x(), goal.y()));

  PlanResult result;
  result.cost = g_cost[g_idx];
  for (std::size_t i = g_idx; i != n; i = parent[i]) {
    result.cells.push_back({static_cast<int>(i % static_cast<std::size_t>(grid.width)),
                            static_cast<int>(i / static_cast<std::size_t>(grid.width))});
    if (i == s_idx) break;
  }
  std::reverse(result.cells.begin(), result.cells.end());
  std::vector<Vec2> centers;
  centers.reserve(result.cells.size());
  for (const auto& c : result.cells) centers.push_back(grid.center(c));
  result.path.waypoints = simplify_collinear(centers);
  return result;
}

std::vector<double> geodesic_field(const OccupancyGrid& grid, Cell from) {
  const std::size_t n = grid.cells.size();
  std::vector<double> dist(n, kInf);
  if (!grid.free(from.x, from.y)) return dist;
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[grid.index(from.x, from.y)] = 0.0;
  pq.push({0.0, grid.index(from.x, from.y)});
  while (!pq.empty()) {
    const auto [d, idx] = pq.top();
    pq.pop();
    if (d > dist[idx]) continue;
    const int cx = static_cast<int>(idx % static_cast<std::size_t>(grid.width));
    const int cy = static_cast<int>(idx / static_cast<std::size_t>(grid.width));
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + kDx[k];
      const int ny = cy + kDy[k];
      if (!grid.free(nx, ny)) continue;
      const std::size_t ni = grid.index(nx, ny);
      const double nd = d + (k < 4 ? 1.0 : kSqrt2) * grid.resolution;
      if (nd < dist[ni]) {
        dist[ni] = nd;
        pq.push({nd, ni});
      }
    }
  }
  return dist;
}

namespace {

double distance_to_footprint(const Vec2& p, const ObjectFootprint& fp) {
  double d = kInf;
  for (const auto& m : fp.masks) d = std::min(d, std::max(0.0, signed_distance(p, m)));
  return d;
}

}  // namespace

EndpointSample sample_endpoints(const Scene& scene, const SemanticTopDownMap& map, const OccupancyGrid& grid,
                                const ClearanceField& clearance, const EndpointConstraints& constraints, Rng& rng) {
  // Candidate cells per room: free, inside the room, with enough clearance.
  std::vector<std::vector<Cell>> room_cells(scene.rooms.size());
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x) {
      if (grid.blocked(x, y) || clearance.at(x, y) < constraints.min_safety) continue;
      const int room = scene.room_at(grid.center({x, y}));
      if (room >= 0) room_cells[static_cast<std::size_t>(room)].push_back({x, y});
    }

  std::vector<const ObjectFootprint*> targets;
  for (const auto& obj : scene.objects) {
    if (obj.door_state) continue;
    const auto it = map.footprints.find(obj.instance_id);
    if (it != map.footprints.end()) targets.push_back(&it->second);
  }
  if (targets.empty()) throw ExhaustionError("sample_endpoints: scene has no target instances");

  std::map<std::string, std::vector<Cell>> goal_cache;
  auto goal_cells = [&](const ObjectFootprint& fp) -> const std::vector<Cell>& {
    auto [it, inserted] = goal_cache.try_emplace(fp.instance_id);
    if (inserted)
      for (const auto& cells : room_cells)
        for (const auto& c : cells)
          if (distance_to_footprint(grid.center(c), fp) <= constraints.goal_reach) it->second.push_back(c);
    return it->second;
  };

  for (std::size_t attempt = 0; attempt < constraints.max_attempts; ++attempt) {
    const ObjectFootprint& target = *targets[rng.below(targets.size())];
    const auto& goals = goal_cells(target);
    if (goals.empty()) continue;
    const Cell goal = goals[rng.below(goals.size())];
    const int goal_room = scene.room_at(grid.center(goal));

    std::vector<int> start_rooms;
    for (int r = 0; r < static_cast<int>(room_cells.size()); ++r) {
      if (room_cells[static_cast<std::size_t>(r)].empty()) continue;
      if (constraints.distinct_rooms && scene.rooms.size() > 1 && r == goal_room) continue;
      start_rooms.push_back(r);
    }
    if (start_rooms.empty()) continue;
    const int start_room = start_rooms[rng.below(start_rooms.size())];
    const auto& cells = room_cells[static_cast<std::size_t>(start_room)];
    const Cell start = cells[rng.below(cells.size())];

    const auto field = geodesic_field(grid, goal);
    const double geo = field[grid.index(start.x, start.y)];
    if (!std::isfinite(geo) || geo < constraints.min_geodesic) continue;

    EndpointSample out;
    out.start = grid.center(start);
    out.goal = grid.center(goal);
    out.target_instance = target.instance_id;
    out.start_room = start_room;
    out.goal_room = goal_room;
    out.geodesic = geo;
    return out;
  }
  throw ExhaustionError(fmt::format("sample_endpoints: no valid pair after {} attempts", constraints.max_attempts));
}

}  // namespace gsnav
