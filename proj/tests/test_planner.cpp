#include "gsnav/error.hpp"
#include "gsnav/planner.hpp"
#include "gsnav/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <limits>
#include <queue>
#include <set>

using namespace gsnav;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

OccupancyGrid make_grid(int w, int h, double res = 1.0) {
  OccupancyGrid g;
  g.width = w;
  g.height = h;
  g.resolution = res;
  g.cells.assign(static_cast<std::size_t>(w * h), 0);
  return g;
}

OccupancyGrid random_grid(Rng& rng, int w, int h, double density, double res = 1.0) {
  auto g = make_grid(w, h, res);
  for (auto& c : g.cells) c = rng.uniform() < density ? 1 : 0;
  return g;
}

// Brute force: nearest blocked cell, with a ring of blocked cells just outside the grid.
double brute_clearance(const OccupancyGrid& g, int x, int y) {
  double best = kInf;
  for (int by = -1; by <= g.height; ++by)
    for (int bx = -1; bx <= g.width; ++bx) {
      const bool outside = !g.in_bounds(bx, by);
      if (!outside && !g.blocked(bx, by)) continue;
      best = std::min(best, std::hypot(bx - x, by - y) * g.resolution);
    }
  return best;
}

// Plain Dijkstra over the same 8-neighbourhood and step costs.
double dijkstra(const OccupancyGrid& g, const ClearanceField& cl, const PlanCost& cost, Cell s, Cell t) {
  std::vector<double> dist(g.cells.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  dist[g.index(s.x, s.y)] = 0;
  q.push({0.0, g.index(s.x, s.y)});
  while (!q.empty()) {
    const auto [d, i] = q.top();
    q.pop();
    if (d > dist[i]) continue;
    const int x = static_cast<int>(i % g.width), y = static_cast<int>(i / g.width);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dy == 0) || !g.free(x + dx, y + dy)) continue;
        const std::size_t j = g.index(x + dx, y + dy);
        const double len = std::hypot(dx, dy) * g.resolution;
        const double nd = d + step_cost(cost, len, cl.values[j], false);
        if (nd < dist[j]) {
          dist[j] = nd;
          q.push({nd, j});
        }
      }
  }
  return dist[g.index(t.x, t.y)];
}

double path_cost(const OccupancyGrid& g, const ClearanceField& cl, const PlanCost& cost, const std::vector<Cell>& cells) {
  double c = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const double len = std::hypot(cells[i].x - cells[i - 1].x, cells[i].y - cells[i - 1].y) * g.resolution;
    c += step_cost(cost, len, cl.at(cells[i].x, cells[i].y), false);
  }
  return c;
}

}  // namespace

TEST_CASE("distance transform basics") {
  auto g = make_grid(7, 7);
  g.cells[g.index(3, 3)] = 1;
  const auto cl = distance_transform(g);
  CHECK(cl.at(3, 3) == 0.0);
  CHECK(cl.at(4, 3) == doctest::Approx(1.0));
  CHECK(cl.at(4, 4) == doctest::Approx(std::sqrt(2.0)));
  const auto empty = distance_transform(make_grid(5, 5));
  CHECK(empty.at(0, 0) == doctest::Approx(1.0));
  CHECK(empty.at(2, 2) == doctest::Approx(3.0));
  CHECK(empty.at(1, 3) == doctest::Approx(2.0));
}

TEST_CASE("distance transform equals brute force") {
  Rng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const double res = trial % 2 ? 0.05 : 1.0;
    const auto g = random_grid(rng, 20, 20, rng.uniform(0.0, 0.4), res);
    const auto cl = distance_transform(g);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x) CHECK(std::abs(cl.at(x, y) - brute_clearance(g, x, y)) <= 1e-9);
  }
}

TEST_CASE("empty grid diagonal") {
  const auto g = make_grid(5, 5);
  const auto cl = distance_transform(g);
  PlanCost cost;
  cost.w_narrow = 0;
  cost.w_area = 0;
  const auto r = astar(g, cl, cost, {0.5, 0.5}, {4.5, 4.5});
  CHECK(std::abs(r.cost - 4.0 * std::sqrt(2.0)) <= 1e-9);
  CHECK(r.cells.size() == 5);
  CHECK(r.path.waypoints.size() == 2);
  CHECK(r.path.length() == doctest::Approx(4.0 * std::sqrt(2.0)));
}

TEST_CASE("A* matches Dijkstra on random grids") {
  Rng rng(99);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_grid(rng, 50, 50, 0.25);
    const Cell s{static_cast<int>(rng.below(50)), static_cast<int>(rng.below(50))};
    const Cell t{static_cast<int>(rng.below(50)), static_cast<int>(rng.below(50))};
    g.cells[g.index(s.x, s.y)] = 0;
    g.cells[g.index(t.x, t.y)] = 0;
    const auto cl = distance_transform(g);
    PlanCost cost;
    if (trial % 2) {
      cost.w_narrow = 0;
      cost.w_area = 0;
    } else {
      cost.clearance_soft = 3.0;
    }
    const double oracle = dijkstra(g, cl, cost, s, t);
    if (!std::isfinite(oracle)) {
      CHECK_THROWS_AS(astar(g, cl, cost, g.center(s), g.center(t)), UnreachableError);
      continue;
    }
    const auto r = astar(g, cl, cost, g.center(s), g.center(t));
    CHECK(std::abs(r.cost - oracle) <= 1e-9);
    CHECK(std::abs(path_cost(g, cl, cost, r.cells) - r.cost) <= 1e-9);
    CHECK(r.cells.front() == s);
    CHECK(r.cells.back() == t);
    for (const auto& c : r.cells) CHECK_FALSE(g.blocked(c.x, c.y));
    for (std::size_t i = 1; i < r.cells.size(); ++i)
      CHECK(std::max(std::abs(r.cells[i].x - r.cells[i - 1].x), std::abs(r.cells[i].y - r.cells[i - 1].y)) == 1);
    ++compared;
  }
  CHECK(compared > 50);
}

TEST_CASE("A* beats randomized search") {
  Rng rng(5);
  const auto g = random_grid(rng, 15, 15, 0.0);
  const auto cl = distance_transform(g);
  const PlanCost cost;
  const auto r = astar(g, cl, cost, {0.5, 0.5}, {14.5, 9.5});
  for (int walk = 0; walk < 200; ++walk) {
    // Biased random walk toward the goal, never revisiting.
    std::vector<Cell> cells{{0, 0}};
    std::set<std::pair<int, int>> seen{{0, 0}};
    while (!(cells.back() == Cell{14, 9}) && cells.size() < 400) {
      const Cell c = cells.back();
      std::vector<Cell> options;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell n{c.x + dx, c.y + dy};
          if ((dx || dy) && g.free(n.x, n.y) && !seen.count({n.x, n.y})) options.push_back(n);
        }
      if (options.empty()) break;
      std::sort(options.begin(), options.end(), [](Cell a, Cell b) {
        return std::hypot(a.x - 14, a.y - 9) < std::hypot(b.x - 14, b.y - 9);
      });
      const Cell n = options[rng.uniform() < 0.7 ? 0 : rng.below(options.size())];
      seen.insert({n.x, n.y});
      cells.push_back(n);
    }
    if (cells.back() == Cell{14, 9}) CHECK(r.cost <= path_cost(g, cl, cost, cells) + 1e-12);
  }
}

TEST_CASE("clearance penalty prefers the wide corridor") {
  // Wall across the middle with a one-cell slit and a wide opening at the bottom.
  auto g = make_grid(40, 21, 0.1);
  for (int y = 9; y < 21; ++y)
    for (int x = 15; x < 25; ++x) g.cells[g.index(x, y)] = 1;
  g.cells[g.index(15, 15)] = 0;
  for (int x = 15; x < 25; ++x) g.cells[g.index(x, 15)] = 0;
  const auto cl = distance_transform(g);
  const Vec2 s = g.center({2, 15}), t = g.center({37, 15});
  auto through_slit = [](const PlanResult& r) {
    return std::any_of(r.cells.begin(), r.cells.end(), [](Cell c) { return c.x == 20 && c.y == 15; });
  };
  PlanCost plain;
  plain.w_narrow = 0;
  plain.w_area = 0;
  const auto short_way = astar(g, cl, plain, s, t);
  CHECK(through_slit(short_way));
  PlanCost careful;
  careful.w_narrow = 20;
  careful.w_area = 0;
  const auto long_way = astar(g, cl, careful, s, t);
  CHECK_FALSE(through_slit(long_way));
  CHECK(long_way.path.length() > short_way.path.length());
  // By hand: the slit path pays the narrow penalty on every slit cell, the detour does not.
  CHECK(path_cost(g, cl, careful, short_way.cells) > long_way.cost);
}

TEST_CASE("endpoint errors") {
  auto g = make_grid(5, 5);
  g.cells[g.index(2, 2)] = 1;
  const auto cl = distance_transform(g);
  CHECK_THROWS_AS(astar(g, cl, {}, {2.5, 2.5}, {0.5, 0.5}), InvalidEndpointError);
  CHECK_THROWS_AS(astar(g, cl, {}, {0.5, 0.5}, {9.5, 0.5}), InvalidEndpointError);
}

TEST_CASE("closed door makes the other room unreachable") {
  Scene s;
  s.scene_id = "doorway";
  s.rooms = {{"west", "hall", testing::rect(0, 0, 5, 4)}, {"east", "study", testing::rect(5, 0, 10, 4)}};
  const auto outline = testing::rect(0, 0, 10, 4);
  for (int i = 0; i < 4; ++i) s.walls.push_back({outline[i], outline[(i + 1) % 4]});
  s.walls.push_back({{5, 0}, {5, 1.5}});
  s.walls.push_back({{5, 2.5}, {5, 4}});
  auto door = testing::make_box("door_1", "door", {4.98, 1.5, 0}, {5.02, 2.5, 2.0});
  testing::add_object(s, door);
  const auto closed = testing::world_of(s);
  CHECK_THROWS_AS(astar(closed.grid, closed.clearance, {}, {2, 2}, {8, 2}), UnreachableError);
  s.objects[0].door_state = DoorState::open;
  const auto open = testing::world_of(s);
  const auto r = astar(open.grid, open.clearance, {}, {2, 2}, {8, 2});
  CHECK(r.path.length() == doctest::Approx(6.0).epsilon(0.02));
}

TEST_CASE("paths stay in free cells with positive clearance") {
  const auto& w = testing::apartment();
  Rng rng(77);
  std::vector<Cell> free;
  for (int y = 0; y < w.grid.height; ++y)
    for (int x = 0; x < w.grid.width; ++x)
      if (!w.grid.blocked(x, y)) free.push_back({x, y});
  for (int trial = 0; trial < 20; ++trial) {
    const Cell a = free[rng.below(free.size())], b = free[rng.below(free.size())];
    PlanResult r;
    try {
      r = astar(w.grid, w.clearance, {}, w.grid.center(a), w.grid.center(b));
    } catch (const UnreachableError&) {
      continue;
    }
    for (const auto& c : r.cells) {
      CHECK_FALSE(w.grid.blocked(c.x, c.y));
      CHECK(w.clearance.at(c.x, c.y) > 0.0);
    }
    for (const auto& p : r.path.waypoints) {
      const auto c = w.grid.cell_of(p);
      REQUIRE(c);
      CHECK(w.clearance.at(c->x, c->y) > 0.0);
    }
    const auto again = astar(w.grid, w.clearance, {}, w.grid.center(a), w.grid.center(b));
    CHECK(again.cells == r.cells);
  }
}

TEST_CASE("preferred area adds cost outside") {
  const auto g = make_grid(10, 3);
  const auto cl = distance_transform(g);
  PlanCost cost;
  cost.w_narrow = 0;
  cost.w_area = 0.5;
  std::vector<std::uint8_t> pref(g.cells.size(), 1);
  const auto inside = astar(g, cl, cost, {0.5, 1.5}, {9.5, 1.5}, &pref);
  CHECK(inside.cost == doctest::Approx(9.0));
  std::fill(pref.begin(), pref.end(), 0);
  const auto outside = astar(g, cl, cost, {0.5, 1.5}, {9.5, 1.5}, &pref);
  CHECK(outside.cost == doctest::Approx(13.5));
}

TEST_CASE("collinear simplification") {
  const std::vector<Vec2> pts = {{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 2}, {4, 3}};
  const auto s = simplify_collinear(pts);
  REQUIRE(s.size() == 4);
  CHECK(s[1] == Vec2(2, 0));
  CHECK(s[2] == Vec2(4, 2));
  CHECK(polyline_length(s) == doctest::Approx(polyline_length(pts)));
}

TEST_CASE("geodesic field") {
  auto g = make_grid(6, 6);
  for (int y = 0; y < 5; ++y) g.cells[g.index(3, y)] = 1;
  const auto f = geodesic_field(g, {0, 0});
  CHECK(f[g.index(2, 0)] == doctest::Approx(2.0));
  CHECK(f[g.index(1, 1)] == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::isinf(f[g.index(3, 0)]));
  // Around the wall through the gap at (3, 5): 3 diagonals + 2 straight, then 1 diagonal + 4 straight.
  CHECK(f[g.index(4, 0)] == doctest::Approx(4 * std::sqrt(2.0) + 6));
}

TEST_CASE("endpoint sampling") {
  Scene two = make_two_room();
  OccupancyParams op;
  op.resolution = 0.1;
  const auto w = testing::world_of(two, op);

  SUBCASE("safety margin") {
    Rng rng(3);
    EndpointConstraints c;
    c.min_safety = 0.5;
    for (int i = 0; i < 50; ++i) {
      const auto e = sample_endpoints(w.scene, w.map, w.grid, w.clearance, c, rng);
      const auto a = w.grid.cell_of(e.start), b = w.grid.cell_of(e.goal);
      CHECK(w.clearance.at(a->x, a->y) >= 0.5);
      CHECK(w.clearance.at(b->x, b->y) >= 0.5);
      CHECK(e.geodesic >= c.min_geodesic);
      CHECK(e.start_room != e.goal_room);
    }
  }
  SUBCASE("both room orderings occur") {
    Rng rng(11);
    std::map<std::pair<int, int>, int> freq;
    for (int i = 0; i < 1000; ++i) {
      const auto e = sample_endpoints(w.scene, w.map, w.grid, w.clearance, {}, rng);
      ++freq[{e.start_room, e.goal_room}];
    }
    CHECK(freq[{0, 1}] > 0);
    CHECK(freq[{1, 0}] > 0);
    CHECK(freq[{0, 1}] + freq[{1, 0}] == 1000);
  }
  SUBCASE("impossible geodesic") {
    Rng rng(1);
    EndpointConstraints c;
    c.min_geodesic = 100.0;
    c.max_attempts = 100;
    CHECK_THROWS_AS(sample_endpoints(w.scene, w.map, w.grid, w.clearance, c, rng), ExhaustionError);
  }
  SUBCASE("seeded determinism") {
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) {
      const auto x = sample_endpoints(w.scene, w.map, w.grid, w.clearance, {}, a);
      const auto y = sample_endpoints(w.scene, w.map, w.grid, w.clearance, {}, b);
      CHECK(x.start == y.start);
      CHECK(x.goal == y.goal);
      CHECK(x.target_instance == y.target_instance);
    }
  }
}
