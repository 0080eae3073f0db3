#include "gsnav/polygon_set.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/linestring.hpp>

namespace gsnav {

namespace bg = boost::geometry;

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
// Counter-clockwise, open rings to match the rest of the code.
using BgPolygon = bg::model::polygon<BgPoint, false, false>;
using BgMulti = bg::model::multi_polygon<BgPolygon>;
using BgLine = bg::model::linestring<BgPoint>;

BgPolygon to_bg(std::span<const Vec2> ring) {
  BgPolygon poly;
  for (const auto& p : ring) poly.outer().emplace_back(p.x(), p.y());
  bg::correct(poly);
  return poly;
}

std::vector<Vec2> from_bg_ring(const auto& ring) {
  std::vector<Vec2> out;
  for (const auto& p : ring) out.emplace_back(p.x(), p.y());
  return out;
}

Region from_bg(const BgMulti& multi) {
  Region region;
  for (const auto& poly : multi) {
    RegionPolygon rp;
    rp.outer = from_bg_ring(poly.outer());
    for (const auto& hole : poly.inners()) rp.holes.push_back(from_bg_ring(hole));
    region.push_back(std::move(rp));
  }
  return region;
}

}  // namespace

double region_area(const Region& region) {
  double a = 0.0;
  for (const auto& p : region) {
    a += std::abs(signed_area(p.outer));
    for (const auto& h : p.holes) a -= std::abs(signed_area(h));
  }
  return a;
}

bool region_contains(const Region& region, const Vec2& p) {
  for (const auto& poly : region) {
    if (!point_in_ring(p, poly.outer)) continue;
    bool in_hole = false;
    for (const auto& h : poly.holes) in_hole = in_hole || point_in_ring(p, h);
    if (!in_hole) return true;
  }
  return false;
}

Region union_rings(std::span<const std::vector<Vec2>> rings) {
  BgMulti acc;
  for (const auto& ring : rings) {
    BgMulti next;
    bg::union_(acc, to_bg(ring), next);
    acc = std::move(next);
  }
  return from_bg(acc);
}

std::vector<std::vector<Vec2>> inward_offset_ring(std::span<const Vec2> ring, double d) {
  if (d == 0.0) return {std::vector<Vec2>(ring.begin(), ring.end())};
  BgMulti input;
  input.push_back(to_bg(ring));
  BgMulti result;
  bg::buffer(input, result, bg::strategy::buffer::distance_symmetric<double>(-d),
             bg::strategy::buffer::side_straight(), bg::strategy::buffer::join_miter(),
             bg::strategy::buffer::end_flat(), bg::strategy::buffer::point_square());
  std::vector<std::vector<Vec2>> out;
  for (const auto& poly : result) {
    if (bg::area(poly) <= 1e-12) continue;
    out.push_back(from_bg_ring(poly.outer()));
  }
  return out;
}

Region buffer_polyline(std::span<const Vec2> pts, double r, int points_per_circle) {
  BgMulti result;
  const bg::strategy::buffer::distance_symmetric<double> dist(r);
  const bg::strategy::buffer::join_round join(points_per_circle);
  const bg::strategy::buffer::end_round end(points_per_circle);
  const bg::strategy::buffer::point_circle circle(points_per_circle);
  const bg::strategy::buffer::side_straight side;
  if (pts.size() == 1) {
    bg::buffer(BgPoint(pts[0].x(), pts[0].y()), result, dist, side, join, end, circle);
  } else {
    BgLine line;
    for (const auto& p : pts) line.emplace_back(p.x(), p.y());
    bg::buffer(line, result, dist, side, join, end, circle);
  }
  return from_bg(result);
}

}  // namespace gsnav
