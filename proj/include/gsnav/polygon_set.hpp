#pragma once

#include "gsnav/geometry.hpp"

#include <span>
#include <vector>

namespace gsnav {

// A polygon with holes. Outer ring CCW, holes CW, rings not closed.
struct RegionPolygon {
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;
};

// A set of disjoint polygons (the union of whatever produced it).
using Region = std::vector<RegionPolygon>;

double region_area(const Region& region);
bool region_contains(const Region& region, const Vec2& p);

// Geometric union of CCW rings.
Region union_rings(std::span<const std::vector<Vec2>> rings);

// Inward buffer of a simple ring by distance d with mitred corners.
// Returns one ring per surviving component, CCW; empty if the ring collapses.
std::vector<std::vector<Vec2>> inward_offset_ring(std::span<const Vec2> ring, double d);

// Outward buffer of a polyline by radius r (round joins and caps).
Region buffer_polyline(std::span<const Vec2> pts, double r, int points_per_circle = 64);

}  // namespace gsnav
