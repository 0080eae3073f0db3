#pragma once

#include "gsnav/collision.hpp"
#include "gsnav/planner.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/semantic_map.hpp"

#include <vector>

namespace gsnav {

// Everything derived from one scene that planning and simulation read.
// Immutable once built; share freely between environment instances.
struct World {
  Scene scene;
  std::vector<CollisionBody> bodies;
  SemanticTopDownMap map;
  OccupancyParams occupancy_params;
  ObstacleSet obstacles;
  OccupancyGrid grid;
  ClearanceField clearance;
};

// Derives the map layers from a scene and its collision bodies.
World make_world(Scene scene, std::vector<CollisionBody> bodies, const OccupancyParams& params);

}  // namespace gsnav
