#include "gsnav/world.hpp"

namespace gsnav {

World make_world(Scene scene, std::vector<CollisionBody> bodies, const OccupancyParams& params) {
  World w;
  w.scene = std::move(scene);
  w.bodies = std::move(bodies);
  w.map = build_semantic_map(w.scene, w.bodies);
  w.occupancy_params = params;
  w.obstacles = build_obstacles(w.scene, w.bodies, w.map, params);
  w.grid = rasterize_obstacles(w.obstacles, w.map.bounds, params);
  w.clearance = distance_transform(w.grid);
  return w;
}

}  // namespace gsnav
