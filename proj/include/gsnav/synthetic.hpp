#pragma once

#include "gsnav/scene.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gsnav {

// Two rooms (living 6x4 m, kitchen 4x4 m) joined by a 1 m doorway, 12 objects,
// 5000 gaussians.
Scene make_apartment_small();

// Two empty-ish 5x4 m rooms joined by a 1.2 m gap, one table each.
Scene make_two_room();

// Closed square room with one crate in the middle.
Scene make_sealed_box(double size = 5.0);

std::vector<std::string> synthetic_scene_names();

// Throws UnknownNameError.
Scene make_synthetic_scene(std::string_view name);

}  // namespace gsnav
