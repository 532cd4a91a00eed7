#pragma once

#include <json.hpp>
#include <string>

#include "rna/math.hpp"

namespace rna {

// Translucent proxy asset: a split base slab, two blocks and a sphere, all
// in one mesh instance with one translucent material.
nlohmann::json translucent_blocks_scene();

// Clump of polyline strands (strands * segments_per_strand cylinder
// segments) with the given azimuthal gain.
nlohmann::json fiber_clump_scene(int strands = 20, int segments_per_strand = 10, double azimuthal_gain = 1.0,
                                 uint64_t seed = 3);

// Replaces every instance's material with a neural material loaded from
// `asset_path` (relative to the scene file).
nlohmann::json with_neural_material(nlohmann::json scene, const std::string& asset_path);

nlohmann::json directional_light(const Vec3& direction, double irradiance = 1.0);

// Camera looking at `target` from `origin`.
nlohmann::json camera_json(const Vec3& origin, const Vec3& target, double fov_deg);

}  // namespace rna
