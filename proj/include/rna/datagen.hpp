#pragma once

#include <filesystem>
#include <json.hpp>
#include <vector>

#include "rna/image_io.hpp"
#include "rna/scene_desc.hpp"

namespace rna {

struct BakeConfig {
  int view_count = 400;
  int validation_views = 40;
  int resolution = 1024;
  int spp = 128;
  double camera_radius = 0;  // 0 = 2.5x the asset's bounding radius
  bool hemisphere_only = false;
  double clamp_direct = 20.0;
  double clamp_indirect = 10.0;
  int max_depth = 8;  // scattering vertices per path
  uint64_t seed = 1;
  int threads = 0;
};

// Throws ConfigError for out-of-range values.
void validate(const BakeConfig& config);

// Camera on a sphere around the asset centroid, looking at it, with a
// vertical FOV that frames the bounding sphere. `index` selects the stream.
Camera sample_camera(int index, const BakeConfig& config, const Bounds3& asset_bounds);

// Uniform on the sphere, or on the z >= 0 hemisphere.
Vec3 sample_light_direction(Rng& rng, bool hemisphere_only);

// Per-channel min(v, limit).
Rgb clamp_radiance(const Rgb& v, double limit);

struct TransportSample {
  bool hit = false;
  Hit primary;
  bool visible = false;  // unoccluded straight segment toward the light
  Rgb radiance;          // mean of clamped path samples
};

// Outgoing radiance along -ray at the first hit, under a unit-irradiance
// directional light from `light_dir` (world space), averaged over spp paths.
// A path's light contribution counts as direct when it arrives at the first
// scattering vertex; direct and summed indirect parts are clamped per path.
TransportSample trace_transport(const SceneDesc& scene, const Ray& ray, const Vec3& light_dir,
                                Rng& rng, const BakeConfig& config);

// Unoccluded test of the asset's own geometry from a hit toward a direction.
bool light_visible(const Scene& scene, const Hit& hit, const Vec3& wi);

// Bounds stored with the dataset (padded object-space asset bounds).
Bounds3 training_bounds(const SceneDesc& scene);

// Renders one slice. With `fixed_light` every pixel uses that direction,
// otherwise each pixel draws its own.
TrainingSlice render_slice(const SceneDesc& scene, const Camera& camera, int view_index,
                           const BakeConfig& config, const std::optional<Vec3>& fixed_light);

// Writes manifest.json, train/slice_NNNN.rnad and val/slice_NNNN.rnad.
void bake(const SceneDesc& scene, const BakeConfig& config, const std::filesystem::path& out_dir);

}  // namespace rna
